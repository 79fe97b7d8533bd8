#pragma once

#include <stdexcept>

#include "adsym/poincare.hpp"

namespace adsym {

/// Truncated Taylor expansion of the extended flow about one state: each
/// component is a polynomial in the fictive time. Built by the classical
/// recursion x_{k+1} = f(x)_k / (k+1), where f(x)_k is the k-th Taylor
/// coefficient of the field evaluated on the partial series.
template <class T>
struct ExtendedSeries {
  Vec<Jet<T>> qbar;
  Vec<Jet<T>> pbar;
  int order = 0;

  /// State at fictive time h, truncating the series at order trunc.
  void eval(double h, int trunc, Vec<T>* q_out, Vec<T>* p_out) const {
    const int n = qbar.size();
    *q_out = Vec<T>(n);
    *p_out = Vec<T>(n);
    for (int i = 0; i < n; ++i) {
      (*q_out)[i] = qbar[i].eval(h, trunc);
      (*p_out)[i] = pbar[i].eval(h, trunc);
    }
  }
};

template <class PSys, class T>
ExtendedSeries<T> taylor_flow_series(const PSys& sys, const Vec<T>& qbar0,
                                     const Vec<T>& pbar0, int order) {
  if (order < 0 || order > Jet<T>::kMaxOrder)
    throw std::invalid_argument("taylor_flow_series: order out of [0,4]");
  const int n = qbar0.size();
  ExtendedSeries<T> s;
  s.order = order;
  s.qbar = Vec<Jet<T>>(n);
  s.pbar = Vec<Jet<T>>(n);
  for (int i = 0; i < n; ++i) {
    s.qbar[i] = Jet<T>::constant(qbar0[i], order);
    s.pbar[i] = Jet<T>::constant(pbar0[i], order);
  }
  for (int k = 0; k < order; ++k) {
    Vec<Jet<T>> qdot, pdot;
    sys.extended_field(s.qbar, s.pbar, &qdot, &pdot);
    const double inv = 1.0 / (k + 1);
    for (int i = 0; i < n; ++i) {
      s.qbar[i].coefficient(k + 1) = qdot[i].coefficient(k) * inv;
      s.pbar[i].coefficient(k + 1) = pdot[i].coefficient(k) * inv;
    }
  }
  return s;
}

/// One explicit Taylor step of order r on the extended system.
template <class PSys>
ExtendedState taylor_flow(const PSys& sys, const ExtendedState& x0, double h, int r) {
  if (r < 1 || r > Jetd::kMaxOrder)
    throw std::invalid_argument("taylor_flow: order out of [1,4]");
  const ExtendedSeries<double> s = taylor_flow_series(sys, x0.qbar, x0.pbar, r);
  ExtendedState out;
  s.eval(h, r, &out.qbar, &out.pbar);
  return out;
}

}  // namespace adsym

#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "adsym/core.hpp"

namespace adsym {

/// Monitor value g together with its partial derivatives. For scalar types
/// beyond double the partials are carried at the same order (jet partials
/// along a flow, dual partials along a seeded direction).
template <class S>
struct MonitorValue {
  S g{};
  Vec<S> grad_q;
  Vec<S> grad_p;
  S d_pt{};
};

/// Time-step monitor contract: a positive scalar field g(q, p, p^t) with
/// analytic partials, evaluable on jet- and dual-valued states.
template <class M>
concept TimeMonitor = requires(const M& m, const Vecd& v, double pt) {
  { m.evaluate(v, v, pt) } -> std::convertible_to<MonitorValue<double>>;
  { M::p_independent } -> std::convertible_to<bool>;
  { M::pt_dependent } -> std::convertible_to<bool>;
};

namespace detail {

template <class S>
void throw_positivity(const char* name, const Vec<S>& q, const Vec<S>& p, const S& g) {
  std::ostringstream msg;
  msg << name << ": non-positive monitor value g = " << value_of(g) << " at q = (";
  for (int i = 0; i < q.size(); ++i) msg << (i ? ", " : "") << value_of(q[i]);
  msg << "), p = (";
  for (int i = 0; i < p.size(); ++i) msg << (i ? ", " : "") << value_of(p[i]);
  msg << "); wrap with BoundedMonitor to cap the step instead";
  throw PositivityError(msg.str());
}

template <class S>
MonitorValue<S> checked(const char* name, const Vec<S>& q, const Vec<S>& p,
                        MonitorValue<S> mv) {
  const double g0 = value_of(mv.g);
  if (!(g0 > 0.0) || !std::isfinite(g0)) throw_positivity(name, q, p, mv.g);
  return mv;
}

}  // namespace detail

/// g == 1: recovers the fixed-step method in fictive time.
class UnitMonitor {
 public:
  static constexpr bool p_independent = true;
  static constexpr bool pt_dependent = false;

  template <class S>
  MonitorValue<S> evaluate(const Vec<S>& q, const Vec<S>& p, const S& /*pt*/) const {
    MonitorValue<S> mv;
    mv.g = S(1.0);
    mv.grad_q = Vec<S>(q.size());
    mv.grad_p = Vec<S>(p.size());
    return mv;
  }

  template <class S>
  MonitorValue<S> evaluate_unchecked(const Vec<S>& q, const Vec<S>& p, const S& pt) const {
    return evaluate(q, p, pt);
  }
};

/// g(q) = (q^T q)^gamma. gamma = 1 matches the equal-areas step law of the
/// two-body problem; gamma = 1/2 is the norm itself.
class PowerMonitor {
 public:
  static constexpr bool p_independent = true;
  static constexpr bool pt_dependent = false;

  explicit PowerMonitor(double gamma) : gamma_(gamma) {}

  double gamma() const { return gamma_; }

  template <class S>
  MonitorValue<S> evaluate_unchecked(const Vec<S>& q, const Vec<S>& p, const S&) const {
    using std::pow;
    MonitorValue<S> mv;
    S r2 = dot(q, q);
    mv.g = pow(r2, gamma_);
    mv.grad_q = q * (pow(r2, gamma_ - 1.0) * (2.0 * gamma_));
    mv.grad_p = Vec<S>(p.size());
    return mv;
  }

  template <class S>
  MonitorValue<S> evaluate(const Vec<S>& q, const Vec<S>& p, const S& pt) const {
    return detail::checked("PowerMonitor", q, p, evaluate_unchecked(q, p, pt));
  }

 private:
  double gamma_;
};

/// First-order truncation-error monitor for a separable system:
///   g(q) = tol / | (h^2/2) M^{-1} grad V(q) |.
/// The optional fourth-root form takes the 1/4 power of the same ratio.
template <SeparableSystem Sys>
class TruncationErrorMonitor {
 public:
  static constexpr bool p_independent = true;
  static constexpr bool pt_dependent = false;

  TruncationErrorMonitor(Sys sys, double tol, double h_nominal, bool fourth_root = false)
      : sys_(std::move(sys)), minv_(sys_.mass_inverse()), tol_(tol), h_(h_nominal),
        fourth_root_(fourth_root) {
    if (!(tol > 0.0) || !(h_nominal > 0.0))
      throw std::invalid_argument("TruncationErrorMonitor: tol and h must be positive");
  }

  template <class S>
  MonitorValue<S> evaluate_unchecked(const Vec<S>& q, const Vec<S>& p, const S&) const {
    using std::pow;
    const double c = tol_ / (0.5 * h_ * h_);
    Vec<S> u = apply(minv_, sys_.grad_potential(q));
    S nu = norm(u);
    MonitorValue<S> mv;
    mv.g = c / nu;
    // grad g = -(g / |u|^2) * hess V (M^{-1} u), using symmetry of both factors.
    Vec<S> hu = apply(sys_.hess_potential(q), apply(minv_, u));
    mv.grad_q = hu * (mv.g / (nu * nu) * -1.0);
    if (fourth_root_) {
      S g4 = pow(mv.g, 0.25);
      mv.grad_q = mv.grad_q * (0.25 * pow(mv.g, -0.75));
      mv.g = g4;
    }
    mv.grad_p = Vec<S>(p.size());
    return mv;
  }

  template <class S>
  MonitorValue<S> evaluate(const Vec<S>& q, const Vec<S>& p, const S& pt) const {
    return detail::checked("TruncationErrorMonitor", q, p, evaluate_unchecked(q, p, pt));
  }

 private:
  Sys sys_;
  Matd minv_;
  double tol_;
  double h_;
  bool fourth_root_;
};

/// Arclength parametrization monitor:
///   g(q) = (2 (H0 - V(q)) + grad V^T M^{-1} grad V)^{-1/2}.
template <SeparableSystem Sys>
class ArclengthMonitor {
 public:
  static constexpr bool p_independent = true;
  static constexpr bool pt_dependent = false;

  ArclengthMonitor(Sys sys, double energy0)
      : sys_(std::move(sys)), minv_(sys_.mass_inverse()), h0_(energy0) {}

  template <class S>
  MonitorValue<S> evaluate_unchecked(const Vec<S>& q, const Vec<S>& p, const S&) const {
    using std::pow;
    Vec<S> u = sys_.grad_potential(q);
    Vec<S> mu = apply(minv_, u);
    S s = 2.0 * (h0_ - sys_.potential(q)) + dot(u, mu);
    MonitorValue<S> mv;
    mv.g = pow(s, -0.5);
    // grad s = -2 grad V + 2 hess V M^{-1} grad V.
    Vec<S> gs = (apply(sys_.hess_potential(q), mu) - u) * 2.0;
    mv.grad_q = gs * (pow(s, -1.5) * -0.5);
    mv.grad_p = Vec<S>(p.size());
    return mv;
  }

  template <class S>
  MonitorValue<S> evaluate(const Vec<S>& q, const Vec<S>& p, const S& pt) const {
    return detail::checked("ArclengthMonitor", q, p, evaluate_unchecked(q, p, pt));
  }

 private:
  Sys sys_;
  Matd minv_;
  double h0_;
};

/// Reciprocal of the shifted Lagrangian:
///   g(q, p, p^t) = |p^t - L(q, M^{-1} p)|^{-1},  L(q, qdot) = qdot^T M qdot / 2 - V(q).
/// On the zero level set of the extended Hamiltonian this equals 1 / (2 T).
template <SeparableSystem Sys>
class EnergyLagrangianMonitor {
 public:
  static constexpr bool p_independent = false;
  static constexpr bool pt_dependent = true;

  explicit EnergyLagrangianMonitor(Sys sys)
      : sys_(std::move(sys)), minv_(sys_.mass_inverse()) {}

  template <class S>
  MonitorValue<S> evaluate_unchecked(const Vec<S>& q, const Vec<S>& p, const S& pt) const {
    using std::abs;
    Vec<S> mp = apply(minv_, p);
    S w = pt - (0.5 * dot(p, mp) - sys_.potential(q));
    const double sign = value_of(w) < 0.0 ? -1.0 : 1.0;
    MonitorValue<S> mv;
    mv.g = 1.0 / abs(w);
    S scale = (mv.g * mv.g) * -sign;  // d g / d w
    mv.grad_q = sys_.grad_potential(q) * scale;
    mv.grad_p = mp * (scale * -1.0);
    mv.d_pt = scale;
    return mv;
  }

  template <class S>
  MonitorValue<S> evaluate(const Vec<S>& q, const Vec<S>& p, const S& pt) const {
    return detail::checked("EnergyLagrangianMonitor", q, p, evaluate_unchecked(q, p, pt));
  }

 private:
  Sys sys_;
  Matd minv_;
};

/// Step-bounding wrapper g_hat = b (g + a) / (g + b) with a = dt_min / dtau
/// and b = dt_max / dtau. Total by construction: inner overflow saturates at
/// b, inner underflow at a, and a <= g_hat <= b always.
template <class Inner>
class BoundedMonitor {
 public:
  static constexpr bool p_independent = Inner::p_independent;
  static constexpr bool pt_dependent = Inner::pt_dependent;

  BoundedMonitor(Inner inner, double dt_min, double dt_max, double dtau)
      : inner_(std::move(inner)), a_(dt_min / dtau), b_(dt_max / dtau) {
    if (!(dt_min > 0.0) || !(dt_min < dt_max) || !(dtau > 0.0))
      throw std::invalid_argument("BoundedMonitor: need 0 < dt_min < dt_max and dtau > 0");
  }

  /// Bounds expressed directly as monitor-value limits a < b.
  static BoundedMonitor from_ratios(Inner inner, double a, double b) {
    return BoundedMonitor(std::move(inner), a, b, 1.0);
  }

  double lower() const { return a_; }
  double upper() const { return b_; }

  template <class S>
  MonitorValue<S> evaluate(const Vec<S>& q, const Vec<S>& p, const S& pt) const {
    MonitorValue<S> mv = inner_.evaluate_unchecked(q, p, pt);
    if (!std::isfinite(value_of(mv.g)) || value_of(mv.g) > 1e100) {
      // Inner monitor blew up; clamp to the upper bound.
      MonitorValue<S> out;
      out.g = S(b_);
      out.grad_q = Vec<S>(q.size());
      out.grad_p = Vec<S>(p.size());
      return out;
    }
    MonitorValue<S> out;
    out.g = (mv.g + a_) * (b_ / (mv.g + b_));
    if (!grads_finite(mv)) {
      out.grad_q = Vec<S>(q.size());
      out.grad_p = Vec<S>(p.size());
      return out;
    }
    S k = (mv.g + b_) * (mv.g + b_);
    k = (b_ * (b_ - a_)) / k;
    out.grad_q = mv.grad_q * k;
    out.grad_p = mv.grad_p * k;
    out.d_pt = mv.d_pt * k;
    return out;
  }

  template <class S>
  MonitorValue<S> evaluate_unchecked(const Vec<S>& q, const Vec<S>& p, const S& pt) const {
    return evaluate(q, p, pt);
  }

 private:
  template <class S>
  static bool grads_finite(const MonitorValue<S>& mv) {
    for (int i = 0; i < mv.grad_q.size(); ++i)
      if (!std::isfinite(value_of(mv.grad_q[i]))) return false;
    for (int i = 0; i < mv.grad_p.size(); ++i)
      if (!std::isfinite(value_of(mv.grad_p[i]))) return false;
    return std::isfinite(value_of(mv.d_pt));
  }

  Inner inner_;
  double a_;
  double b_;
};

}  // namespace adsym

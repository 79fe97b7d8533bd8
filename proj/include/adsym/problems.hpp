#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "adsym/core.hpp"

namespace adsym {

/// Planar two-body problem in nondimensional form: unit gravitational
/// parameter, unit reduced mass, unit semi-major axis. With the perihelion
/// start below this puts the energy at -1/2 and the period at 2*pi for every
/// eccentricity.
class KeplerProblem {
 public:
  int dimension() const { return 2; }

  template <class S>
  S hamiltonian(const Vec<S>& q, const Vec<S>& p) const {
    return 0.5 * dot(p, p) + potential(q);
  }

  template <class S>
  Vec<S> grad_q(const Vec<S>& q, const Vec<S>& /*p*/) const {
    return grad_potential(q);
  }

  template <class S>
  Vec<S> grad_p(const Vec<S>& /*q*/, const Vec<S>& p) const {
    return p;
  }

  Matd mass_inverse() const { return Matd::identity(2); }

  /// V(q) = -1/|q|.
  template <class S>
  S potential(const Vec<S>& q) const {
    using std::sqrt;
    S r2 = dot(q, q);
    check_off_center(r2);
    return -1.0 / sqrt(r2);
  }

  /// grad V = q / |q|^3.
  template <class S>
  Vec<S> grad_potential(const Vec<S>& q) const {
    using std::pow;
    S r2 = dot(q, q);
    check_off_center(r2);
    return q * pow(r2, -1.5);
  }

  /// hess V = (I |q|^2 - 3 q q^T) / |q|^5.
  template <class S>
  Mat<S> hess_potential(const Vec<S>& q) const {
    using std::pow;
    S r2 = dot(q, q);
    check_off_center(r2);
    S inv_r3 = pow(r2, -1.5);
    S inv_r5 = pow(r2, -2.5);
    Mat<S> h(2, 2);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        S v = (q[i] * q[j]) * inv_r5 * -3.0;
        if (i == j) v += inv_r3;
        h(i, j) = v;
      }
    }
    return h;
  }

  /// Third derivative tensor contracted with two directions:
  /// (d^3 V)_i[u, v] = -3 (u_i (q.v) + q_i (u.v) + v_i (q.u)) / r^5
  ///                   + 15 q_i (q.u) (q.v) / r^7.
  Vecd third_potential_apply(const Vecd& q, const Vecd& u, const Vecd& v) const {
    const double r2 = dot(q, q);
    check_off_center(r2);
    const double inv_r5 = std::pow(r2, -2.5);
    const double inv_r7 = std::pow(r2, -3.5);
    const double qu = dot(q, u), qv = dot(q, v), uv = dot(u, v);
    Vecd w(2);
    for (int i = 0; i < 2; ++i)
      w[i] = -3.0 * (u[i] * qv + q[i] * uv + v[i] * qu) * inv_r5 +
             15.0 * q[i] * qu * qv * inv_r7;
    return w;
  }

 private:
  template <class S>
  static void check_off_center(const S& r2) {
    if (!(value_of(r2) > 0.0))
      throw SingularityError("Kepler potential: evaluation at the collision q = 0");
  }
};

/// H = (p^T p + q^T q) / 2 in any dimension. The flow is a rotation, which
/// makes this the order-verification workhorse.
class HarmonicOscillator {
 public:
  explicit HarmonicOscillator(int dimension = 1) : n_(dimension) {
    if (dimension < 1) throw std::invalid_argument("HarmonicOscillator: dimension >= 1");
  }

  int dimension() const { return n_; }

  template <class S>
  S hamiltonian(const Vec<S>& q, const Vec<S>& p) const {
    return 0.5 * (dot(p, p) + dot(q, q));
  }

  template <class S>
  Vec<S> grad_q(const Vec<S>& q, const Vec<S>& /*p*/) const {
    return q;
  }

  template <class S>
  Vec<S> grad_p(const Vec<S>& /*q*/, const Vec<S>& p) const {
    return p;
  }

  Matd mass_inverse() const { return Matd::identity(n_); }

  template <class S>
  S potential(const Vec<S>& q) const {
    return 0.5 * dot(q, q);
  }

  template <class S>
  Vec<S> grad_potential(const Vec<S>& q) const {
    return q;
  }

  template <class S>
  Mat<S> hess_potential(const Vec<S>& q) const {
    Mat<S> h(q.size(), q.size());
    for (int i = 0; i < q.size(); ++i) h(i, i) = S(1.0);
    return h;
  }

  Vecd third_potential_apply(const Vecd& q, const Vecd&, const Vecd&) const {
    return Vecd(q.size());
  }

  /// Closed-form flow: componentwise rotation of (q_i, p_i) by angle t.
  PhaseState exact_state(const PhaseState& start, double t) const {
    const double c = std::cos(t), s = std::sin(t);
    Vecd q(n_), p(n_);
    for (int i = 0; i < n_; ++i) {
      q[i] = start.q[i] * c + start.p[i] * s;
      p[i] = -start.q[i] * s + start.p[i] * c;
    }
    return {q, p};
  }

 private:
  int n_;
};

/// Perihelion start on the orbit of eccentricity e: energy -1/2, period 2*pi.
inline PhaseState kepler_initial_conditions(double e) {
  if (!(e >= 0.0 && e < 1.0))
    throw std::invalid_argument("kepler_initial_conditions: eccentricity must be in [0,1)");
  Vecd q{1.0 - e, 0.0};
  Vecd p{0.0, std::sqrt((1.0 + e) / (1.0 - e))};
  return {q, p};
}

/// Solves E - e sin E = M by safeguarded Newton (bisection fallback on the
/// bracket [Mw - e, Mw + e], where Mw is M wrapped into (-pi, pi]).
inline double kepler_equation_solve(double mean_anomaly, double e, double tol) {
  if (!(e >= 0.0 && e < 1.0))
    throw std::invalid_argument("kepler_equation_solve: eccentricity must be in [0,1)");
  const double two_pi = 2.0 * std::numbers::pi;
  const double mw = std::remainder(mean_anomaly, two_pi);

  double lo = mw - e, hi = mw + e;
  double x = mw + e * std::sin(mw);
  double f = x - e * std::sin(x) - mw;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(f) <= tol) break;
    if (f > 0.0) hi = x;
    else lo = x;
    const double fp = 1.0 - e * std::cos(x);
    double step = f / fp;
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
    f = x - e * std::sin(x) - mw;
  }
  return x + (mean_anomaly - mw);
}

/// Exact orbit state at physical time t measured from the perihelion start.
/// Position and momentum come from the eccentric-anomaly parametrization, so
/// energy and angular momentum are conserved to roundoff regardless of the
/// solver tolerance.
inline PhaseState kepler_reference_state(double t, double e) {
  const double E = kepler_equation_solve(t, e, 1e-14);
  const double cE = std::cos(E), sE = std::sin(E);
  const double b = std::sqrt(1.0 - e * e);
  const double denom = 1.0 - e * cE;
  Vecd q{cE - e, b * sE};
  Vecd p{-sE / denom, b * cE / denom};
  return {q, p};
}

}  // namespace adsym

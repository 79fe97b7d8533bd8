#pragma once

// Shared helpers for the test suites: a portable deterministic RNG, a free
// particle system, and independent oracles kept apart from the library code
// they check.

#include <cmath>
#include <cstdint>

#include "adsym/adsym.hpp"

namespace testsupport {

/// splitmix64-based generator: stable across platforms and standard library
/// implementations, unlike the std distributions.
class TestRng {
 public:
  explicit TestRng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

/// H = p^T p / 2, exact polynomial flow. Test-only system.
class FreeParticle {
 public:
  explicit FreeParticle(int dimension = 1) : n_(dimension) {}

  int dimension() const { return n_; }

  template <class S>
  S hamiltonian(const adsym::Vec<S>& /*q*/, const adsym::Vec<S>& p) const {
    return 0.5 * dot(p, p);
  }
  template <class S>
  adsym::Vec<S> grad_q(const adsym::Vec<S>& q, const adsym::Vec<S>&) const {
    return adsym::Vec<S>(q.size());
  }
  template <class S>
  adsym::Vec<S> grad_p(const adsym::Vec<S>&, const adsym::Vec<S>& p) const {
    return p;
  }
  adsym::Matd mass_inverse() const { return adsym::Matd::identity(n_); }
  template <class S>
  S potential(const adsym::Vec<S>& q) const {
    return S(0.0) * q[0];
  }
  template <class S>
  adsym::Vec<S> grad_potential(const adsym::Vec<S>& q) const {
    return adsym::Vec<S>(q.size());
  }
  template <class S>
  adsym::Mat<S> hess_potential(const adsym::Vec<S>& q) const {
    return adsym::Mat<S>(q.size(), q.size());
  }

 private:
  int n_;
};

/// Classical symplectic Euler-B on a separable base system; the independent
/// side of the reduction checks.
template <class Sys>
adsym::PhaseState classical_euler_b(const Sys& sys, const adsym::PhaseState& s, double h) {
  adsym::Vecd p1 = s.p - h * sys.grad_potential(s.q);
  adsym::Vecd q1 = s.q + h * apply(sys.mass_inverse(), p1);
  return {q1, p1};
}

/// Bisection-only solver for E - e sin E = M on [M - e, M + e]; oracle for
/// the production Kepler solver.
inline double kepler_bisection(double mean_anomaly, double e) {
  const double two_pi = 2.0 * 3.14159265358979323846;
  const double mw = std::remainder(mean_anomaly, two_pi);
  double lo = mw - e, hi = mw + e;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = mid - e * std::sin(mid) - mw;
    if (f > 0.0) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi) + (mean_anomaly - mw);
}

}  // namespace testsupport

#pragma once

#include <cmath>
#include <sstream>
#include <utility>

#include "adsym/core/errors.hpp"
#include "adsym/core/linalg.hpp"

namespace adsym {

/// Settings shared by all Newton solves in the library.
struct NewtonConfig {
  double tolerance = 1e-12;  ///< absolute residual 2-norm target
  int max_iterations = 50;
  double fd_step = 0.0;  ///< finite-difference step; 0 = 1e-6 * max(1, |x|)

  double effective_fd_step(const Vecd& x) const {
    return fd_step > 0.0 ? fd_step : 1e-6 * std::max(1.0, norm(x));
  }
};

struct NewtonOutcome {
  Vecd x;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Newton iteration with a caller-supplied Jacobian. Deterministic: identical
/// inputs produce identical outputs bit for bit.
template <class F, class J>
NewtonOutcome newton_solve_with_jacobian(F&& residual, J&& jacobian, Vecd x,
                                         const NewtonConfig& cfg) {
  if (!(cfg.tolerance > 0.0) || cfg.max_iterations < 1)
    throw std::invalid_argument("NewtonConfig: need tolerance > 0 and max_iterations >= 1");
  double nr = 0.0;
  for (int it = 0; it <= cfg.max_iterations; ++it) {
    const Vecd r = residual(x);
    if (!all_finite(r)) throw NonFiniteError("newton_solve: non-finite residual");
    nr = std::sqrt(dot(r, r));
    if (nr <= cfg.tolerance) return {x, it, nr};
    if (it == cfg.max_iterations) break;
    const Matd jac = jacobian(x);
    x -= solve_linear(jac, r);
  }
  std::ostringstream msg;
  msg << "newton_solve: no convergence after " << cfg.max_iterations
      << " iterations, last residual " << nr;
  throw ConvergenceError(msg.str(), nr);
}

/// Central-difference Jacobian of a vector residual. The divisor is the
/// actually realized perturbation (exact by Sterbenz), so maps that copy
/// their inputs differentiate to an exact identity.
template <class F>
Matd fd_jacobian(F&& residual, const Vecd& x, double step) {
  const int n = x.size();
  const int m = residual(x).size();
  Matd jac(m, n);
  Vecd xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    xp[j] = x[j] + step;
    xm[j] = x[j] - step;
    const double realized = xp[j] - xm[j];
    const Vecd rp = residual(xp);
    const Vecd rm = residual(xm);
    for (int i = 0; i < m; ++i) jac(i, j) = (rp[i] - rm[i]) / realized;
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return jac;
}

/// Newton iteration with a central finite-difference Jacobian.
template <class F>
NewtonOutcome newton_solve_fd(F&& residual, const Vecd& x0, const NewtonConfig& cfg) {
  auto jac = [&](const Vecd& x) {
    return fd_jacobian(residual, x, cfg.effective_fd_step(x));
  };
  return newton_solve_with_jacobian(residual, jac, x0, cfg);
}

/// Convenience form returning just the root.
template <class F>
Vecd newton_solve(F&& residual, const Vecd& x0, const NewtonConfig& cfg = {}) {
  return newton_solve_fd(std::forward<F>(residual), x0, cfg).x;
}

}  // namespace adsym

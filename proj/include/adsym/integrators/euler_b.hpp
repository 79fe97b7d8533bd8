#pragma once

#include <cmath>
#include <sstream>

#include "adsym/integrators/step_result.hpp"
#include "adsym/poincare.hpp"

namespace adsym {

/// Symplectic Euler-B applied to the extended Hamiltonian: implicit in the
/// new momentum, explicit in the new position,
///   pbar1 = pbar0 - h dHbar/dqbar(qbar0, pbar1),
///   qbar1 = qbar0 + h dHbar/dpbar(qbar0, pbar1).
/// p^t is assigned, never solved, so it is conserved exactly. For a
/// position-only monitor and separable Hamiltonian this is the classical
/// adaptive step
///   p1 = p0 - h g(q0) grad V(q0) - h grad g(q0) (p1^T M^{-1} p1 / 2 + V(q0) + p0^t),
///   q1 = q0 + h g(q0) M^{-1} p1,  q1^t = q0^t + h g(q0).
template <class PSys>
class EulerBStepper {
 public:
  using MonitorType = std::decay_t<decltype(std::declval<const PSys&>().monitor())>;
  static constexpr bool kExplicitTimeRate =
      MonitorType::p_independent && !MonitorType::pt_dependent;

  explicit EulerBStepper(NewtonConfig cfg = {}) : cfg_(cfg) {}

  StepResult operator()(const PSys& sys, const ExtendedState& x0, double h) const {
    const int n = sys.base_dim();
    const Vecd q0 = x0.q(), p0 = x0.p();
    const double pt = x0.pt();

    const double g0 = value_of(sys.monitor().evaluate(q0, p0, pt).g);
    if (g0 < 1e-14)
      throw PositivityError("EulerBStepper: monitor collapsed below 1e-14 at step start");

    auto momentum_residual = [&]<class S>(const Vec<S>& p1) -> Vec<S> {
      Vec<S> qj(n);
      for (int i = 0; i < n; ++i) qj[i] = S(q0[i]);
      MonitorValue<S> mv = sys.monitor().evaluate(qj, p1, S(pt));
      S e = sys.base().hamiltonian(qj, p1) + pt;
      Vec<S> hq = sys.base().grad_q(qj, p1);
      Vec<S> r(n);
      for (int i = 0; i < n; ++i)
        r[i] = p1[i] - p0[i] + h * (mv.grad_q[i] * e + mv.g * hq[i]);
      return r;
    };

    NewtonOutcome out;
    try {
      out = solve_momentum(sys, momentum_residual, q0, p0, pt, h);
    } catch (const ConvergenceError& err) {
      std::ostringstream msg;
      msg << "EulerBStepper: momentum solve failed at t = " << x0.qt()
          << ", h = " << h << ": " << err.what();
      throw ConvergenceError(msg.str(), err.last_residual());
    }
    const Vecd p1 = out.x;

    const MonitorValue<double> mv1 = sys.monitor().evaluate(q0, p1, pt);
    const double e1 = sys.base().hamiltonian(q0, p1) + pt;
    const Vecd hp1 = sys.base().grad_p(q0, p1);
    Vecd q1(n);
    for (int i = 0; i < n; ++i) q1[i] = q0[i] + h * (mv1.grad_p[i] * e1 + mv1.g * hp1[i]);
    const double q1t = x0.qt() + h * (mv1.g + mv1.d_pt * e1);

    StepResult res;
    res.state = ExtendedState::from_parts(q1, q1t, p1, pt);
    res.h_fictive = h;
    res.h_physical = q1t - x0.qt();
    res.newton_iterations = out.iterations;
    res.monitor_value = g0;
    if (!(res.h_physical > 0.0) && h != 0.0)
      throw NumericsError("EulerBStepper: nonpositive physical step");
    return res;
  }

  /// Fictive step landing q^t exactly on the target, available when the
  /// time rate is g(q0) and therefore independent of the solved momentum.
  double exact_finishing_step(const PSys& sys, const ExtendedState& x0,
                              double dt_remaining) const
    requires kExplicitTimeRate
  {
    const double g0 = value_of(sys.monitor().evaluate(x0.q(), x0.p(), x0.pt()).g);
    return dt_remaining / g0;
  }

  const NewtonConfig& config() const { return cfg_; }

 private:
  template <class F>
  NewtonOutcome solve_momentum(const PSys& sys, F&& residual, const Vecd& q0,
                               const Vecd& p0, double pt, double h) const {
    const int n = q0.size();
    if constexpr (kExplicitTimeRate && SeparableSystem<std::decay_t<decltype(sys.base())>>) {
      // Closed-form Jacobian I + h grad g(q0) (M^{-1} p1)^T.
      const Vecd gq = sys.monitor().evaluate(q0, p0, pt).grad_q;
      const Matd minv = sys.base().mass_inverse();
      auto jac = [&](const Vecd& p1) {
        const Vecd mp = apply(minv, p1);
        Matd j(n, n);
        for (int i = 0; i < n; ++i)
          for (int k = 0; k < n; ++k) j(i, k) = (i == k ? 1.0 : 0.0) + h * gq[i] * mp[k];
        return j;
      };
      return newton_solve_with_jacobian(residual, jac, p0, cfg_);
    } else {
      // Forward-mode Jacobian through the full residual.
      auto jac = [&](const Vecd& p1) {
        Matd j(n, n);
        for (int dir = 0; dir < n; ++dir) {
          Vec<Dual> pd(n);
          for (int i = 0; i < n; ++i) pd[i] = Dual(p1[i], i == dir ? 1.0 : 0.0);
          const Vec<Dual> rd = residual(pd);
          for (int i = 0; i < n; ++i) j(i, dir) = rd[i].d;
        }
        return j;
      };
      return newton_solve_with_jacobian(residual, jac, p0, cfg_);
    }
  }

  NewtonConfig cfg_;
};

}  // namespace adsym

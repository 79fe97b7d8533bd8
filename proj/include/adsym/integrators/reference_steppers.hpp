#pragma once

#include "adsym/integrators/step_result.hpp"
#include "adsym/poincare.hpp"

namespace adsym {

/// Classical leapfrog: half kick, drift, half kick.
template <SeparableSystem Sys>
PhaseState stormer_verlet_step(const Sys& sys, const PhaseState& s, double h) {
  const Matd minv = sys.mass_inverse();
  Vecd p_half = s.p - 0.5 * h * sys.grad_potential(s.q);
  Vecd q1 = s.q + h * apply(minv, p_half);
  Vecd p1 = p_half - 0.5 * h * sys.grad_potential(q1);
  return {q1, p1};
}

/// Non-symplectic control method for the symplecticity checks.
template <BaseSystem Sys>
PhaseState explicit_euler_step(const Sys& sys, const PhaseState& s, double h) {
  Vecd q1 = s.q + h * sys.grad_p(s.q, s.p);
  Vecd p1 = s.p - h * sys.grad_q(s.q, s.p);
  return {q1, p1};
}

/// Adapts a fixed-step base-space stepper to the extended driver interface:
/// q^t advances by h, p^t is copied through, the monitor is ignored.
template <class BaseStep>
class FixedStepAdapter {
 public:
  explicit FixedStepAdapter(BaseStep step) : step_(std::move(step)) {}

  template <class PSys>
  StepResult operator()(const PSys& sys, const ExtendedState& x0, double h) const {
    const PhaseState s1 = step_(sys.base(), PhaseState{x0.q(), x0.p()}, h);
    StepResult res;
    res.state = ExtendedState::from_parts(s1.q, x0.qt() + h, s1.p, x0.pt());
    res.h_fictive = h;
    res.h_physical = h;
    res.monitor_value = 1.0;
    return res;
  }

 private:
  BaseStep step_;
};

template <class BaseStep>
FixedStepAdapter<BaseStep> make_fixed_adapter(BaseStep step) {
  return FixedStepAdapter<BaseStep>(std::move(step));
}

}  // namespace adsym

#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "adsym/integrators/step_result.hpp"
#include "adsym/poincare.hpp"

namespace adsym {

/// One accepted step of a trajectory.
struct StepRecord {
  long index = 0;
  double tau = 0.0;         ///< accumulated fictive time
  double t = 0.0;           ///< physical time q^t
  double h_fictive = 0.0;
  double h_physical = 0.0;
  Vecd q;
  Vecd p;
  double pt = 0.0;
  double energy_error = 0.0;  ///< |H(q, p) - H0|
  double monitor_g = 0.0;
  int newton_iterations = 0;
};

struct DriverConfig {
  double finish_tolerance = 1e-10;  ///< |q^t_final - t_end| bound
  long max_steps = 100000000;
};

/// Streaming statistics of one run.
struct RunStats {
  long steps = 0;
  double min_h_physical = std::numeric_limits<double>::infinity();
  double max_h_physical = 0.0;
  double min_g = std::numeric_limits<double>::infinity();
  double max_g = 0.0;
  double max_energy_error = 0.0;
  double tau_total = 0.0;
  ExtendedState final_state;
};

namespace detail {

template <class PSys, class Stepper>
StepResult finishing_step(const PSys& sys, const Stepper& stepper, const ExtendedState& x,
                          double h_guess, double t_target, double tol) {
  // Steppers with a closed-form time rate land exactly; everything else is
  // solved by a safeguarded secant on h -> q^t(h) - t_target.
  if constexpr (requires { stepper.exact_finishing_step(sys, x, 0.0); }) {
    const double h_exact = stepper.exact_finishing_step(sys, x, t_target - x.qt());
    StepResult res = stepper(sys, x, h_exact);
    if (std::abs(res.state.qt() - t_target) <= tol) return res;
    // Fall through when the exact formula is defeated by roundoff.
  }
  double ha = h_guess;
  StepResult ra = stepper(sys, x, ha);
  double fa = ra.state.qt() - t_target;
  if (std::abs(fa) <= tol) return ra;

  double hb = ha * (t_target - x.qt()) / (ra.state.qt() - x.qt());
  if (!(hb > 0.0)) hb = 0.5 * ha;
  for (int it = 0; it < 80; ++it) {
    StepResult rb = stepper(sys, x, hb);
    const double fb = rb.state.qt() - t_target;
    if (std::abs(fb) <= tol) return rb;
    const double denom = fb - fa;
    double hn = denom != 0.0 ? hb - fb * (hb - ha) / denom : 0.5 * (ha + hb);
    if (!(hn > 0.0) || !std::isfinite(hn)) hn = 0.5 * hb;
    ha = hb;
    fa = fb;
    hb = hn;
  }
  throw ConvergenceError("integrate: finishing step did not land on t_end", 0.0);
}

}  // namespace detail

/// Drives a one-step map at constant fictive step h until the physical time
/// reaches t_end, finishing with an adjusted last step so that q^t lands on
/// t_end within the configured tolerance. All adaptivity lives in the
/// monitor; h itself never changes mid-run.
template <class PSys, class Stepper, class Recorder>
RunStats integrate(const PSys& sys, const Stepper& stepper, const ExtendedState& x0,
                   double h, double t_end, const DriverConfig& cfg, Recorder&& record) {
  if (!(h > 0.0)) throw std::invalid_argument("integrate: h must be positive");
  if (!(t_end > x0.qt())) throw std::invalid_argument("integrate: t_end must exceed q^t(0)");

  const double h0_energy = sys.base().hamiltonian(x0.q(), x0.p());
  const double ftol = cfg.finish_tolerance;

  RunStats stats;
  stats.final_state = x0;

  StepRecord rec;
  rec.t = x0.qt();
  rec.q = x0.q();
  rec.p = x0.p();
  rec.pt = x0.pt();
  rec.monitor_g = value_of(sys.monitor().evaluate(x0.q(), x0.p(), x0.pt()).g);
  record(rec);

  ExtendedState x = x0;
  double tau = 0.0;
  const double pt0 = x0.pt();

  while (true) {
    if (stats.steps >= cfg.max_steps) {
      std::ostringstream msg;
      msg << "integrate: step budget of " << cfg.max_steps << " exceeded at t = " << x.qt();
      throw NumericsError(msg.str());
    }

    StepResult res = stepper(sys, x, h);
    const double gap = t_end - res.state.qt();
    bool last = std::abs(gap) <= ftol;
    if (!last && gap < 0.5 * res.h_physical) {
      // The regular step (over)shoots the target; redo it as the finisher.
      res = detail::finishing_step(sys, stepper, x, h, t_end, ftol);
      last = true;
    }

    if (res.state.pt() != pt0)
      throw NumericsError("integrate: p^t changed across a step");

    ++stats.steps;
    tau += res.h_fictive;
    stats.tau_total = tau;
    stats.min_h_physical = std::min(stats.min_h_physical, res.h_physical);
    stats.max_h_physical = std::max(stats.max_h_physical, res.h_physical);
    stats.min_g = std::min(stats.min_g, res.monitor_value);
    stats.max_g = std::max(stats.max_g, res.monitor_value);

    const double energy_error =
        std::abs(sys.base().hamiltonian(res.state.q(), res.state.p()) - h0_energy);
    stats.max_energy_error = std::max(stats.max_energy_error, energy_error);

    rec = StepRecord{};
    rec.index = stats.steps;
    rec.tau = tau;
    rec.t = res.state.qt();
    rec.h_fictive = res.h_fictive;
    rec.h_physical = res.h_physical;
    rec.q = res.state.q();
    rec.p = res.state.p();
    rec.pt = res.state.pt();
    rec.energy_error = energy_error;
    rec.monitor_g = res.monitor_value;
    rec.newton_iterations = res.newton_iterations;
    record(rec);

    x = res.state;
    stats.final_state = x;
    if (last) break;
  }
  return stats;
}

/// Convenience form collecting the whole trajectory in memory.
template <class PSys, class Stepper>
std::vector<StepRecord> integrate_collect(const PSys& sys, const Stepper& stepper,
                                          const ExtendedState& x0, double h, double t_end,
                                          const DriverConfig& cfg = {}) {
  std::vector<StepRecord> records;
  integrate(sys, stepper, x0, h, t_end, cfg,
            [&](const StepRecord& r) { records.push_back(r); });
  return records;
}

}  // namespace adsym

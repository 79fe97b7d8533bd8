#pragma once

#include "adsym/poincare.hpp"

namespace adsym {

/// Outcome of one accepted integrator step in fictive time.
struct StepResult {
  ExtendedState state;
  double h_fictive = 0.0;   ///< fictive-time step actually taken
  double h_physical = 0.0;  ///< q^t advance, always positive
  int newton_iterations = 0;
  double monitor_value = 0.0;  ///< g at the step's start state
};

}  // namespace adsym

#pragma once

#include "adsym/integrators/driver.hpp"
#include "adsym/integrators/euler_b.hpp"
#include "adsym/integrators/htvi.hpp"
#include "adsym/integrators/reference_steppers.hpp"
#include "adsym/integrators/step_result.hpp"
#include "adsym/integrators/taylor_flow.hpp"

#pragma once

#include "adsym/core.hpp"
#include "adsym/harness.hpp"
#include "adsym/integrators.hpp"
#include "adsym/monitors.hpp"
#include "adsym/poincare.hpp"
#include "adsym/problems.hpp"

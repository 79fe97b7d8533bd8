#pragma once

#include "adsym/core/dual.hpp"
#include "adsym/core/errors.hpp"
#include "adsym/core/jet.hpp"
#include "adsym/core/linalg.hpp"
#include "adsym/core/newton.hpp"
#include "adsym/core/system.hpp"

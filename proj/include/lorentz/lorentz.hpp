// SPDX-License-Identifier: Apache-2.0
// Everything at once.
#pragma once

#include "lorentz/core.hpp"
#include "lorentz/chart.hpp"
#include "lorentz/metric.hpp"
#include "lorentz/spacetimes.hpp"
#include "lorentz/curve.hpp"
#include "lorentz/limit.hpp"
#include "lorentz/reach.hpp"
#include "lorentz/ladder.hpp"
#include "lorentz/maximal.hpp"
#include "lorentz/catalog.hpp"
#include "lorentz/scenario.hpp"

#pragma once

#include "benchmarks.hpp"
#include "bounds.hpp"
#include "experiment.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "infsolve.hpp"
#include "psolve.hpp"
#include "svg.hpp"
#include "verify.hpp"

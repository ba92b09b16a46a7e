#pragma once

// Umbrella header for the sparse VARX estimation library.

#include "hvarx/core.hpp"
#include "hvarx/csv.hpp"
#include "hvarx/eval.hpp"
#include "hvarx/io.hpp"
#include "hvarx/parallel.hpp"
#include "hvarx/prox.hpp"
#include "hvarx/select.hpp"
#include "hvarx/simgen.hpp"
#include "hvarx/solver.hpp"

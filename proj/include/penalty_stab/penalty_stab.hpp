#pragma once

/// Umbrella header for the numerical core and the experiment harness.

#include "penalty_stab/model_params.hpp"
#include "penalty_stab/tridiagonal.hpp"
#include "penalty_stab/mesh_fem.hpp"
#include "penalty_stab/solver.hpp"
#include "penalty_stab/analysis.hpp"
#include "penalty_stab/harness/config.hpp"
#include "penalty_stab/harness/csv.hpp"
#include "penalty_stab/harness/svg.hpp"
#include "penalty_stab/harness/experiments.hpp"

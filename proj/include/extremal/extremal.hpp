#pragma once

// Umbrella header for the numerical library. JSON ingestion/emission lives in
// extremal/json_io.hpp, which additionally needs the vendored json.hpp.

#include "extremal/candidates.hpp"
#include "extremal/capacity.hpp"
#include "extremal/enhancement.hpp"
#include "extremal/entropy.hpp"
#include "extremal/error.hpp"
#include "extremal/estimators.hpp"
#include "extremal/fisher.hpp"
#include "extremal/gaussian_solver.hpp"
#include "extremal/instance.hpp"
#include "extremal/loewner_solver.hpp"
#include "extremal/mixture.hpp"
#include "extremal/parallel.hpp"
#include "extremal/path.hpp"
#include "extremal/quadrature.hpp"
#include "extremal/rank_reduction.hpp"
#include "extremal/report.hpp"
#include "extremal/rng.hpp"
#include "extremal/skewed.hpp"
#include "extremal/sym_matrix.hpp"
#include "extremal/verify.hpp"

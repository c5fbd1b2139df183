#pragma once

// Doubly robust local-projections difference-in-differences for staggered
// absorbing treatments: clean-control stacks, exponential-tilt weighting,
// M-estimation influence inference, multiplier-bootstrap bands, and a
// Monte Carlo harness. Header-only; requires Eigen 3. The config, report,
// and driver headers additionally need nlohmann/json on the include path.

#include "drlpdid/errors.hpp"
#include "drlpdid/rng.hpp"
#include "drlpdid/panel.hpp"
#include "drlpdid/aggregate.hpp"
#include "drlpdid/basis.hpp"
#include "drlpdid/nuisance.hpp"
#include "drlpdid/estimators.hpp"
#include "drlpdid/inference.hpp"
#include "drlpdid/simulation.hpp"
#include "drlpdid/csv.hpp"
#include "drlpdid/config.hpp"
#include "drlpdid/reports.hpp"
#include "drlpdid/driver.hpp"

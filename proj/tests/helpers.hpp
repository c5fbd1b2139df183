#pragma once

// Shared fixtures for the unit tests: the four-unit worked panel whose cell
// structure is hand-checkable, and random panel/stack generators for the
// property tests.

#include <Eigen/Dense>
#include <vector>

#include "drlpdid/panel.hpp"
#include "drlpdid/rng.hpp"

namespace testutil {

using drlpdid::Panel;

// G = (3, 5, never, 3), T = 6, clusters = units, no covariates.
// At h = 1 the stack has two cells:
//   t=3: treated {u0,u3} with long diffs (3,5), controls {u1,u2} with (1,1)
//   t=5: treated {u1} with diff 3, control {u2} with diff 2
inline Panel four_unit_panel() {
  Panel p;
  p.n_units = 4;
  p.n_periods = 6;
  p.outcome.resize(4, 6);
  p.outcome << 0, 0, 1, 3, 3, 3,   // u0, G=3
               0, 0, 0, 1, 2, 4,   // u1, G=5
               2, 2, 2, 3, 4, 5,   // u2, never
               1, 1, 2, 6, 6, 6;   // u3, G=3
  p.covariates.resize(4, 0);
  p.first_treat = {3, 5, Panel::kNever, 3};
  p.cluster_id = {0, 1, 2, 3};
  p.n_clusters = 4;
  return p;
}

// Random staggered panel: outcomes N(0,1), entry dates uniform over
// {never} and 2..T (plus guaranteed never-treated mass), k covariates N(0,1).
inline Panel random_panel(drlpdid::Rng& rng, int n, int t, int k) {
  Panel p;
  p.n_units = n;
  p.n_periods = t;
  p.outcome.resize(n, t);
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < t; ++s) p.outcome(i, s) = rng.normal();
  p.covariates.resize(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) p.covariates(i, j) = rng.normal();
  p.first_treat.resize(static_cast<std::size_t>(n));
  p.cluster_id.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    if (u < 0.4) {
      p.first_treat[static_cast<std::size_t>(i)] = Panel::kNever;
    } else {
      int g = 2 + static_cast<int>(rng.uniform() * (t - 1));
      if (g > t) g = t;
      p.first_treat[static_cast<std::size_t>(i)] = g;
    }
    p.cluster_id[static_cast<std::size_t>(i)] = i;
  }
  p.n_clusters = n;
  return p;
}

// Retry until the panel admits a stack at the requested horizon.
inline drlpdid::Stack random_stack(drlpdid::Rng& rng, int h, int n, int t, int k) {
  for (;;) {
    Panel p = random_panel(rng, n, t, k);
    try {
      drlpdid::Stack st = drlpdid::build_stack(p, h);
      if (st.n_treated() >= 2 && st.n_controls() >= 2) return st;
    } catch (const drlpdid::Error&) {
      // no admissible cells in this draw; try again
    }
  }
}

}  // namespace testutil

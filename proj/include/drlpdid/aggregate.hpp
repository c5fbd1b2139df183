#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "drlpdid/errors.hpp"
#include "drlpdid/panel.hpp"

namespace drlpdid {

// Per-cell sufficient statistics at one horizon. A cell is one retained entry
// date g: N_g treated entrants, N_gh total rows, n_gh treated share, and the
// unadjusted treated-minus-control gap in long differences.
struct CellStats {
  std::vector<int> entry_date;
  std::vector<double> n_treated;   // N_g
  std::vector<double> n_total;     // N_{g,h}
  std::vector<double> share;       // n_{g,h} = N_g / N_{g,h}
  std::vector<double> gap;         // delta_{g,h}

  int n_cells() const { return static_cast<int>(entry_date.size()); }
};

inline CellStats cell_stats(const Stack& st) {
  CellStats cs;
  for (int g : st.entry_dates) {
    double nt = 0, nc = 0, sum_t = 0, sum_c = 0;
    for (int r = 0; r < st.n_rows(); ++r) {
      if (st.entry_date[r] != g) continue;
      if (st.d[r] > 0.5) { nt += 1; sum_t += st.dlt[r]; }
      else               { nc += 1; sum_c += st.dlt[r]; }
    }
    // build_stack only retains cells with entrants and controls
    cs.entry_date.push_back(g);
    cs.n_treated.push_back(nt);
    cs.n_total.push_back(nt + nc);
    cs.share.push_back(nt / (nt + nc));
    cs.gap.push_back(sum_t / nt - sum_c / nc);
  }
  if (cs.n_cells() == 0) throw Error(ErrorCode::NoRetainedCells, "no cells to aggregate");
  return cs;
}

// Variance-minimizing weights of the pooled OLS regression: each cell enters
// in proportion to the variance of its treatment indicator, N_gh n_gh (1-n_gh).
inline std::vector<double> vw_weights(const CellStats& cs) {
  std::vector<double> w(cs.n_cells());
  double tot = 0;
  for (int g = 0; g < cs.n_cells(); ++g) {
    w[g] = cs.n_total[g] * cs.share[g] * (1.0 - cs.share[g]);
    tot += w[g];
  }
  if (tot <= 0) throw Error(ErrorCode::NoRetainedCells, "all cells degenerate");
  for (double& x : w) x /= tot;
  return w;
}

// Reweighted scheme: each cohort in proportion to its entrant count, the
// equally-weighted-per-treated-unit target.
inline std::vector<double> rw_weights(const CellStats& cs) {
  std::vector<double> w(cs.n_cells());
  double tot = 0;
  for (int g = 0; g < cs.n_cells(); ++g) { w[g] = cs.n_treated[g]; tot += w[g]; }
  for (double& x : w) x /= tot;
  return w;
}

inline double aggregate(const CellStats& cs, const std::vector<double>& weights) {
  if (static_cast<int>(weights.size()) != cs.n_cells())
    throw Error(ErrorCode::AlignmentError,
                "weight vector length " + std::to_string(weights.size()) +
                " does not match " + std::to_string(cs.n_cells()) + " cells");
  double s = 0;
  for (int g = 0; g < cs.n_cells(); ++g) s += weights[g] * cs.gap[g];
  return s;
}

// WLS of the long difference on D and entry-date intercepts with per-cell row
// weights lambda_g. By Frisch-Waugh the D coefficient is a weighted average of
// cell gaps with weights proportional to lambda_g N_gh n_gh (1-n_gh); lambda=1
// recovers the variance-minimizing scheme and lambda = 1/(1-n_gh) the
// cohort-share scheme.
inline double pooled_lpdid_coefficient(const Stack& st, const std::vector<double>& cell_lambda) {
  CellStats cs = cell_stats(st);
  if (static_cast<int>(cell_lambda.size()) != cs.n_cells())
    throw Error(ErrorCode::AlignmentError, "cell_lambda length does not match retained cells");

  int n = st.n_rows();
  int p = 1 + cs.n_cells();  // D + one intercept per cell (no reference drop: no global intercept)
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n), w(n);
  for (int r = 0; r < n; ++r) {
    X(r, 0) = st.d[r];
    for (int g = 0; g < cs.n_cells(); ++g)
      X(r, 1 + g) = (st.entry_date[r] == cs.entry_date[g]) ? 1.0 : 0.0;
    y(r) = st.dlt[r];
    int g = 0;
    while (cs.entry_date[g] != st.entry_date[r]) ++g;
    w(r) = cell_lambda[g];
  }
  Eigen::MatrixXd xtwx = X.transpose() * w.asDiagonal() * X;
  Eigen::VectorXd xtwy = X.transpose() * w.asDiagonal() * y;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtwx);
  if (ldlt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularNormalEquations, "pooled regression design is singular");
  Eigen::VectorXd beta = ldlt.solve(xtwy);
  return beta(0);
}

}  // namespace drlpdid

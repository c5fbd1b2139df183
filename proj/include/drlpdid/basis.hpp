#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "drlpdid/errors.hpp"
#include "drlpdid/panel.hpp"

namespace drlpdid {

// Design matrix shared by the outcome regressions and the tilt: intercept,
// covariates, and entry-date indicators with the earliest retained date as
// the omitted reference. Saturating in entry dates keeps every estimator's
// comparison within cells.
struct Basis {
  Eigen::MatrixXd q;              // n_rows x p, pruned of collinear columns
  std::vector<std::string> names;
  std::vector<std::string> pruned;  // notes for columns dropped as collinear
  int reference_date = 0;
  std::vector<int> dummy_dates;   // dates carrying a surviving column, ascending

  int n_cols() const { return static_cast<int>(q.cols()); }
};

struct BasisOptions {
  bool covariates = true;
  bool entry_dates = true;
  bool interactions = false;  // covariate x entry-date products, off by default
};

// Builds the basis column by column, keeping a column only if it adds rank.
// Constant or duplicate columns are pruned with a note rather than failing the
// whole fit; only a basis with no usable column at all is an error. The
// intercept goes first so it always survives.
inline Basis build_basis(const Stack& st, const BasisOptions& opt = BasisOptions{}) {
  const int n = st.n_rows();
  const int k = opt.covariates ? static_cast<int>(st.covariates.cols()) : 0;

  Basis b;
  b.reference_date = st.entry_dates.front();
  std::vector<int> candidate_dates;
  if (opt.entry_dates)
    for (std::size_t g = 1; g < st.entry_dates.size(); ++g)
      candidate_dates.push_back(st.entry_dates[g]);

  // Candidate columns in estimation order.
  std::vector<std::string> cand_names;
  std::vector<Eigen::VectorXd> cand_cols;
  std::vector<int> cand_date;  // >0 when the column is the dummy for that date
  auto push = [&](const std::string& name, const Eigen::VectorXd& col, int date = 0) {
    cand_names.push_back(name);
    cand_cols.push_back(col);
    cand_date.push_back(date);
  };
  push("const", Eigen::VectorXd::Ones(n));
  for (int j = 0; j < k; ++j) push("x" + std::to_string(j + 1), st.covariates.col(j));
  std::vector<Eigen::VectorXd> dums;
  for (int g : candidate_dates) {
    Eigen::VectorXd dum(n);
    for (int r = 0; r < n; ++r) dum(r) = (st.entry_date[r] == g) ? 1.0 : 0.0;
    push("entry_" + std::to_string(g), dum, g);
    dums.push_back(dum);
  }
  if (opt.interactions)
    for (int j = 0; j < k; ++j)
      for (std::size_t g = 0; g < candidate_dates.size(); ++g)
        push("x" + std::to_string(j + 1) + ":entry_" + std::to_string(candidate_dates[g]),
             st.covariates.col(j).cwiseProduct(dums[g]));

  // Modified Gram-Schmidt with one re-orthogonalization pass; a candidate is
  // accepted iff its residual against the accepted span exceeds the tolerance.
  const double tol = 1e-10;
  std::vector<int> keep;
  Eigen::MatrixXd u(n, cand_cols.size());  // orthonormal columns of accepted set
  int rank = 0;
  for (std::size_t c = 0; c < cand_cols.size(); ++c) {
    Eigen::VectorXd r = cand_cols[c];
    if (rank > 0) {
      r -= u.leftCols(rank) * (u.leftCols(rank).transpose() * r);
      r -= u.leftCols(rank) * (u.leftCols(rank).transpose() * r);
    }
    double scale = std::max(1.0, cand_cols[c].norm());
    if (r.norm() <= tol * scale) {
      b.pruned.push_back("dropped collinear column " + cand_names[c]);
      continue;
    }
    u.col(rank) = r / r.norm();
    ++rank;
    keep.push_back(static_cast<int>(c));
  }
  if (keep.empty()) throw Error(ErrorCode::DegenerateBasis, "no usable basis column");

  b.q.resize(n, static_cast<int>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    b.q.col(static_cast<int>(j)) = cand_cols[keep[j]];
    b.names.push_back(cand_names[keep[j]]);
    if (cand_date[keep[j]] > 0) b.dummy_dates.push_back(cand_date[keep[j]]);
  }
  return b;
}

}  // namespace drlpdid

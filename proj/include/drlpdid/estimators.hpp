#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "drlpdid/aggregate.hpp"
#include "drlpdid/basis.hpp"
#include "drlpdid/errors.hpp"
#include "drlpdid/nuisance.hpp"
#include "drlpdid/panel.hpp"

namespace drlpdid {

// Point estimate with per-cluster influence values. Influence is stored on
// the convention that theta_hat - theta ~ (1/N_C) sum_c infl[c], so the
// clustered variance estimate is mean(infl^2)/N_C; clusters without rows in
// the stack hold exact zeros, which keeps columns addable across horizons.
struct Estimate {
  double theta = std::numeric_limits<double>::quiet_NaN();
  // decomposition theta = mu1 - mu0 for the semiparametric estimators
  double mu1 = std::numeric_limits<double>::quiet_NaN();
  double mu0 = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> infl;
  Eigen::VectorXd beta;   // outcome coefficients where applicable
  Eigen::VectorXd gamma;  // tilt coefficients where applicable
  std::vector<std::string> notes;  // pruned-column notes from the basis
  int n_treated = 0;
  int n_controls = 0;
  int ipt_iterations = -1;  // -1: no tilt step in this estimator
  double ipt_moment_norm = std::numeric_limits<double>::quiet_NaN();
  // control-odds summary (min, q25, median, q75, max)
  std::array<double, 5> odds_quantiles{std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN()};
};

namespace detail {

// optional deviation knob: clamp fitted odds, recording how many rows hit it
inline void apply_trim(const IptOptions& iopt, Eigen::VectorXd& odds, Estimate& est) {
  if (iopt.trim_odds <= 0) return;
  int hit = 0;
  for (int r = 0; r < odds.size(); ++r)
    if (odds(r) > iopt.trim_odds) { odds(r) = iopt.trim_odds; ++hit; }
  if (hit > 0)
    est.notes.push_back("odds trimmed at " + std::to_string(iopt.trim_odds) + " on " +
                        std::to_string(hit) + " rows (deviates from the exact tilt)");
}

inline std::array<double, 5> odds_summary(const Stack& st, const Eigen::VectorXd& odds) {
  std::vector<double> w;
  for (int r = 0; r < st.n_rows(); ++r)
    if (st.d[r] < 0.5) w.push_back(odds(r));
  std::sort(w.begin(), w.end());
  auto at = [&](double p) {
    std::size_t idx = static_cast<std::size_t>(p * static_cast<double>(w.size() - 1) + 0.5);
    return w[idx];
  };
  return {w.front(), at(0.25), at(0.5), at(0.75), w.back()};
}

// Influence assembly for a stacked M-estimator: solve A'v = dg and fold
// -v'psi_r into per-cluster buckets, scaled by the cluster count.
template <typename PsiFn>
std::vector<double> fold_influence(const Stack& st, int n_clusters,
                                   const Eigen::MatrixXd& a, const Eigen::VectorXd& dg,
                                   PsiFn&& psi_row) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a.transpose());
  if (!lu.isInvertible())
    throw Error(ErrorCode::SingularJacobian, "moment Jacobian is singular");
  Eigen::VectorXd v = lu.solve(dg);

  std::vector<double> infl(static_cast<std::size_t>(n_clusters), 0.0);
  Eigen::VectorXd psi(a.rows());
  for (int r = 0; r < st.n_rows(); ++r) {
    psi.setZero();
    psi_row(r, psi);
    infl[static_cast<std::size_t>(st.cluster[r])] -= v.dot(psi);
  }
  for (double& x : infl) x *= static_cast<double>(n_clusters);
  return infl;
}

}  // namespace detail

/*
 * Regression adjustment: fit the outcome model on clean controls by OLS, then
 * average the treated prediction errors,
 *     theta = (1/N1) sum_{d=1} (dlt - q'beta).
 * Joint moments in (beta, theta) deliver the influence with the estimation
 * error of beta propagated through the treated mean of q.
 */
inline Estimate estimate_ra(const Stack& st, const Basis& b, int n_clusters) {
  const int n = st.n_rows();
  const int p = b.n_cols();
  Eigen::Map<const Eigen::VectorXd> y(st.dlt.data(), n);

  Estimate est;
  est.n_treated = st.n_treated();
  est.n_controls = st.n_controls();
  est.beta = fit_outcome_ols(b.q, y, [&] {
    std::vector<double> ctrl(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) ctrl[static_cast<std::size_t>(r)] = 1.0 - st.d[r];
    return ctrl;
  }());

  // mu1: treated mean outcome; mu0: treated mean prediction
  double s1 = 0, sp = 0;
  for (int r = 0; r < n; ++r)
    if (st.d[r] > 0.5) { s1 += y(r); sp += b.q.row(r).dot(est.beta); }
  est.mu1 = s1 / est.n_treated;
  est.mu0 = sp / est.n_treated;
  est.theta = est.mu1 - est.mu0;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p + 1, p + 1);
  for (int r = 0; r < n; ++r) {
    if (st.d[r] > 0.5) {
      a.block(p, 0, 1, p) -= b.q.row(r);
    } else {
      a.topLeftCorner(p, p).noalias() -= b.q.row(r).transpose() * b.q.row(r);
    }
  }
  a(p, p) = -static_cast<double>(est.n_treated);
  Eigen::VectorXd dg = Eigen::VectorXd::Zero(p + 1);
  dg(p) = 1.0;

  const Eigen::VectorXd& beta = est.beta;
  double theta = est.theta;
  est.infl = detail::fold_influence(st, n_clusters, a, dg,
      [&](int r, Eigen::VectorXd& psi) {
        double res = y(r) - b.q.row(r).dot(beta);
        if (st.d[r] > 0.5) psi(p) = res - theta;
        else psi.head(p) = b.q.row(r).transpose() * res;
      });
  return est;
}

/*
 * Inverse-probability tilt: reweight clean controls by the fitted odds and
 * compare Hajek means,
 *     theta = mean_{d=1} dlt - sum_{d=0} w dlt / sum_{d=0} w.
 * The tilt's first-order condition already balances every basis column, so
 * with an intercept present the denominator equals N1 exactly; the Hajek form
 * keeps that identity explicit in finite samples.
 */
inline Estimate estimate_ipt(const Stack& st, const Basis& b, int n_clusters,
                             const IptOptions& iopt = IptOptions{}) {
  const int n = st.n_rows();
  const int p = b.n_cols();
  Eigen::Map<const Eigen::VectorXd> y(st.dlt.data(), n);

  Estimate est;
  est.n_treated = st.n_treated();
  est.n_controls = st.n_controls();
  IptFit fit = fit_ipt(b.q, st.d, iopt);
  est.gamma = fit.gamma;
  est.ipt_iterations = fit.iterations;
  est.ipt_moment_norm = fit.moment_norm;
  detail::apply_trim(iopt, fit.odds, est);
  est.odds_quantiles = detail::odds_summary(st, fit.odds);

  double s1 = 0, s0 = 0, w0 = 0;
  for (int r = 0; r < n; ++r) {
    if (st.d[r] > 0.5) { s1 += y(r); }
    else { s0 += fit.odds(r) * y(r); w0 += fit.odds(r); }
  }
  double mu1 = s1 / est.n_treated;
  double mu0 = s0 / w0;
  est.mu1 = mu1;
  est.mu0 = mu0;
  est.theta = mu1 - mu0;

  // parameter order (gamma, mu1, mu0)
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p + 2, p + 2);
  for (int r = 0; r < n; ++r) {
    if (st.d[r] > 0.5) continue;
    double w = fit.odds(r);
    a.topLeftCorner(p, p).noalias() -= w * b.q.row(r).transpose() * b.q.row(r);
    a.block(p + 1, 0, 1, p) += w * (y(r) - mu0) * b.q.row(r);
  }
  a(p, p) = -static_cast<double>(est.n_treated);
  a(p + 1, p + 1) = -w0;
  Eigen::VectorXd dg = Eigen::VectorXd::Zero(p + 2);
  dg(p) = 1.0;
  dg(p + 1) = -1.0;

  est.infl = detail::fold_influence(st, n_clusters, a, dg,
      [&](int r, Eigen::VectorXd& psi) {
        if (st.d[r] > 0.5) {
          psi.head(p) = b.q.row(r).transpose();
          psi(p) = y(r) - mu1;
        } else {
          double w = fit.odds(r);
          psi.head(p) = -w * b.q.row(r).transpose();
          psi(p + 1) = w * (y(r) - mu0);
        }
      });
  return est;
}

// Doubly robust moment at externally supplied nuisance values: average of
// outcome-model prediction errors under the treated empirical measure minus
// their odds-weighted Hajek average under the control measure.
inline double dr_from_parts(const Stack& st, const Basis& b,
                            const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma) {
  const int n = st.n_rows();
  double s1 = 0, n1 = 0, s0 = 0, w0 = 0;
  for (int r = 0; r < n; ++r) {
    double res = st.dlt[r] - b.q.row(r).dot(beta);
    if (st.d[r] > 0.5) { s1 += res; n1 += 1; }
    else {
      double w = std::exp(b.q.row(r).dot(gamma));
      s0 += w * res;
      w0 += w;
    }
  }
  if (n1 == 0 || w0 == 0) throw Error(ErrorCode::EmptyStack, "no treated rows or zero control mass");
  return s1 / n1 - s0 / w0;
}

// ---- doubly robust moment system -------------------------------------------
//
// Parameter vector eta = (beta, gamma, mu1, mu0), exactly identified by the
// stacked moments: odds-weighted outcome normal equations on controls, tilt
// score, and the two mean-defining conditions. Exposed as standalone sums so
// the analytic Jacobian can be checked against finite differences.

inline Eigen::VectorXd dr_psi_sum(const Stack& st, const Basis& b, const Eigen::VectorXd& eta) {
  const int p = b.n_cols();
  Eigen::VectorXd beta = eta.head(p), gamma = eta.segment(p, p);
  double mu1 = eta(2 * p), mu0 = eta(2 * p + 1);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(2 * p + 2);
  for (int r = 0; r < st.n_rows(); ++r) {
    double res = st.dlt[r] - b.q.row(r).dot(beta);
    if (st.d[r] > 0.5) {
      psi.segment(p, p) += b.q.row(r);
      psi(2 * p) += res - mu1;
    } else {
      double w = std::exp(b.q.row(r).dot(gamma));
      psi.head(p) += w * res * b.q.row(r).transpose();
      psi.segment(p, p) -= w * b.q.row(r).transpose();
      psi(2 * p + 1) += w * (res - mu0);
    }
  }
  return psi;
}

inline Eigen::MatrixXd dr_jacobian(const Stack& st, const Basis& b, const Eigen::VectorXd& eta) {
  const int p = b.n_cols();
  const int dim = 2 * p + 2;
  Eigen::VectorXd beta = eta.head(p), gamma = eta.segment(p, p);
  double mu0 = eta(2 * p + 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  double n1 = 0, w0 = 0;
  for (int r = 0; r < st.n_rows(); ++r) {
    if (st.d[r] > 0.5) {
      a.block(2 * p, 0, 1, p) -= b.q.row(r);
      n1 += 1;
    } else {
      double w = std::exp(b.q.row(r).dot(gamma));
      double res = st.dlt[r] - b.q.row(r).dot(beta);
      Eigen::MatrixXd qq = b.q.row(r).transpose() * b.q.row(r);
      a.topLeftCorner(p, p) -= w * qq;       // d psi_beta / d beta
      a.block(0, p, p, p) += w * res * qq;   // d psi_beta / d gamma
      a.block(p, p, p, p) -= w * qq;         // d psi_gamma / d gamma
      a.block(2 * p + 1, 0, 1, p) -= w * b.q.row(r);
      a.block(2 * p + 1, p, 1, p) += w * (res - mu0) * b.q.row(r);
      w0 += w;
    }
  }
  a(2 * p, 2 * p) = -n1;
  a(2 * p + 1, 2 * p + 1) = -w0;
  return a;
}

// central-difference fallback for debugging and cross-checks
inline Eigen::MatrixXd dr_jacobian_fd(const Stack& st, const Basis& b,
                                      const Eigen::VectorXd& eta, double step = 1e-6) {
  const int dim = static_cast<int>(eta.size());
  Eigen::MatrixXd a(dim, dim);
  for (int j = 0; j < dim; ++j) {
    double hj = step * std::max(1.0, std::abs(eta(j)));
    Eigen::VectorXd lo = eta, hi = eta;
    hi(j) += hj;
    lo(j) -= hj;
    a.col(j) = (dr_psi_sum(st, b, hi) - dr_psi_sum(st, b, lo)) / (2 * hj);
  }
  return a;
}

/*
 * Doubly robust: exponential tilt for the weights, odds-weighted WLS for the
 * outcome model, then the centered moment
 *     theta = mean_{d=1}(dlt - q'beta) - Hajek_{d=0,w}(dlt - q'beta).
 * Exact balance makes the moment invariant to beta at the fitted tilt, which
 * is what buys insensitivity to either nuisance being misspecified. The
 * influence stacks both nuisance score vectors with the two means.
 */
inline Estimate estimate_dr(const Stack& st, const Basis& b, int n_clusters,
                            const IptOptions& iopt = IptOptions{}) {
  const int n = st.n_rows();
  const int p = b.n_cols();
  Eigen::Map<const Eigen::VectorXd> y(st.dlt.data(), n);

  Estimate est;
  est.n_treated = st.n_treated();
  est.n_controls = st.n_controls();
  IptFit fit = fit_ipt(b.q, st.d, iopt);
  est.gamma = fit.gamma;
  est.ipt_iterations = fit.iterations;
  est.ipt_moment_norm = fit.moment_norm;
  detail::apply_trim(iopt, fit.odds, est);
  est.odds_quantiles = detail::odds_summary(st, fit.odds);
  est.beta = fit_outcome_wls(b.q, y, [&] {
    std::vector<double> ctrl(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) ctrl[static_cast<std::size_t>(r)] = 1.0 - st.d[r];
    return ctrl;
  }(), fit.odds);

  double s1 = 0, s0 = 0, w0 = 0;
  for (int r = 0; r < n; ++r) {
    double res = y(r) - b.q.row(r).dot(est.beta);
    if (st.d[r] > 0.5) { s1 += res; }
    else { s0 += fit.odds(r) * res; w0 += fit.odds(r); }
  }
  double mu1 = s1 / est.n_treated;
  double mu0 = s0 / w0;
  est.mu1 = mu1;
  est.mu0 = mu0;
  est.theta = mu1 - mu0;

  // parameter order (beta, gamma, mu1, mu0)
  const int dim = 2 * p + 2;
  Eigen::VectorXd eta(dim);
  eta << est.beta, est.gamma, mu1, mu0;
  Eigen::MatrixXd a = dr_jacobian(st, b, eta);
  Eigen::VectorXd dg = Eigen::VectorXd::Zero(dim);
  dg(2 * p) = 1.0;
  dg(2 * p + 1) = -1.0;

  const Eigen::VectorXd& beta = est.beta;
  est.infl = detail::fold_influence(st, n_clusters, a, dg,
      [&](int r, Eigen::VectorXd& psi) {
        double res = y(r) - b.q.row(r).dot(beta);
        if (st.d[r] > 0.5) {
          psi.segment(p, p) = b.q.row(r).transpose();
          psi(2 * p) = res - mu1;
        } else {
          double w = fit.odds(r);
          psi.head(p) = w * res * b.q.row(r).transpose();
          psi.segment(p, p) = -w * b.q.row(r).transpose();
          psi(2 * p + 1) = w * (res - mu0);
        }
      });
  return est;
}

/*
 * Pooled benchmark: WLS of the long difference on the treatment indicator,
 * intercept, covariates (optional), and entry-date indicators, with row
 * weights 1/(1 - n_g) so every cohort contributes in proportion to its
 * entrant count. Influence is the usual cluster-summed regression sandwich
 * for the treatment coefficient.
 */
inline Estimate estimate_benchmark(const Stack& st, const Basis& b, int n_clusters) {
  const int n = st.n_rows();
  const int p = b.n_cols() + 1;
  Eigen::Map<const Eigen::VectorXd> y(st.dlt.data(), n);

  CellStats cs = cell_stats(st);
  std::vector<double> lam_by_cell(static_cast<std::size_t>(cs.n_cells()));
  for (int g = 0; g < cs.n_cells(); ++g)
    lam_by_cell[static_cast<std::size_t>(g)] = 1.0 / (1.0 - cs.share[g]);

  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd w(n);
  for (int r = 0; r < n; ++r) {
    x(r, 0) = st.d[r];
    x.row(r).tail(p - 1) = b.q.row(r);
    int g = 0;
    while (cs.entry_date[g] != st.entry_date[r]) ++g;
    w(r) = lam_by_cell[static_cast<std::size_t>(g)];
  }

  Eigen::MatrixXd xtwx = x.transpose() * w.asDiagonal() * x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtwx);
  qr.setThreshold(1e-12);
  if (qr.rank() < p)
    throw Error(ErrorCode::SingularNormalEquations, "benchmark design is singular");
  Eigen::VectorXd coef = qr.solve(x.transpose() * w.asDiagonal() * y);

  Estimate est;
  est.n_treated = st.n_treated();
  est.n_controls = st.n_controls();
  est.theta = coef(0);
  est.beta = coef;

  // e_0' (X'WX)^{-1} sum_{r in c} w_r x_r e_r, summed within cluster
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtwx);
  Eigen::VectorXd v = ldlt.solve(Eigen::VectorXd::Unit(p, 0));
  est.infl.assign(static_cast<std::size_t>(n_clusters), 0.0);
  for (int r = 0; r < n; ++r) {
    double resid = y(r) - x.row(r).dot(coef);
    est.infl[static_cast<std::size_t>(st.cluster[r])] += w(r) * resid * x.row(r).dot(v);
  }
  for (double& z : est.infl) z *= static_cast<double>(n_clusters);
  return est;
}

// ---- event-study driver --------------------------------------------------------

enum class EstimatorKind { BenchmarkRw, BenchmarkRwX, Ra, Ipt, Dr };

inline const char* estimator_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::BenchmarkRw: return "lpdid_rw";
    case EstimatorKind::BenchmarkRwX: return "lpdid_rw_x";
    case EstimatorKind::Ra: return "lpdid_ra";
    case EstimatorKind::Ipt: return "drlpdid_ipt";
    case EstimatorKind::Dr: return "drlpdid";
  }
  return "?";
}

inline EstimatorKind estimator_from_name(const std::string& s) {
  if (s == "lpdid_rw") return EstimatorKind::BenchmarkRw;
  if (s == "lpdid_rw_x") return EstimatorKind::BenchmarkRwX;
  if (s == "lpdid_ra") return EstimatorKind::Ra;
  if (s == "drlpdid_ipt") return EstimatorKind::Ipt;
  if (s == "drlpdid") return EstimatorKind::Dr;
  throw Error(ErrorCode::BadConfig, "unknown estimator: " + s);
}

struct EventStudyOptions {
  BaseRule base_rule = BaseRule::last_pre();
  IptOptions ipt;
};

struct HorizonDiag {
  int ipt_iterations = -1;
  double ipt_moment_norm = std::numeric_limits<double>::quiet_NaN();
  std::array<double, 5> odds_quantiles{std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN()};
  std::vector<std::string> notes;  // dropped basis columns etc.
};

// Per-horizon results; a horizon that fails keeps its error message and a NaN
// estimate rather than aborting the whole path. The post-treatment average
// carries its own influence column, assembled by linearity.
struct EventStudy {
  EstimatorKind kind;
  std::vector<int> horizons;
  std::vector<double> theta;
  std::vector<double> mu1, mu0;          // NaN for the pooled benchmarks
  std::vector<std::string> error;        // empty string: ok
  std::vector<ErrorCode> error_code;     // meaningful only where error is set
  Eigen::MatrixXd infl;                  // n_clusters x n_horizons, 0 where failed
  std::vector<int> n_treated, n_controls;
  std::vector<HorizonDiag> diag;
  double post_mean = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> post_infl;
  bool post_ok = false;
  std::vector<std::string> warnings;

  bool ok(int j) const { return error[static_cast<std::size_t>(j)].empty(); }
};

inline Estimate estimate_on_stack(EstimatorKind kind, const Stack& st, int n_clusters,
                                  const IptOptions& iopt) {
  auto with_notes = [](Estimate e, const Basis& b) {
    e.notes.insert(e.notes.begin(), b.pruned.begin(), b.pruned.end());
    return e;
  };
  switch (kind) {
    case EstimatorKind::BenchmarkRw: {
      Basis b = build_basis(st, BasisOptions{.covariates = false, .entry_dates = true});
      return with_notes(estimate_benchmark(st, b, n_clusters), b);
    }
    case EstimatorKind::BenchmarkRwX: {
      Basis b = build_basis(st, BasisOptions{.covariates = true, .entry_dates = true});
      return with_notes(estimate_benchmark(st, b, n_clusters), b);
    }
    case EstimatorKind::Ra: {
      Basis b = build_basis(st);
      return with_notes(estimate_ra(st, b, n_clusters), b);
    }
    case EstimatorKind::Ipt: {
      Basis b = build_basis(st);
      return with_notes(estimate_ipt(st, b, n_clusters, iopt), b);
    }
    case EstimatorKind::Dr: {
      Basis b = build_basis(st);
      return with_notes(estimate_dr(st, b, n_clusters, iopt), b);
    }
  }
  throw Error(ErrorCode::BadConfig, "unknown estimator kind");
}

inline EventStudy event_study(const Panel& panel, EstimatorKind kind,
                              const std::vector<int>& horizons,
                              const EventStudyOptions& opt = EventStudyOptions{}) {
  // The IPW-only estimator keeps entrants at the evaluation date in its
  // control pool; every other path uses the strict rule.
  ControlBoundary boundary =
      (kind == EstimatorKind::Ipt) ? ControlBoundary::Inclusive : ControlBoundary::Strict;

  const int nh = static_cast<int>(horizons.size());
  EventStudy es;
  es.kind = kind;
  es.horizons = horizons;
  es.theta.assign(nh, std::numeric_limits<double>::quiet_NaN());
  es.mu1.assign(nh, std::numeric_limits<double>::quiet_NaN());
  es.mu0.assign(nh, std::numeric_limits<double>::quiet_NaN());
  es.error.assign(nh, "");
  es.error_code.assign(nh, ErrorCode::BadConfig);
  es.infl = Eigen::MatrixXd::Zero(panel.n_clusters, nh);
  es.n_treated.assign(nh, 0);
  es.n_controls.assign(nh, 0);
  es.diag.resize(static_cast<std::size_t>(nh));

  for (int j = 0; j < nh; ++j) {
    try {
      Stack st = build_stack(panel, horizons[j], opt.base_rule, boundary);
      for (const auto& w : st.warnings) es.warnings.push_back(w);
      Estimate e = estimate_on_stack(kind, st, panel.n_clusters, opt.ipt);
      es.theta[j] = e.theta;
      es.mu1[j] = e.mu1;
      es.mu0[j] = e.mu0;
      es.n_treated[j] = e.n_treated;
      es.n_controls[j] = e.n_controls;
      es.diag[static_cast<std::size_t>(j)] =
          HorizonDiag{e.ipt_iterations, e.ipt_moment_norm, e.odds_quantiles, e.notes};
      for (const auto& note : e.notes)
        es.warnings.push_back("h=" + std::to_string(horizons[j]) + ": " + note);
      for (int c = 0; c < panel.n_clusters; ++c)
        es.infl(c, j) = e.infl[static_cast<std::size_t>(c)];
    } catch (const Error& err) {
      es.error[j] = err.what();  // already carries the code name
      es.error_code[j] = err.code();
    }
  }

  // average over post horizons (h >= 0); any failure there poisons the summary
  std::vector<int> post;
  for (int j = 0; j < nh; ++j)
    if (horizons[j] >= 0) post.push_back(j);
  es.post_ok = !post.empty();
  for (int j : post)
    if (!es.ok(j)) es.post_ok = false;
  if (es.post_ok) {
    double m = 0;
    es.post_infl.assign(static_cast<std::size_t>(panel.n_clusters), 0.0);
    for (int j : post) {
      m += es.theta[j];
      for (int c = 0; c < panel.n_clusters; ++c)
        es.post_infl[static_cast<std::size_t>(c)] += es.infl(c, j);
    }
    es.post_mean = m / static_cast<double>(post.size());
    for (double& x : es.post_infl) x /= static_cast<double>(post.size());
  }
  return es;
}

}  // namespace drlpdid

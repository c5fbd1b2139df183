#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <chrono>
#include <thread>
#include <vector>

#include "drlpdid/errors.hpp"
#include "drlpdid/estimators.hpp"
#include "drlpdid/inference.hpp"
#include "drlpdid/panel.hpp"
#include "drlpdid/rng.hpp"

namespace drlpdid {

// Staggered-adoption data-generating process: T = 17 periods, treated cohorts
// entering at 9..14 plus a never-treated group, nonlinear covariate transforms
// feeding selection and/or outcomes depending on the scenario:
//   A: outcome and selection both driven by the transformed vector Z
//   B: outcome driven by the hidden transforms H, selection by Z
//   C: outcome driven by Z, selection by the raw Gaussians X
//   D: outcome driven by H, selection by X
// Estimation always sees Z, so B misspecifies the outcome model and C the
// selection model relative to what the estimators can span.
enum class Scenario { A, B, C, D };

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::A: return "A";
    case Scenario::B: return "B";
    case Scenario::C: return "C";
    case Scenario::D: return "D";
  }
  return "?";
}

inline Scenario scenario_from_name(const std::string& s) {
  if (s == "A") return Scenario::A;
  if (s == "B") return Scenario::B;
  if (s == "C") return Scenario::C;
  if (s == "D") return Scenario::D;
  throw Error(ErrorCode::BadConfig, "unknown scenario: " + s);
}

struct McDesign {
  int n_units = 500;           // 500 baseline, 250 spot check
  int n_periods = 17;          // the design is calibrated to T = 17
  double corr = 0.0;           // Toeplitz correlation of the latent Gaussians
  double selection_scale = 0.9;
  Scenario scenario = Scenario::A;
  double delta = 0.0;          // pre-trend drift on ever-treated units
  int replications = 200;
  std::uint64_t seed = 12345;
  std::vector<int> horizons = {0, 1, 2, 3, 4, 5, 6};
  int n_threads = 0;           // 0: hardware concurrency

  static constexpr int kFirstCohort = 9;
  static constexpr int kNCohorts = 6;
};

inline void validate_design(const McDesign& d) {
  if (d.n_periods != 17)
    throw Error(ErrorCode::BadConfig, "the simulation design is calibrated to T = 17");
  if (d.n_units < 30) throw Error(ErrorCode::BadConfig, "simulation needs at least 30 units");
  if (!(std::abs(d.corr) < 1)) throw Error(ErrorCode::BadConfig, "|corr| must be < 1");
  if (d.replications < 1) throw Error(ErrorCode::BadConfig, "need at least 1 replication");
  if (d.horizons.empty()) throw Error(ErrorCode::BadConfig, "empty scoring horizon set");
  for (int h : d.horizons)
    if (h < 0 || h > d.n_periods - McDesign::kFirstCohort)
      throw Error(ErrorCode::BadConfig, "scoring horizon " + std::to_string(h) + " out of range");
}

// Latent Gaussians plus the two transformed covariate sets, standardized
// columnwise to sample mean 0 / sample variance 1 (denominator n-1) within
// the replication.
struct CovariateDraw {
  Eigen::MatrixXd x, z, hbag;
};

inline void standardize_columns(Eigen::MatrixXd& m) {
  const double n = static_cast<double>(m.rows());
  for (int j = 0; j < m.cols(); ++j) {
    double mean = m.col(j).mean();
    double ss = (m.col(j).array() - mean).square().sum();
    double sd = std::sqrt(ss / (n - 1.0));
    m.col(j) = (m.col(j).array() - mean) / sd;
  }
}

inline CovariateDraw draw_covariates(int n, double corr, Rng& rng) {
  Eigen::Matrix4d sigma;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) sigma(a, b) = std::pow(corr, std::abs(a - b));
  Eigen::Matrix4d chol = sigma.llt().matrixL();

  CovariateDraw cd;
  cd.x.resize(n, 4);
  Eigen::Vector4d g;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) g(j) = rng.normal();
    cd.x.row(i) = (chol * g).transpose();
  }

  cd.z.resize(n, 4);
  cd.hbag.resize(n, 4);
  for (int i = 0; i < n; ++i) {
    double x1 = cd.x(i, 0), x2 = cd.x(i, 1), x3 = cd.x(i, 2), x4 = cd.x(i, 3);
    cd.z(i, 0) = std::exp(0.5 * x1);
    cd.z(i, 1) = 10.0 + x2 / (1.0 + std::exp(x1));
    cd.z(i, 2) = std::pow(0.6 + x1 * x3 / 25.0, 3);
    cd.z(i, 3) = std::pow(20.0 + x2 + x4, 2);
    cd.hbag(i, 0) = std::exp(0.5 * x1);
    cd.hbag(i, 1) = x2 * x2;
    cd.hbag(i, 2) = x2 * x3;
    cd.hbag(i, 3) = std::sin(x1 + x4);
  }
  standardize_columns(cd.z);
  standardize_columns(cd.hbag);
  return cd;
}

// Softmax assignment over six entry cohorts and a never-treated category.
// Cohort j in 1..6 (entry 8+j) carries index scale (1 - j/6): earlier cohorts
// select hardest on W, the last cohort not at all; the never category has
// index 0.
inline std::vector<int> assign_cohorts(const Eigen::MatrixXd& w, double xi, Rng& rng) {
  const int n = static_cast<int>(w.rows());
  const int nj = McDesign::kNCohorts;
  std::vector<int> first_treat(static_cast<std::size_t>(n));
  std::vector<double> prob(static_cast<std::size_t>(nj + 1));
  for (int i = 0; i < n; ++i) {
    double base = -w(i, 0) + 0.5 * w(i, 1) - 0.25 * w(i, 2) - 0.2 * w(i, 3);
    double mx = 0.0;  // never-category index
    std::vector<double> idx(static_cast<std::size_t>(nj + 1));
    for (int j = 1; j <= nj; ++j) {
      idx[j - 1] = xi * (1.0 - static_cast<double>(j) / nj) * base;
      mx = std::max(mx, idx[j - 1]);
    }
    idx[nj] = 0.0;
    double tot = 0;
    for (int j = 0; j <= nj; ++j) { prob[j] = std::exp(idx[j] - mx); tot += prob[j]; }
    for (int j = 0; j <= nj; ++j) prob[j] /= tot;
    int cat = rng.categorical(prob);
    first_treat[static_cast<std::size_t>(i)] =
        (cat == nj) ? Panel::kNever : McDesign::kFirstCohort + cat;
  }
  return first_treat;
}

struct Replication {
  Panel panel;
  Eigen::MatrixXd x, z, hbag;
  Eigen::MatrixXd y0, y1, tau;  // n_units x T
};

// Potential outcomes: a common calendar trend plus a unit effect centered on
// the entry date (never-treated centered past the panel end), a scenario-
// specific regression surface in Z or H sloping up over time, an optional
// drift on ever-treated units (the no-anticipation violation knob), and the
// treatment path tau growing linearly in exposure.
inline void gen_outcomes(const McDesign& d, Replication& rep, Rng& rng) {
  const int n = d.n_units, t_max = d.n_periods;
  bool hard = d.scenario == Scenario::B || d.scenario == Scenario::D;
  const Eigen::MatrixXd& f = hard ? rep.hbag : rep.z;

  rep.y0.resize(n, t_max);
  rep.y1.resize(n, t_max);
  rep.tau.resize(n, t_max);
  rep.panel.outcome.resize(n, t_max);

  std::vector<double> alpha(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int g = rep.panel.first_treat[static_cast<std::size_t>(i)];
    double mu = (g == Panel::kNever) ? t_max + 1 : g;
    alpha[static_cast<std::size_t>(i)] = mu + rng.normal();
  }

  for (int i = 0; i < n; ++i) {
    int g = rep.panel.first_treat[static_cast<std::size_t>(i)];
    bool ever = g != Panel::kNever;
    double x1 = rep.x(i, 0);
    double load = 27.4 * f(i, 0) + 13.7 * (f(i, 1) + f(i, 2) + f(i, 3));
    for (int t = 1; t <= t_max; ++t) {
      double tt = static_cast<double>(t) / t_max;
      double freg = 210.0 + tt * load;
      double drift = ever ? d.delta * tt * (1.0 + 0.2 * x1) : 0.0;
      double eps = rng.normal();
      double y0 = freg + t + alpha[static_cast<std::size_t>(i)] + drift + eps;
      double tau = ever ? std::max(t - g + 1, 0) * (1.0 + 0.1 * x1) : 0.0;
      rep.y0(i, t - 1) = y0;
      rep.y1(i, t - 1) = y0 + tau;
      rep.tau(i, t - 1) = tau;
      rep.panel.outcome(i, t - 1) = (ever && t >= g) ? y0 + tau : y0;
    }
  }
}

// One replication: covariates, selection on W (Z or X by scenario), outcomes.
// The panel hands estimators Z regardless of scenario, and clusters by unit.
inline Replication make_replication(const McDesign& d, std::uint64_t rep_seed) {
  Rng rng(rep_seed);
  Replication rep;
  CovariateDraw cd = draw_covariates(d.n_units, d.corr, rng);
  rep.x = std::move(cd.x);
  rep.z = std::move(cd.z);
  rep.hbag = std::move(cd.hbag);

  bool select_on_x = d.scenario == Scenario::C || d.scenario == Scenario::D;
  const Eigen::MatrixXd& w = select_on_x ? rep.x : rep.z;

  rep.panel.n_units = d.n_units;
  rep.panel.n_periods = d.n_periods;
  rep.panel.first_treat = assign_cohorts(w, d.selection_scale, rng);
  rep.panel.covariates = rep.z;
  rep.panel.cluster_id.resize(static_cast<std::size_t>(d.n_units));
  for (int i = 0; i < d.n_units; ++i) rep.panel.cluster_id[static_cast<std::size_t>(i)] = i;
  rep.panel.n_clusters = d.n_units;

  gen_outcomes(d, rep, rng);
  validate_panel(rep.panel);
  return rep;
}

/*
 * Oracle target: within the replication, the entrant-count-weighted mean of
 * the realized treatment path tau_{i,g+h} across cohorts that survive stack
 * construction at horizon h (admissible base, g+h inside the panel, at least
 * one clean control). Baseline terms cancel exactly under no anticipation, so
 * this is the estimand every cohort-weighted estimator targets, free of Monte
 * Carlo noise in the comparison.
 */
inline std::vector<double> true_target(const Replication& rep, const std::vector<int>& horizons,
                                       const BaseRule& rule = BaseRule::last_pre()) {
  const Panel& p = rep.panel;
  std::vector<double> out;
  out.reserve(horizons.size());
  for (int h : horizons) {
    double wsum = 0, acc = 0;
    for (int g = 1; g <= p.n_periods; ++g) {
      if (!rule.admissible(g) || g + std::max(h, 0) > p.n_periods || g + h < 1) continue;
      std::vector<int> entrants;
      for (int i = 0; i < p.n_units; ++i)
        if (p.first_treat[static_cast<std::size_t>(i)] == g) entrants.push_back(i);
      if (entrants.empty()) continue;
      if (clean_control_set(p, g, h, rule).empty()) continue;
      double m = 0;
      for (int i : entrants) m += rep.tau(i, g + h - 1);
      acc += m;  // entrant-count weights: sum tau then divide by total entrants
      wsum += static_cast<double>(entrants.size());
    }
    if (wsum == 0) throw Error(ErrorCode::NoRetainedCells, "no cohort retained at h=" + std::to_string(h));
    out.push_back(acc / wsum);
  }
  return out;
}

// ---- replication campaigns ------------------------------------------------------

struct McRow {
  EstimatorKind kind;
  double bias = 0, rmse = 0, coverage = 0;
  int n_used = 0, n_failed = 0;
  bool ok = false;  // failure share within tolerance
  std::string first_failure;
};

struct McReport {
  McDesign design;
  std::vector<McRow> rows;
  double mean_true = 0;          // mean oracle target across replications
  double runtime_seconds = 0;    // never serialized: reports must be byte-stable
};

namespace detail {

struct RepOutcome {
  bool oracle_ok = false;
  double target = 0;
  // per estimator: ok flag, deviation from target, covered flag
  std::vector<int> ok;
  std::vector<double> dev;
  std::vector<int> covered;
  std::vector<std::string> error;
};

}  // namespace detail

/*
 * Run R replications of the design for the listed estimators and score the
 * average post-treatment effect against the per-replication oracle: bias,
 * RMSE, and coverage of the pointwise 95% influence-function interval.
 * Replication r is a pure function of derive_seed(seed, r); workers fill a
 * preallocated slot per replication and the reduction is sequential, so the
 * report is identical for any thread count. A replication where an estimator
 * fails is dropped for that estimator and counted; more than 2% failures
 * marks the row as failed.
 */
inline McReport run_campaign(const McDesign& design, const std::vector<EstimatorKind>& kinds) {
  validate_design(design);
  const auto wall_start = std::chrono::steady_clock::now();
  const int r_total = design.replications;
  const int n_est = static_cast<int>(kinds.size());
  if (n_est == 0) throw Error(ErrorCode::BadConfig, "no estimators selected");

  const double z975 = normal_quantile(0.975);
  std::vector<detail::RepOutcome> slots(static_cast<std::size_t>(r_total));

  auto run_one = [&](int r) {
    detail::RepOutcome& slot = slots[static_cast<std::size_t>(r)];
    slot.ok.assign(n_est, 0);
    slot.dev.assign(n_est, 0.0);
    slot.covered.assign(n_est, 0);
    slot.error.assign(n_est, "");
    Replication rep;
    try {
      rep = make_replication(design, derive_seed(design.seed, static_cast<std::uint64_t>(r)));
      std::vector<double> tgt = true_target(rep, design.horizons);
      double target = 0;
      for (double v : tgt) target += v;
      target /= static_cast<double>(tgt.size());
      slot.target = target;
      slot.oracle_ok = true;
    } catch (const Error& e) {
      for (int k = 0; k < n_est; ++k) slot.error[static_cast<std::size_t>(k)] = e.what();
      return;
    }
    for (int k = 0; k < n_est; ++k) {
      try {
        EventStudy es = event_study(rep.panel, kinds[static_cast<std::size_t>(k)], design.horizons);
        if (!es.post_ok) {
          for (int j = 0; j < static_cast<int>(es.horizons.size()); ++j)
            if (!es.ok(j)) {
              slot.error[static_cast<std::size_t>(k)] = es.error[static_cast<std::size_t>(j)];
              break;
            }
          continue;
        }
        double se = cluster_se(es.post_infl);
        slot.ok[static_cast<std::size_t>(k)] = 1;
        slot.dev[static_cast<std::size_t>(k)] = es.post_mean - slot.target;
        slot.covered[static_cast<std::size_t>(k)] =
            std::abs(es.post_mean - slot.target) <= z975 * se ? 1 : 0;
      } catch (const Error& e) {
        slot.error[static_cast<std::size_t>(k)] = e.what();
      }
    }
  };

  int n_threads = design.n_threads > 0
                      ? design.n_threads
                      : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, r_total);
  if (n_threads <= 1) {
    for (int r = 0; r < r_total; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < r_total; r = next.fetch_add(1)) run_one(r);
      });
    for (auto& th : pool) th.join();
  }

  McReport report;
  report.design = design;
  int n_oracle = 0;
  for (const auto& slot : slots)
    if (slot.oracle_ok) { report.mean_true += slot.target; ++n_oracle; }
  if (n_oracle == 0) throw Error(ErrorCode::NoRetainedCells, "every replication failed");
  report.mean_true /= static_cast<double>(n_oracle);

  for (int k = 0; k < n_est; ++k) {
    McRow row;
    row.kind = kinds[static_cast<std::size_t>(k)];
    double sum = 0, sumsq = 0, cov = 0;
    for (const auto& slot : slots) {
      if (!slot.ok.empty() && slot.ok[static_cast<std::size_t>(k)]) {
        double dv = slot.dev[static_cast<std::size_t>(k)];
        sum += dv;
        sumsq += dv * dv;
        cov += slot.covered[static_cast<std::size_t>(k)];
        ++row.n_used;
      } else {
        ++row.n_failed;
        if (row.first_failure.empty() && !slot.error.empty() &&
            !slot.error[static_cast<std::size_t>(k)].empty())
          row.first_failure = slot.error[static_cast<std::size_t>(k)];
      }
    }
    if (row.n_used > 0) {
      row.bias = sum / row.n_used;
      row.rmse = std::sqrt(sumsq / row.n_used);
      row.coverage = cov / row.n_used;
    }
    row.ok = row.n_used > 0 &&
             static_cast<double>(row.n_failed) <= 0.02 * static_cast<double>(r_total);
    report.rows.push_back(std::move(row));
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return report;
}

}  // namespace drlpdid

#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "drlpdid/config.hpp"
#include "drlpdid/csv.hpp"
#include "drlpdid/errors.hpp"
#include "drlpdid/estimators.hpp"
#include "drlpdid/inference.hpp"
#include "drlpdid/reports.hpp"
#include "drlpdid/simulation.hpp"

// End-to-end paths behind the CLI subcommands, kept header-side so they are
// testable without spawning processes.

namespace drlpdid {

inline void run_estimate(const RunConfig& cfg, std::ostream& log = std::cout) {
  Panel panel = ingest_csv(cfg.input_path, IngestOptions{cfg.covariates, cfg.cluster_column});
  std::filesystem::create_directories(cfg.out_dir);
  log << "panel: " << panel.n_units << " units x " << panel.n_periods << " periods, "
      << panel.n_covariates() << " covariates, " << panel.n_clusters << " clusters\n";

  for (std::size_t k = 0; k < cfg.estimators.size(); ++k) {
    EstimatorKind kind = cfg.estimators[k];
    EventStudyOptions opt;
    opt.base_rule = cfg.base_rule;
    opt.ipt.trim_odds = cfg.trim_odds;
    EventStudy es = event_study(panel, kind, cfg.horizons(), opt);

    std::vector<int> hs;
    std::vector<double> th;
    std::vector<int> cols;
    for (std::size_t j = 0; j < es.horizons.size(); ++j) {
      if (!es.ok(static_cast<int>(j))) continue;
      hs.push_back(es.horizons[j]);
      th.push_back(es.theta[j]);
      cols.push_back(static_cast<int>(j));
    }
    if (hs.empty()) {
      std::size_t j0 = 0;
      throw Error(es.error_code[j0],
                  std::string(estimator_name(kind)) + " failed at every horizon; first: " +
                      es.error[j0]);
    }
    Eigen::MatrixXd infl(panel.n_clusters, static_cast<int>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
      infl.col(static_cast<int>(c)) = es.infl.col(cols[c]);

    Band band = multiplier_bootstrap(hs, th, infl, cfg.bootstrap.b_draws, cfg.bootstrap.scheme,
                                     cfg.bootstrap.alpha,
                                     derive_seed(cfg.seed, static_cast<std::uint64_t>(k)));

    std::string prefix =
        (std::filesystem::path(cfg.out_dir) / estimator_name(kind)).string();
    write_event_study_csv(prefix + "_event_study.csv", es, band, cfg.hash, cfg.seed);
    write_event_study_json(prefix + "_event_study.json", es, band, cfg.hash, cfg.seed);
    write_band_json(prefix + "_band.json", band, cfg.hash);
    write_diagnostics_json(prefix + "_diagnostics.json", es, cfg.hash, cfg.seed);
    write_plot_csv(prefix + "_plot.csv", band, cfg.hash, cfg.seed);

    log << estimator_name(kind) << ": " << hs.size() << "/" << es.horizons.size()
        << " horizons, c* = " << band.c_star;
    if (es.post_ok) log << ", post avg = " << es.post_mean;
    log << "\n";
    for (const std::string& w : es.warnings) log << "  warning: " << w << "\n";
  }
}

inline void run_simulate(const RunConfig& cfg, std::ostream& log = std::cout) {
  std::filesystem::create_directories(cfg.out_dir);
  McReport rep = run_campaign(cfg.design, cfg.estimators);
  std::string base = (std::filesystem::path(cfg.out_dir) / "mc_report").string();
  write_mc_csv(base + ".csv", rep, cfg.hash);
  write_mc_json(base + ".json", rep, cfg.hash);

  log << "scenario " << scenario_name(cfg.design.scenario) << ", N=" << cfg.design.n_units
      << ", delta=" << cfg.design.delta << ", R=" << cfg.design.replications
      << ", mean true target " << rep.mean_true << "\n";
  bool all_ok = true;
  for (const McRow& row : rep.rows) {
    log << "  " << estimator_name(row.kind) << ": bias=" << row.bias << " rmse=" << row.rmse
        << " coverage=" << row.coverage << " (used " << row.n_used << ", failed " << row.n_failed
        << ")\n";
    all_ok = all_ok && row.ok;
  }
  if (!all_ok)
    throw Error(ErrorCode::CampaignFailed,
                "estimator failure rate exceeded 2% (see " + base + ".json)");
}

inline void run_validate(const std::string& input, const std::string& cluster_column,
                         std::ostream& log = std::cout) {
  IngestOptions opt;
  opt.cluster_column = cluster_column;
  Panel p = ingest_csv(input, opt);
  std::map<int, int> cohort;
  int never = 0;
  for (int g : p.first_treat) {
    if (g == Panel::kNever) ++never;
    else ++cohort[g];
  }
  log << input << ": " << p.n_units << " units x " << p.n_periods << " periods, "
      << p.n_covariates() << " covariates, " << p.n_clusters << " clusters\n";
  log << "  never-treated: " << never << "\n";
  for (auto [g, n] : cohort) log << "  entry " << g << ": " << n << " units\n";
}

}  // namespace drlpdid

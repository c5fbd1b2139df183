#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "drlpdid/csv.hpp"
#include "drlpdid/errors.hpp"
#include "drlpdid/estimators.hpp"
#include "drlpdid/inference.hpp"
#include "drlpdid/simulation.hpp"

// Output writers. Every file carries the config hash and seed; nothing
// time- or machine-dependent is ever written, so identical runs produce
// byte-identical files.

namespace drlpdid {

namespace detail {

inline void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IngestError, "cannot write " + path);
  out << body;
}

inline std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

inline nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace detail

// ---- estimate-mode artifacts ----------------------------------------------

// Band rows are joined on horizon: horizons that failed estimation carry
// empty numeric fields and their error text in `status`.
inline void write_event_study_csv(const std::string& path, const EventStudy& es,
                                  const Band& band, const std::string& hash,
                                  std::uint64_t seed) {
  std::string body =
      "h,estimate,se,ci_lo,ci_hi,band_lo,band_hi,n_treated,n_controls,status,config_hash,seed\n";
  for (std::size_t j = 0; j < es.horizons.size(); ++j) {
    int h = es.horizons[j];
    body += std::to_string(h) + ",";
    auto bj = std::find(band.horizons.begin(), band.horizons.end(), h);
    if (es.ok(static_cast<int>(j)) && bj != band.horizons.end()) {
      std::size_t k = static_cast<std::size_t>(bj - band.horizons.begin());
      body += fmt_double(band.theta[k]) + "," + fmt_double(band.se[k]) + "," +
              fmt_double(band.ci_lo[k]) + "," + fmt_double(band.ci_hi[k]) + "," +
              fmt_double(band.band_lo[k]) + "," + fmt_double(band.band_hi[k]) + "," +
              std::to_string(es.n_treated[j]) + "," + std::to_string(es.n_controls[j]) + ",ok";
    } else {
      // eight empty numeric fields, then the error text as status
      body += ",,,,,,,," + detail::csv_safe(es.error[j]);
    }
    body += "," + hash + "," + std::to_string(seed) + "\n";
  }
  detail::write_text(path, body);
}

inline void write_plot_csv(const std::string& path, const Band& band, const std::string& hash,
                           std::uint64_t seed) {
  std::string body = "h,estimate,ci_lo,ci_hi,band_lo,band_hi,config_hash,seed\n";
  for (std::size_t k = 0; k < band.horizons.size(); ++k) {
    body += std::to_string(band.horizons[k]) + "," + fmt_double(band.theta[k]) + "," +
            fmt_double(band.ci_lo[k]) + "," + fmt_double(band.ci_hi[k]) + "," +
            fmt_double(band.band_lo[k]) + "," + fmt_double(band.band_hi[k]) + "," + hash + "," +
            std::to_string(seed) + "\n";
  }
  detail::write_text(path, body);
}

inline void write_band_json(const std::string& path, const Band& band, const std::string& hash) {
  nlohmann::json j;
  j["alpha"] = band.alpha;
  j["scheme"] = multiplier_name(band.scheme);
  j["B"] = band.b_draws;
  j["seed"] = band.seed;
  j["c_star"] = band.c_star;
  j["config_hash"] = hash;
  j["horizons"] = nlohmann::json::array();
  for (std::size_t k = 0; k < band.horizons.size(); ++k) {
    j["horizons"].push_back({{"h", band.horizons[k]},
                             {"theta", band.theta[k]},
                             {"se", band.se[k]},
                             {"ci_lo", band.ci_lo[k]},
                             {"ci_hi", band.ci_hi[k]},
                             {"band_lo", band.band_lo[k]},
                             {"band_hi", band.band_hi[k]}});
  }
  if (!band.warnings.empty()) j["warnings"] = band.warnings;
  detail::write_text(path, j.dump(2) + "\n");
}

inline void write_event_study_json(const std::string& path, const EventStudy& es,
                                   const Band& band, const std::string& hash,
                                   std::uint64_t seed) {
  nlohmann::json j;
  j["estimator"] = estimator_name(es.kind);
  j["config_hash"] = hash;
  j["seed"] = seed;
  j["c_star"] = band.c_star;
  j["horizons"] = nlohmann::json::array();
  for (std::size_t jj = 0; jj < es.horizons.size(); ++jj) {
    nlohmann::json row;
    row["h"] = es.horizons[jj];
    if (es.ok(static_cast<int>(jj))) {
      int h = es.horizons[jj];
      auto bj = std::find(band.horizons.begin(), band.horizons.end(), h);
      std::size_t k = static_cast<std::size_t>(bj - band.horizons.begin());
      row["estimate"] = band.theta[k];
      row["mu1"] = detail::finite_or_null(es.mu1[jj]);
      row["mu0"] = detail::finite_or_null(es.mu0[jj]);
      row["se"] = band.se[k];
      row["ci"] = {band.ci_lo[k], band.ci_hi[k]};
      row["band"] = {band.band_lo[k], band.band_hi[k]};
      row["n_treated"] = es.n_treated[jj];
      row["n_controls"] = es.n_controls[jj];
    } else {
      row["error"] = es.error[jj];
    }
    j["horizons"].push_back(row);
  }
  if (es.post_ok) {
    double se = cluster_se(es.post_infl);
    double z = normal_quantile(1.0 - band.alpha / 2.0);
    j["post_average"] = {{"estimate", es.post_mean},
                         {"se", se},
                         {"ci", {es.post_mean - z * se, es.post_mean + z * se}}};
  }
  if (!es.warnings.empty()) j["warnings"] = es.warnings;
  detail::write_text(path, j.dump(2) + "\n");
}

inline void write_diagnostics_json(const std::string& path, const EventStudy& es,
                                   const std::string& hash, std::uint64_t seed) {
  nlohmann::json j;
  j["estimator"] = estimator_name(es.kind);
  j["config_hash"] = hash;
  j["seed"] = seed;
  j["horizons"] = nlohmann::json::array();
  for (std::size_t jj = 0; jj < es.horizons.size(); ++jj) {
    nlohmann::json row;
    row["h"] = es.horizons[jj];
    row["status"] = es.ok(static_cast<int>(jj)) ? "ok" : es.error[jj];
    row["n_treated"] = es.n_treated[jj];
    row["n_controls"] = es.n_controls[jj];
    const HorizonDiag& d = es.diag[jj];
    if (!d.notes.empty()) row["dropped_columns"] = d.notes;
    if (d.ipt_iterations >= 0) {
      row["ipt_iterations"] = d.ipt_iterations;
      row["ipt_moment_norm"] = detail::finite_or_null(d.ipt_moment_norm);
      row["control_odds"] = {{"min", detail::finite_or_null(d.odds_quantiles[0])},
                             {"q25", detail::finite_or_null(d.odds_quantiles[1])},
                             {"median", detail::finite_or_null(d.odds_quantiles[2])},
                             {"q75", detail::finite_or_null(d.odds_quantiles[3])},
                             {"max", detail::finite_or_null(d.odds_quantiles[4])}};
    }
    j["horizons"].push_back(row);
  }
  j["warnings"] = es.warnings;
  detail::write_text(path, j.dump(2) + "\n");
}

// ---- simulate-mode artifacts -------------------------------------------------

inline void write_mc_csv(const std::string& path, const McReport& rep, const std::string& hash) {
  std::string body =
      "scenario,N,delta,estimator,bias,rmse,coverage,n_used,n_failed,config_hash,seed\n";
  for (const McRow& row : rep.rows) {
    body += std::string(scenario_name(rep.design.scenario)) + "," +
            std::to_string(rep.design.n_units) + "," + fmt_double(rep.design.delta) + "," +
            estimator_name(row.kind) + "," + fmt_double(row.bias) + "," + fmt_double(row.rmse) +
            "," + fmt_double(row.coverage) + "," + std::to_string(row.n_used) + "," +
            std::to_string(row.n_failed) + "," + hash + "," + std::to_string(rep.design.seed) +
            "\n";
  }
  detail::write_text(path, body);
}

inline void write_mc_json(const std::string& path, const McReport& rep, const std::string& hash) {
  nlohmann::json j;
  j["config_hash"] = hash;
  j["scenario"] = scenario_name(rep.design.scenario);
  j["N"] = rep.design.n_units;
  j["T"] = rep.design.n_periods;
  j["delta"] = rep.design.delta;
  j["R"] = rep.design.replications;
  j["seed"] = rep.design.seed;
  j["horizons"] = rep.design.horizons;
  j["mean_true_target"] = rep.mean_true;
  j["rows"] = nlohmann::json::array();
  for (const McRow& row : rep.rows) {
    nlohmann::json r;
    r["estimator"] = estimator_name(row.kind);
    r["bias"] = row.bias;
    r["rmse"] = row.rmse;
    r["coverage"] = row.coverage;
    r["n_used"] = row.n_used;
    r["n_failed"] = row.n_failed;
    r["ok"] = row.ok;
    if (!row.first_failure.empty()) r["first_failure"] = row.first_failure;
    j["rows"].push_back(r);
  }
  detail::write_text(path, j.dump(2) + "\n");
}

}  // namespace drlpdid

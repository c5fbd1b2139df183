#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drlpdid/errors.hpp"
#include "drlpdid/estimators.hpp"
#include "drlpdid/inference.hpp"
#include "drlpdid/simulation.hpp"

namespace drlpdid {

// FNV-1a over the canonical (sorted-key) serialization: a cheap provenance
// stamp carried by every output file.
inline std::string config_hash(const nlohmann::json& j) {
  std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct BootstrapConfig {
  int b_draws = 999;
  Multiplier scheme = Multiplier::Rademacher;
  double alpha = 0.05;
};

struct RunConfig {
  enum class Mode { Estimate, Simulate };

  Mode mode = Mode::Estimate;
  std::string hash;  // canonical-config FNV hash, stamped on outputs

  // estimate mode
  std::string input_path;
  std::vector<std::string> covariates;  // empty: every extra column
  std::string cluster_column = "cluster";
  std::vector<EstimatorKind> estimators = {EstimatorKind::Dr};
  int h_min = 0, h_max = 3;
  BaseRule base_rule = BaseRule::last_pre();
  BootstrapConfig bootstrap;
  double trim_odds = 0;  // optional weight trimming, off by default
  std::uint64_t seed = 12345;
  std::string out_dir = ".";

  // simulate mode
  McDesign design;

  std::vector<int> horizons() const {
    std::vector<int> out;
    for (int h = h_min; h <= h_max; ++h) out.push_back(h);
    return out;
  }
};

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("config key '") + key + "': " + e.what());
  }
}

inline BaseRule base_rule_from_json(const nlohmann::json& j) {
  std::string name = get_or<std::string>(j, "base_rule", "last_pre");
  if (name == "last_pre") return BaseRule::last_pre();
  if (name == "pre_average") return BaseRule::pre_average(get_or<int>(j, "base_window", 2));
  throw Error(ErrorCode::BadConfig, "unknown base_rule: " + name);
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  RunConfig cfg;
  // The stamp identifies the analysis; where the files land and how many
  // workers ran are execution details and stay out of it.
  nlohmann::json ident = j;
  ident.erase("out_dir");
  ident.erase("threads");
  cfg.hash = config_hash(ident);

  std::string mode = detail::get_or<std::string>(j, "mode", "estimate");
  if (mode == "estimate") cfg.mode = RunConfig::Mode::Estimate;
  else if (mode == "simulate") cfg.mode = RunConfig::Mode::Simulate;
  else throw Error(ErrorCode::BadConfig, "mode must be 'estimate' or 'simulate', got '" + mode + "'");

  cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 12345);
  cfg.out_dir = detail::get_or<std::string>(j, "out_dir", ".");

  if (j.contains("bootstrap")) {
    const auto& b = j.at("bootstrap");
    cfg.bootstrap.b_draws = detail::get_or<int>(b, "B", 999);
    cfg.bootstrap.scheme =
        multiplier_from_name(detail::get_or<std::string>(b, "scheme", "rademacher"));
    cfg.bootstrap.alpha = detail::get_or<double>(b, "alpha", 0.05);
    if (cfg.bootstrap.b_draws < 1) throw Error(ErrorCode::BadConfig, "bootstrap B must be >= 1");
    if (!(cfg.bootstrap.alpha > 0 && cfg.bootstrap.alpha < 1))
      throw Error(ErrorCode::BadConfig, "bootstrap alpha must be in (0,1)");
  }

  if (j.contains("estimators")) {
    cfg.estimators.clear();
    for (const auto& e : j.at("estimators"))
      cfg.estimators.push_back(estimator_from_name(e.get<std::string>()));
    if (cfg.estimators.empty()) throw Error(ErrorCode::BadConfig, "estimators list is empty");
  }

  if (cfg.mode == RunConfig::Mode::Estimate) {
    if (!j.contains("input"))
      throw Error(ErrorCode::BadConfig, "estimate mode requires an 'input' CSV path");
    cfg.input_path = j.at("input").get<std::string>();
    cfg.covariates = detail::get_or<std::vector<std::string>>(j, "covariates", {});
    cfg.cluster_column = detail::get_or<std::string>(j, "cluster_column", "cluster");
    cfg.h_min = detail::get_or<int>(j, "h_min", 0);
    cfg.h_max = detail::get_or<int>(j, "h_max", 3);
    if (cfg.h_min > cfg.h_max)
      throw Error(ErrorCode::BadConfig, "empty horizon range: h_min > h_max");
    cfg.base_rule = detail::base_rule_from_json(j);
    cfg.trim_odds = detail::get_or<double>(j, "trim_odds", 0.0);
    if (cfg.trim_odds < 0) throw Error(ErrorCode::BadConfig, "trim_odds must be >= 0");
  } else {
    McDesign d;
    d.scenario = scenario_from_name(detail::get_or<std::string>(j, "scenario", "A"));
    d.n_units = detail::get_or<int>(j, "N", 500);
    d.n_periods = detail::get_or<int>(j, "T", 17);
    d.delta = detail::get_or<double>(j, "delta", 0.0);
    d.corr = detail::get_or<double>(j, "corr", 0.0);
    d.replications = detail::get_or<int>(j, "R", 200);
    d.seed = cfg.seed;
    d.n_threads = detail::get_or<int>(j, "threads", 0);
    if (j.contains("horizons")) {
      d.horizons.clear();
      for (const auto& h : j.at("horizons")) d.horizons.push_back(h.get<int>());
    }
    validate_design(d);
    cfg.design = d;
    if (!j.contains("estimators")) {
      cfg.estimators = {EstimatorKind::BenchmarkRw, EstimatorKind::BenchmarkRwX,
                        EstimatorKind::Ra, EstimatorKind::Ipt, EstimatorKind::Dr};
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, path + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace drlpdid

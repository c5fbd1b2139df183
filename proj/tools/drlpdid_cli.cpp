#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "drlpdid/drlpdid.hpp"

// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
// failure. Warnings alone never change the exit status.

namespace {

int exit_code_for(const drlpdid::Error& e) {
  switch (drlpdid::domain_of(e.code())) {
    case drlpdid::ErrorDomain::Config: return 2;
    case drlpdid::ErrorDomain::Data: return 3;
    case drlpdid::ErrorDomain::Numerical: return 4;
  }
  return 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"doubly robust local-projections difference-in-differences"};
  app.require_subcommand(1);

  std::string config_path, out_dir, input_path, cluster_column = "cluster";
  std::uint64_t seed = 0;
  bool seed_set = false, out_set = false;
  int threads = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--out", out_dir, "override the output directory")
        ->each([&](const std::string&) { out_set = true; });
  };
  CLI::App* est = app.add_subcommand("estimate", "estimate event studies from a CSV panel");
  add_common(est);
  CLI::App* sim = app.add_subcommand("simulate", "run a Monte Carlo campaign");
  add_common(sim);
  sim->add_option("--threads", threads, "worker threads (0 = hardware)");
  CLI::App* val = app.add_subcommand("validate", "check a CSV panel against the schema");
  val->add_option("--input", input_path, "CSV panel file")->required();
  val->add_option("--cluster-column", cluster_column, "cluster column name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (val->parsed()) {
      drlpdid::run_validate(input_path, cluster_column);
      std::cout << "ok\n";
      return 0;
    }
    drlpdid::RunConfig cfg = drlpdid::load_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (out_set) cfg.out_dir = out_dir;
    cfg.design.seed = cfg.seed;
    if (threads >= 0) cfg.design.n_threads = threads;

    if (est->parsed()) {
      if (cfg.mode != drlpdid::RunConfig::Mode::Estimate)
        throw drlpdid::Error(drlpdid::ErrorCode::BadConfig,
                             "config mode is not 'estimate'");
      drlpdid::run_estimate(cfg);
    } else {
      if (cfg.mode != drlpdid::RunConfig::Mode::Simulate)
        throw drlpdid::Error(drlpdid::ErrorCode::BadConfig,
                             "config mode is not 'simulate'");
      drlpdid::run_simulate(cfg);
    }
  } catch (const drlpdid::Error& e) {
    std::cerr << "error [" << drlpdid::name_of(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

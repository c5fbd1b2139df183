// Desk-scale Monte Carlo: pit the reweighted benchmark against the adjusted
// estimators on two selection designs and print bias / RMSE / coverage.
// Bigger runs (R=200, N=500) go through the CLI's `simulate` subcommand.
//
//   g++ -std=c++20 -O2 -I include -I /usr/include/eigen3 -I vendor \
//       demos/campaign_demo.cpp -o campaign_demo

#include <cstdio>
#include <vector>

#include "drlpdid/drlpdid.hpp"

using namespace drlpdid;

int main() {
  std::vector<EstimatorKind> kinds = {EstimatorKind::BenchmarkRw, EstimatorKind::Ra,
                                      EstimatorKind::Dr};

  for (Scenario sc : {Scenario::A, Scenario::C}) {
    McDesign design;
    design.scenario = sc;
    design.n_units = 150;
    design.replications = 20;
    design.horizons = {0, 1, 2, 3};

    McReport rep = run_campaign(design, kinds);
    std::printf("scenario %s: N=%d, R=%d, mean target %.3f (%.1fs)\n",
                scenario_name(sc), design.n_units, design.replications, rep.mean_true,
                rep.runtime_seconds);
    std::printf("  %-12s %8s %8s %9s %6s\n", "estimator", "bias", "rmse", "coverage", "used");
    for (const McRow& row : rep.rows)
      std::printf("  %-12s %8.3f %8.3f %9.3f %6d%s\n", estimator_name(row.kind), row.bias,
                  row.rmse, row.coverage, row.n_used, row.ok ? "" : "  [failed]");
    std::printf("\n");
  }
  return 0;
}

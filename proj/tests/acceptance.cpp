// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are pinned here and nowhere else; the Monte Carlo
// windows run the full desk-scale campaigns, so expect a few minutes.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "drlpdid/drlpdid.hpp"
#include "helpers.hpp"

using namespace drlpdid;

namespace {

bool g_all_ok = true;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", criterion, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) g_all_ok = false;
}

template <typename Fn>
void guarded(int criterion, Fn fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(criterion, false, std::string("exception: ") + e.what());
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// mean(IF^2)/N_C sandwich on a per-cluster influence column
double se_of(const std::vector<double>& infl) {
  double s = 0;
  for (double v : infl) s += v * v;
  double n = static_cast<double>(infl.size());
  return std::sqrt(s / n / n);
}

// ---- criterion 1: closed-form aggregation == pooled regressions -----------------

void criterion_1() {
  Rng rng(101);
  double worst_vw = 0, worst_rw = 0;
  for (int rep = 0; rep < 100; ++rep) {
    int n = 10 + static_cast<int>(rng.uniform() * 41);  // <= 50
    int t = 4 + static_cast<int>(rng.uniform() * 7);    // <= 10
    int h = static_cast<int>(rng.uniform() * 3);
    Stack st = testutil::random_stack(rng, h, n, t, 0);
    CellStats cs = cell_stats(st);

    double vw = aggregate(cs, vw_weights(cs));
    std::vector<double> unit_lambda(static_cast<std::size_t>(cs.n_cells()), 1.0);
    worst_vw = std::max(worst_vw, std::abs(vw - pooled_lpdid_coefficient(st, unit_lambda)));

    std::vector<double> lam(static_cast<std::size_t>(cs.n_cells()));
    for (int g = 0; g < cs.n_cells(); ++g)
      lam[static_cast<std::size_t>(g)] = 1.0 / (1.0 - cs.share[static_cast<std::size_t>(g)]);
    double rw = aggregate(cs, rw_weights(cs));
    worst_rw = std::max(worst_rw, std::abs(rw - pooled_lpdid_coefficient(st, lam)));
  }
  bool ok = worst_vw <= 1e-10 && worst_rw <= 1e-10;
  report(1, ok,
         "aggregation identities on 100 random panels: |vw - pooled(1)| max " +
             std::to_string(worst_vw) + ", |rw - pooled(1/(1-n))| max " + std::to_string(worst_rw) +
             " (tol 1e-10)");
}

// ---- criterion 2: exact balance at every converged tilt -------------------------

void criterion_2() {
  Rng rng(202);
  double worst_balance = 0, worst_denom = 0;
  int fits = 0;
  while (fits < 50) {
    int h = static_cast<int>(rng.uniform() * 3);
    Stack st = testutil::random_stack(rng, h, 60 + static_cast<int>(rng.uniform() * 60), 8, 3);
    Basis b = build_basis(st);
    IptFit fit;
    try {
      fit = fit_ipt(b.q, st.d);
    } catch (const Error&) {
      continue;  // separation in a random draw is legitimate; the gate is about converged fits
    }
    ++fits;
    Eigen::VectorXd resid = Eigen::VectorXd::Zero(b.q.cols());
    double wsum = 0, ntreat = 0;
    for (int r = 0; r < st.n_rows(); ++r) {
      if (st.d[static_cast<std::size_t>(r)] > 0.5) {
        resid += b.q.row(r).transpose();
        ntreat += 1;
      } else {
        resid -= fit.odds(r) * b.q.row(r).transpose();
        wsum += fit.odds(r);
      }
    }
    worst_balance = std::max(worst_balance, resid.cwiseAbs().maxCoeff());
    worst_denom = std::max(worst_denom, std::abs(wsum - ntreat));
  }
  bool ok = worst_balance <= 1e-8 && worst_denom <= 1e-8;
  report(2, ok,
         "50 converged tilts: max |balance residual| " + std::to_string(worst_balance) +
             ", max |denominator gap| " + std::to_string(worst_denom) + " (tol 1e-8)");
}

// ---- criterion 3: collapse to the stack DiD / to RA -----------------------------

void criterion_3() {
  Rng rng(303);
  double worst_did = 0, worst_dr_ra = 0;

  BasisOptions intercept_only;
  intercept_only.covariates = false;
  intercept_only.entry_dates = false;
  for (int rep = 0; rep < 30; ++rep) {
    int h = static_cast<int>(rng.uniform() * 3);
    Stack st = testutil::random_stack(rng, h, 40, 7, 0);
    Basis b = build_basis(st, intercept_only);
    double s1 = 0, s0 = 0, n1 = 0, n0 = 0;
    for (int r = 0; r < st.n_rows(); ++r) {
      if (st.d[static_cast<std::size_t>(r)] > 0.5) { s1 += st.dlt[static_cast<std::size_t>(r)]; n1 += 1; }
      else                                         { s0 += st.dlt[static_cast<std::size_t>(r)]; n0 += 1; }
    }
    double did = s1 / n1 - s0 / n0;
    int n_cl = 40;
    worst_did = std::max(worst_did, std::abs(estimate_ra(st, b, n_cl).theta - did));
    worst_did = std::max(worst_did, std::abs(estimate_ipt(st, b, n_cl).theta - did));
    worst_did = std::max(worst_did, std::abs(estimate_dr(st, b, n_cl).theta - did));
  }

  for (int rep = 0; rep < 20; ++rep) {
    int h = static_cast<int>(rng.uniform() * 2);
    Stack st = testutil::random_stack(rng, h, 60, 7, 2);
    Basis b = build_basis(st);
    Eigen::VectorXd truth(b.q.cols());
    for (int j = 0; j < truth.size(); ++j) truth(j) = rng.normal();
    for (int r = 0; r < st.n_rows(); ++r)
      if (st.d[static_cast<std::size_t>(r)] < 0.5)
        st.dlt[static_cast<std::size_t>(r)] = b.q.row(r).dot(truth);
    double ra = estimate_ra(st, b, 60).theta;
    double dr = estimate_dr(st, b, 60).theta;
    worst_dr_ra = std::max(worst_dr_ra, std::abs(dr - ra));
  }
  bool ok = worst_did <= 1e-10 && worst_dr_ra <= 1e-10;
  report(3, ok,
         "intercept-only collapse max gap " + std::to_string(worst_did) +
             "; DR vs RA under exactly-linear controls max gap " + std::to_string(worst_dr_ra) +
             " (tol 1e-10)");
}

// ---- criterion 4: influence sums, Jacobian, bootstrap critical value ------------

void criterion_4() {
  Rng rng(404);
  double worst_sum = 0;
  for (int rep = 0; rep < 10; ++rep) {
    int h = static_cast<int>(rng.uniform() * 3);
    Stack st = testutil::random_stack(rng, h, 50, 8, 2);
    Basis b = build_basis(st);
    for (const Estimate& e :
         {estimate_ra(st, b, 50), estimate_ipt(st, b, 50), estimate_dr(st, b, 50)}) {
      double s = 0;
      for (double v : e.infl) s += v;
      worst_sum = std::max(worst_sum, std::abs(s));
    }
  }

  double worst_jac = 0;
  for (int rep = 0; rep < 20; ++rep) {
    int h = static_cast<int>(rng.uniform() * 3);
    Stack st = testutil::random_stack(rng, h, 40 + 5 * rep, 8, 2);
    Basis b = build_basis(st);
    Estimate e = estimate_dr(st, b, 40 + 5 * rep);
    const int p = static_cast<int>(e.beta.size());
    Eigen::VectorXd eta(2 * p + 2);
    eta << e.beta, e.gamma, e.mu1, e.mu0;
    Eigen::MatrixXd a = dr_jacobian(st, b, eta);
    Eigen::MatrixXd fd = dr_jacobian_fd(st, b, eta);
    double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    worst_jac = std::max(worst_jac, (a - fd).cwiseAbs().maxCoeff() / scale);
  }

  const int n_c = 400;
  Eigen::MatrixXd infl(n_c, 1);
  for (int c = 0; c < n_c; ++c) infl(c, 0) = rng.normal();
  infl.col(0).array() -= infl.col(0).mean();
  Band band = multiplier_bootstrap({0}, {0.0}, infl, 20000, Multiplier::Rademacher, 0.05, 4040);

  bool ok = worst_sum <= 1e-8 && worst_jac <= 1e-5 && std::abs(band.c_star - 1.96) <= 0.05;
  report(4, ok,
         "max |sum IF| " + std::to_string(worst_sum) + " (tol 1e-8); Jacobian vs FD rel " +
             std::to_string(worst_jac) + " (tol 1e-5); c* " + num(band.c_star) +
             " vs 1.96 +/- 0.05 at B=20000");
}

// ---- criterion 5: oracle target is base-rule invariant --------------------------

void criterion_5() {
  std::vector<int> hs = {0, 1, 2, 3, 4, 5, 6};
  double worst = 0;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    McDesign d;
    d.n_units = 300;
    Replication rep = make_replication(d, derive_seed(d.seed, seed));
    std::vector<double> a = true_target(rep, hs, BaseRule::last_pre());
    std::vector<double> b = true_target(rep, hs, BaseRule::pre_average(2));
    for (std::size_t k = 0; k < hs.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  }
  report(5, worst == 0.0,
         "oracle under last-pre vs two-period-average base: max gap " + std::to_string(worst) +
             " over 5 replications x 7 horizons (must be exactly 0)");
}

// ---- criteria 6-8: desk-scale Monte Carlo windows --------------------------------

struct Gate {
  std::string label;
  bool ok;
};

const McRow& row_for(const McReport& rep, EstimatorKind k) {
  for (const McRow& r : rep.rows)
    if (r.kind == k) return r;
  throw Error(ErrorCode::AlignmentError, "estimator missing from report");
}

McReport campaign(Scenario s, double delta, int n_units, const std::vector<EstimatorKind>& kinds) {
  McDesign d;
  d.scenario = s;
  d.delta = delta;
  d.n_units = n_units;
  return run_campaign(d, kinds);
}

void criterion_6() {
  McReport a = campaign(Scenario::A, 0.0, 500,
                        {EstimatorKind::BenchmarkRw, EstimatorKind::Ra, EstimatorKind::Ipt,
                         EstimatorKind::Dr});
  const McRow& rw = row_for(a, EstimatorKind::BenchmarkRw);
  const McRow& ra = row_for(a, EstimatorKind::Ra);
  const McRow& ipt = row_for(a, EstimatorKind::Ipt);
  const McRow& dr = row_for(a, EstimatorKind::Dr);

  McReport c = campaign(Scenario::C, 0.0, 500, {EstimatorKind::Dr});
  const McRow& dr_c = row_for(c, EstimatorKind::Dr);
  McReport bb = campaign(Scenario::B, 0.0, 500, {EstimatorKind::Dr});
  const McRow& dr_b = row_for(bb, EstimatorKind::Dr);
  McReport dd = campaign(Scenario::D, 0.0, 500, {EstimatorKind::BenchmarkRw});
  const McRow& rw_d = row_for(dd, EstimatorKind::BenchmarkRw);

  std::vector<Gate> gates = {
      {"A dr |bias| " + num(std::abs(dr.bias)) + "<0.05", std::abs(dr.bias) < 0.05 && dr.ok},
      {"A ra |bias| " + num(std::abs(ra.bias)) + "<0.05", std::abs(ra.bias) < 0.05 && ra.ok},
      {"A dr cov " + num(dr.coverage) + " in [0.90,0.98]",
       dr.coverage >= 0.90 && dr.coverage <= 0.98},
      {"A rw bias " + num(rw.bias) + "<-2.0", rw.bias < -2.0 && rw.ok},
      {"A ipt bias " + num(ipt.bias) + " in [-0.30,-0.10]",
       ipt.bias >= -0.30 && ipt.bias <= -0.10 && ipt.ok},
      {"A ipt cov " + num(ipt.coverage) + "<0.75", ipt.coverage < 0.75},
      {"C dr |bias| " + num(std::abs(dr_c.bias)) + "<0.05", std::abs(dr_c.bias) < 0.05 && dr_c.ok},
      {"C dr cov " + num(dr_c.coverage) + " in [0.90,0.99]",
       dr_c.coverage >= 0.90 && dr_c.coverage <= 0.99},
      {"B dr |bias| " + num(std::abs(dr_b.bias)) + "<0.15", std::abs(dr_b.bias) < 0.15 && dr_b.ok},
      {"D rw bias " + num(rw_d.bias) + "<-3.0", rw_d.bias < -3.0 && rw_d.ok},
  };
  bool ok = true;
  std::string detail;
  for (const Gate& g : gates) {
    ok = ok && g.ok;
    detail += (g.ok ? "[ok " : "[BAD ") + g.label + "] ";
  }
  report(6, ok, detail + "(R=200, N=500, seed 12345)");
}

void criterion_7() {
  McReport a = campaign(Scenario::A, 1.0, 500, {EstimatorKind::Ra, EstimatorKind::Ipt});
  const McRow& ra = row_for(a, EstimatorKind::Ra);
  const McRow& ipt = row_for(a, EstimatorKind::Ipt);
  bool ok_ra = ra.bias >= 0.12 && ra.bias <= 0.27 && ra.ok;
  bool ok_cov = ra.coverage < 0.5;
  bool ok_ipt = std::abs(ipt.bias) < 0.12 && ipt.ok;
  report(7, ok_ra && ok_cov && ok_ipt,
         "delta=1: ra bias " + num(ra.bias) + " in [0.12,0.27], ra cov " + num(ra.coverage) +
             "<0.5, ipt |bias| " + num(std::abs(ipt.bias)) + "<0.12");
}

void criterion_8() {
  McReport a = campaign(Scenario::A, 0.0, 250, {EstimatorKind::Dr});
  const McRow& dr = row_for(a, EstimatorKind::Dr);
  bool ok = std::abs(dr.bias) < 0.07 && dr.coverage >= 0.89 && dr.coverage <= 0.99 && dr.ok;
  report(8, ok,
         "N=250: dr |bias| " + num(std::abs(dr.bias)) + "<0.07, cov " + num(dr.coverage) +
             " in [0.89,0.99], failures " + std::to_string(dr.n_failed) + "/200");
}

// ---- criterion 9: thread count never reaches the report bytes -------------------

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_9() {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "drlpdid_acceptance";
  fs::create_directories(dir);

  McDesign d;
  d.n_units = 80;
  d.replications = 8;
  d.horizons = {0, 1, 2};
  std::vector<EstimatorKind> kinds = {EstimatorKind::Ra, EstimatorKind::Dr};

  std::vector<std::string> bytes;
  for (int n_threads : {1, 2, 1}) {
    McDesign di = d;
    di.n_threads = n_threads;
    McReport rep = run_campaign(di, kinds);
    std::string csv = (dir / ("mc_" + std::to_string(bytes.size()) + ".csv")).string();
    std::string js = (dir / ("mc_" + std::to_string(bytes.size()) + ".json")).string();
    write_mc_csv(csv, rep, "fixedhash");
    write_mc_json(js, rep, "fixedhash");
    bytes.push_back(slurp(csv) + "\x1f" + slurp(js));
  }
  bool ok = bytes[0] == bytes[1] && bytes[0] == bytes[2];
  std::error_code ec;
  fs::remove_all(dir, ec);
  report(9, ok, ok ? "mc_report.csv/json byte-identical across thread counts 1, 2 and a rerun"
                   : "report bytes differ across thread counts");
}

}  // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  guarded(1, criterion_1);
  guarded(2, criterion_2);
  guarded(3, criterion_3);
  guarded(4, criterion_4);
  guarded(5, criterion_5);
  guarded(6, criterion_6);
  guarded(7, criterion_7);
  guarded(8, criterion_8);
  guarded(9, criterion_9);
  auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s (%.1fs)\n", g_all_ok ? "all criteria PASS" : "ACCEPTANCE FAILED", dt);
  return g_all_ok ? 0 : 1;
}

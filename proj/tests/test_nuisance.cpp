#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "drlpdid/basis.hpp"
#include "drlpdid/nuisance.hpp"
#include "drlpdid/rng.hpp"
#include "helpers.hpp"

using namespace drlpdid;
using testutil::random_stack;

namespace {

double ipt_objective(const Eigen::MatrixXd& q, const std::vector<double>& d,
                     const Eigen::VectorXd& gamma) {
  double val = 0;
  Eigen::VectorXd idx = q * gamma;
  for (int r = 0; r < q.rows(); ++r) {
    if (d[static_cast<std::size_t>(r)] > 0.5) val += idx(r);
    else val -= std::exp(idx(r));
  }
  return val;
}

Eigen::VectorXd ipt_gradient(const Eigen::MatrixXd& q, const std::vector<double>& d,
                             const Eigen::VectorXd& gamma) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(q.cols());
  Eigen::VectorXd idx = q * gamma;
  for (int r = 0; r < q.rows(); ++r) {
    if (d[static_cast<std::size_t>(r)] > 0.5) g += q.row(r).transpose();
    else g -= std::exp(idx(r)) * q.row(r).transpose();
  }
  return g;
}

Eigen::VectorXd fd_gradient(const Eigen::MatrixXd& q, const std::vector<double>& d,
                            const Eigen::VectorXd& gamma, double step = 1e-6) {
  Eigen::VectorXd g(gamma.size());
  for (int j = 0; j < gamma.size(); ++j) {
    Eigen::VectorXd hi = gamma, lo = gamma;
    hi(j) += step;
    lo(j) -= step;
    g(j) = (ipt_objective(q, d, hi) - ipt_objective(q, d, lo)) / (2 * step);
  }
  return g;
}

}  // namespace

TEST_CASE("outcome OLS worked examples") {
  // intercept-only: control mean
  Eigen::MatrixXd q = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd y(4);
  y << 100.0, 2.0, 4.0, 9.0;
  Eigen::VectorXd beta = fit_outcome_ols(q, y, {0, 1, 1, 1});  // mask selects fitted rows
  CHECK(beta(0) == Catch::Approx(5.0).margin(1e-12));

  // two controls, intercept + one regressor: the exact two-point line
  Eigen::MatrixXd q2(2, 2);
  q2 << 1, 1, 1, 3;
  Eigen::VectorXd y2(2);
  y2 << 2, 8;
  Eigen::VectorXd b2 = fit_outcome_ols(q2, y2, {1, 1});
  CHECK(b2(0) == Catch::Approx(-1.0).margin(1e-10));
  CHECK(b2(1) == Catch::Approx(3.0).margin(1e-10));
  CHECK((q2 * b2 - y2).norm() == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("outcome WLS worked examples") {
  // odds (1,3) on two controls, intercept-only, y = (0,4): weighted mean 3
  Eigen::MatrixXd q = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd y(2);
  y << 0, 4;
  Eigen::VectorXd w(2);
  w << 1, 3;
  Eigen::VectorXd beta = fit_outcome_wls(q, y, {1, 1}, w);
  CHECK(beta(0) == Catch::Approx(3.0).margin(1e-12));

  // unit weights reproduce OLS
  Rng rng(11);
  Eigen::MatrixXd qq(20, 3);
  Eigen::VectorXd yy(20);
  std::vector<double> mask(20, 1.0);
  for (int r = 0; r < 20; ++r) {
    qq(r, 0) = 1;
    qq(r, 1) = rng.normal();
    qq(r, 2) = rng.normal();
    yy(r) = rng.normal();
  }
  Eigen::VectorXd b_ols = fit_outcome_ols(qq, yy, mask);
  Eigen::VectorXd b_wls = fit_outcome_wls(qq, yy, mask, Eigen::VectorXd::Ones(20));
  CHECK((b_ols - b_wls).lpNorm<Eigen::Infinity>() < 1e-10);

  // exactly linear outcomes are recovered under any positive weights
  Eigen::VectorXd truth(3);
  truth << 0.5, -2.0, 1.25;
  Eigen::VectorXd ylin = qq * truth;
  Eigen::VectorXd wpos(20);
  for (int r = 0; r < 20; ++r) wpos(r) = 0.1 + rng.uniform();
  Eigen::VectorXd bl = fit_outcome_wls(qq, ylin, mask, wpos);
  CHECK((bl - truth).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("rank-deficient outcome fits refit on the surviving columns") {
  // duplicate regressor: the fit must stay usable with a zero on one copy
  Eigen::MatrixXd q(6, 3);
  Eigen::VectorXd y(6);
  Rng rng(13);
  for (int r = 0; r < 6; ++r) {
    q(r, 0) = 1;
    q(r, 1) = rng.normal();
    q(r, 2) = q(r, 1);
    y(r) = rng.normal();
  }
  std::vector<double> mask(6, 1.0);
  Eigen::VectorXd beta = fit_outcome_ols(q, y, mask);
  REQUIRE(beta.allFinite());

  Eigen::MatrixXd qfull = q.leftCols(2);
  Eigen::VectorXd bfull = fit_outcome_ols(qfull, y, mask);
  // identical fitted values as the full-rank fit on the deduplicated design
  CHECK((q * beta - qfull * bfull).lpNorm<Eigen::Infinity>() < 1e-8);

  // all-zero design has no usable column
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(6, 2);
  CHECK_THROWS_AS(fit_outcome_ols(zero, y, mask), Error);
}

TEST_CASE("tilt worked examples: closed forms under the intercept-only basis") {
  Eigen::MatrixXd q = Eigen::MatrixXd::Ones(9, 1);
  std::vector<double> d = {1, 1, 1, 0, 0, 0, 0, 0, 0};
  IptFit fit = fit_ipt(q, d);
  CHECK(fit.gamma(0) == Catch::Approx(std::log(0.5)).margin(1e-9));
  CHECK(fit.moment_norm < 1e-9);

  std::vector<double> d2 = {1, 1, 1, 1, 0, 0, 0, 0};
  Eigen::MatrixXd q2 = Eigen::MatrixXd::Ones(8, 1);
  IptFit fit2 = fit_ipt(q2, d2);
  CHECK(fit2.gamma(0) == Catch::Approx(0.0).margin(1e-9));

  // the propensity accessor inverts the odds
  CHECK(fit2.pscore(0) == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("property: balance and the denominator identity at the fitted tilt") {
  Rng rng(2024);
  for (int rep = 0; rep < 20; ++rep) {
    Stack st = random_stack(rng, rep % 2, 40, 8, 2);
    Basis b = build_basis(st);
    IptFit fit = fit_ipt(b.q, st.d);

    Eigen::VectorXd lhs = Eigen::VectorXd::Zero(b.n_cols());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(b.n_cols());
    double wsum = 0, n1 = 0;
    for (int r = 0; r < st.n_rows(); ++r) {
      if (st.d[r] > 0.5) {
        lhs += b.q.row(r).transpose();
        n1 += 1;
      } else {
        rhs += fit.odds(r) * b.q.row(r).transpose();
        wsum += fit.odds(r);
      }
    }
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(std::abs(wsum - n1) < 1e-8);
  }
}

TEST_CASE("property: analytic tilt gradient matches central finite differences") {
  Rng rng(77);
  Stack st = random_stack(rng, 0, 50, 9, 2);
  Basis b = build_basis(st);

  // at a generic non-stationary point the gradient is order N
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(b.n_cols());
  for (int j = 0; j < gamma.size(); ++j) gamma(j) = 0.05 * rng.normal();
  Eigen::VectorXd ga = ipt_gradient(b.q, st.d, gamma);
  Eigen::VectorXd gf = fd_gradient(b.q, st.d, gamma);
  CHECK((ga - gf).lpNorm<Eigen::Infinity>() /
            std::max(1.0, gf.lpNorm<Eigen::Infinity>()) < 1e-5);

  // and at the solution, where both are numerically zero
  IptFit fit = fit_ipt(b.q, st.d);
  Eigen::VectorXd ga0 = ipt_gradient(b.q, st.d, fit.gamma);
  Eigen::VectorXd gf0 = fd_gradient(b.q, st.d, fit.gamma);
  CHECK((ga0 - gf0).lpNorm<Eigen::Infinity>() /
            std::max(1.0, gf0.lpNorm<Eigen::Infinity>()) < 1e-5);
  CHECK(ga0.lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("separated supports abort instead of returning degenerate weights") {
  // treated x-values sit strictly above every control: no tilt can balance
  const int n = 40;
  Eigen::MatrixXd q(n, 2);
  std::vector<double> d(static_cast<std::size_t>(n));
  Rng rng(5);
  for (int r = 0; r < n; ++r) {
    bool treated = r < n / 2;
    q(r, 0) = 1;
    q(r, 1) = treated ? 2.0 + rng.uniform() : -2.0 - rng.uniform();
    d[static_cast<std::size_t>(r)] = treated ? 1.0 : 0.0;
  }
  try {
    fit_ipt(q, d);
    FAIL("expected the tilt to abort on separated supports");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::SeparationDetected || e.code() == ErrorCode::IptDiverged));
  }
}

TEST_CASE("basis pruning: constant and duplicate columns drop with a note") {
  Rng rng0(99);
  Stack st = random_stack(rng0, 1, 30, 8, 0);
  const int n = st.n_rows();
  st.covariates.resize(n, 3);
  Rng rng(100);
  for (int r = 0; r < n; ++r) {
    st.covariates(r, 0) = 4.0;  // constant: collinear with the intercept
    st.covariates(r, 1) = rng.normal();
    st.covariates(r, 2) = st.covariates(r, 1);  // duplicate of x2
  }
  Basis b = build_basis(st);
  REQUIRE(b.pruned.size() == 2);
  CHECK(b.pruned[0].find("x1") != std::string::npos);
  CHECK(b.pruned[1].find("x3") != std::string::npos);
  for (const auto& name : b.names) {
    CHECK(name != "x1");
    CHECK(name != "x3");
  }
  // surviving design has full column rank
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b.q);
  qr.setThreshold(1e-10);
  CHECK(qr.rank() == b.n_cols());
}

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "drlpdid/errors.hpp"

namespace drlpdid {

// ---- outcome regressions -----------------------------------------------------

// Weighted least squares of y on x over rows with mask!=0, weights w. If the
// p x p normal equations are rank-deficient on the fitted subsample, the fit
// is retried on the pivot-selected full-rank column subset and the dropped
// coefficients are set to zero, so q'beta stays well defined downstream; a
// system with no usable column at all is an error.
inline Eigen::VectorXd fit_outcome_wls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const std::vector<double>& mask,
                                       const Eigen::VectorXd& w) {
  const int p = static_cast<int>(x.cols());
  Eigen::MatrixXd xtwx = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xtwy = Eigen::VectorXd::Zero(p);
  for (int r = 0; r < x.rows(); ++r) {
    if (mask[static_cast<std::size_t>(r)] == 0.0) continue;
    xtwx.noalias() += w(r) * x.row(r).transpose() * x.row(r);
    xtwy.noalias() += w(r) * y(r) * x.row(r).transpose();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtwx);
  qr.setThreshold(1e-12);
  const int rank = static_cast<int>(qr.rank());
  Eigen::VectorXd beta;
  if (rank == p) {
    beta = qr.solve(xtwy);
  } else if (rank > 0) {
    // refit on the columns the pivoting kept; zeros elsewhere
    Eigen::VectorXi piv = qr.colsPermutation().indices();
    Eigen::MatrixXd sub(rank, rank);
    Eigen::VectorXd rhs(rank);
    for (int a = 0; a < rank; ++a) {
      rhs(a) = xtwy(piv(a));
      for (int bcol = 0; bcol < rank; ++bcol) sub(a, bcol) = xtwx(piv(a), piv(bcol));
    }
    Eigen::VectorXd bsub = sub.ldlt().solve(rhs);
    beta = Eigen::VectorXd::Zero(p);
    for (int a = 0; a < rank; ++a) beta(piv(a)) = bsub(a);
  } else {
    throw Error(ErrorCode::SingularNormalEquations,
                "outcome regression normal equations are singular");
  }
  if (!beta.allFinite())
    throw Error(ErrorCode::SingularNormalEquations, "outcome regression produced non-finite coefficients");
  return beta;
}

inline Eigen::VectorXd fit_outcome_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const std::vector<double>& mask) {
  return fit_outcome_wls(x, y, mask, Eigen::VectorXd::Ones(x.rows()));
}

// ---- inverse-probability tilt --------------------------------------------------

struct IptOptions {
  double tol = 1e-9;        // sup-norm of the balance moments at the solution
  int max_iter = 100;
  double odds_cap = 1e8;    // accepted iterates beyond this indicate separation
  double trim_odds = 0;     // >0: clamp fitted odds at this value (off by default;
                            // breaks exact balance, recorded as a deviation note)
};

struct IptFit {
  Eigen::VectorXd gamma;
  Eigen::VectorXd odds;     // exp(q'gamma) for every row
  int iterations = 0;
  double moment_norm = 0;   // sup-norm of the balance moments at the solution

  double pscore(int r) const { return odds(r) / (1.0 + odds(r)); }
};

/*
 * Exponential tilt gamma maximizing
 *     L(gamma) = sum_i [ d_i q_i'gamma - (1 - d_i) exp(q_i'gamma) ].
 * The first-order condition sum_{d=1} q = sum_{d=0} exp(q'gamma) q makes the
 * fitted odds balance every basis column exactly in finite samples; with an
 * intercept in q the control odds also sum exactly to the treated count, so
 * the reweighted control mean is a proper (Hajek) average by construction.
 *
 * Damped Newton from gamma = 0 with an exact gradient/Hessian and one
 * iterative-refinement pass per solve. Far from the optimum, steps are
 * accepted on objective non-decrease with an overflow-safe evaluation; once
 * the gradient is small the objective is flat to machine precision, so steps
 * are instead accepted on gradient-norm descent. Accepted iterates whose
 * control odds exceed odds_cap abort as separation; a step that cannot be
 * accepted in either mode, or running out of iterations, aborts as
 * non-convergence.
 */
inline IptFit fit_ipt(const Eigen::MatrixXd& q, const std::vector<double>& d,
                      const IptOptions& opt = IptOptions{}) {
  const int n = static_cast<int>(q.rows());
  const int p = static_cast<int>(q.cols());
  const double kExpGuard = 690.0;  // exp beyond this overflows double range

  Eigen::VectorXd ctrl(n);
  for (int r = 0; r < n; ++r) ctrl(r) = 1.0 - d[static_cast<std::size_t>(r)];

  auto objective = [&](const Eigen::VectorXd& g) -> double {
    double val = 0;
    Eigen::VectorXd idx = q * g;
    for (int r = 0; r < n; ++r) {
      if (ctrl(r) > 0.5) {
        if (idx(r) > kExpGuard) return -std::numeric_limits<double>::infinity();
        val -= std::exp(idx(r));
      } else {
        val += idx(r);
      }
    }
    return val;
  };
  auto gradient = [&](const Eigen::VectorXd& g) -> Eigen::VectorXd {
    Eigen::VectorXd idx = q * g;
    Eigen::VectorXd u(n);
    for (int r = 0; r < n; ++r)
      u(r) = ctrl(r) > 0.5 ? std::exp(std::min(idx(r), kExpGuard)) : -1.0;
    return -(q.transpose() * u);  // sum_{d=1} q - sum_{d=0} exp(q'g) q
  };

  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(p);
  double f = objective(gamma);
  Eigen::VectorXd grad = gradient(gamma);

  IptFit fit;
  for (int it = 0; it < opt.max_iter; ++it) {
    double gnorm = grad.lpNorm<Eigen::Infinity>();
    if (gnorm <= opt.tol) {
      fit.gamma = gamma;
      fit.odds = (q * gamma).array().min(kExpGuard).exp();
      fit.iterations = it;
      fit.moment_norm = gnorm;
      return fit;
    }

    // Newton system (q' U q) s = grad with U = diag((1-d) exp(q'gamma))
    Eigen::VectorXd idx = q * gamma;
    Eigen::MatrixXd hn = Eigen::MatrixXd::Zero(p, p);
    for (int r = 0; r < n; ++r) {
      if (ctrl(r) < 0.5) continue;
      double u = std::exp(std::min(idx(r), kExpGuard));
      hn.noalias() += u * q.row(r).transpose() * q.row(r);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hn);
    Eigen::VectorXd step = ldlt.solve(grad);
    step += ldlt.solve(grad - hn * step);  // refinement recovers digits lost in hn
    if (!step.allFinite())
      throw Error(ErrorCode::IptDiverged, "tilt Newton step is non-finite");

    bool basin = gnorm < 1e-3;
    bool accepted = false;
    double lam = 1.0;
    const int max_halvings = basin ? 30 : 60;
    for (int half = 0; half < max_halvings; ++half, lam *= 0.5) {
      Eigen::VectorXd cand = gamma + lam * step;
      if (basin) {
        Eigen::VectorXd g2 = gradient(cand);
        if (g2.lpNorm<Eigen::Infinity>() < gnorm) {
          gamma = cand;
          grad = g2;
          f = objective(cand);
          accepted = true;
          break;
        }
      } else {
        double f2 = objective(cand);
        if (f2 >= f && std::isfinite(f2)) {
          gamma = cand;
          f = f2;
          grad = gradient(cand);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted)
      throw Error(ErrorCode::IptDiverged,
                  "tilt line search stalled at gradient norm " + std::to_string(gnorm));

    double max_odds = 0;
    Eigen::VectorXd idx2 = q * gamma;
    for (int r = 0; r < n; ++r)
      if (ctrl(r) > 0.5) max_odds = std::max(max_odds, std::exp(std::min(idx2(r), kExpGuard)));
    if (max_odds > opt.odds_cap)
      throw Error(ErrorCode::SeparationDetected,
                  "control odds exceeded " + std::to_string(opt.odds_cap) +
                  "; the treated and control covariate supports are separating");
  }
  throw Error(ErrorCode::IptDiverged,
              "tilt did not reach tolerance in " + std::to_string(opt.max_iter) + " iterations");
}

}  // namespace drlpdid

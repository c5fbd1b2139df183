#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "drlpdid/errors.hpp"
#include "drlpdid/rng.hpp"

namespace drlpdid {

// Standard normal quantile: Acklam's rational approximation polished with two
// Halley steps through erfc, giving near machine precision on (0,1).
inline double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw Error(ErrorCode::BadConfig, "normal quantile needs p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  double x;
  if (prob < 0.02425) {
    double q = std::sqrt(-2 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (prob <= 0.97575) {
    double q = prob - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  for (int i = 0; i < 2; ++i) {
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - prob;
    double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
    x -= u / (1 + x * u / 2);
  }
  return x;
}

// Clustered standard error from an influence column: variance is the plain
// mean of squares (column sums are already ~0 at the fitted parameters).
inline double cluster_se(const std::vector<double>& infl) {
  const auto n_c = infl.size();
  if (n_c < 2) throw Error(ErrorCode::TooFewClusters, "need at least 2 clusters");
  double v = 0;
  for (double x : infl) v += x * x;
  v /= static_cast<double>(n_c);
  return std::sqrt(v / static_cast<double>(n_c));
}

// ---- linear contrasts across horizons -------------------------------------

struct Contrast {
  double estimate = 0;
  double se = 0;
  std::vector<double> infl;
};

// Contrast sum_j w_j theta_j with influence column sum_j w_j IF_j. Weights are
// keyed by horizon and must all refer to computed horizons.
inline Contrast linear_contrast(const std::vector<int>& horizons,
                                const std::vector<double>& theta,
                                const Eigen::MatrixXd& infl,
                                const std::vector<std::pair<int, double>>& weights) {
  Contrast out;
  out.infl.assign(static_cast<std::size_t>(infl.rows()), 0.0);
  for (auto [h, w] : weights) {
    auto it = std::find(horizons.begin(), horizons.end(), h);
    if (it == horizons.end())
      throw Error(ErrorCode::AlignmentError,
                  "contrast weight on horizon " + std::to_string(h) + " which was not computed");
    int j = static_cast<int>(it - horizons.begin());
    out.estimate += w * theta[static_cast<std::size_t>(j)];
    for (int c = 0; c < infl.rows(); ++c)
      out.infl[static_cast<std::size_t>(c)] += w * infl(c, j);
  }
  out.se = cluster_se(out.infl);
  return out;
}

// ---- multiplier bootstrap ---------------------------------------------------

enum class Multiplier { Rademacher, Mammen, Webb };

inline const char* multiplier_name(Multiplier m) {
  switch (m) {
    case Multiplier::Rademacher: return "rademacher";
    case Multiplier::Mammen: return "mammen";
    case Multiplier::Webb: return "webb";
  }
  return "?";
}

inline Multiplier multiplier_from_name(const std::string& s) {
  if (s == "rademacher") return Multiplier::Rademacher;
  if (s == "mammen") return Multiplier::Mammen;
  if (s == "webb") return Multiplier::Webb;
  throw Error(ErrorCode::BadConfig, "unknown multiplier scheme: " + s);
}

inline double draw_multiplier(Multiplier m, Rng& rng) {
  double u = rng.uniform();
  switch (m) {
    case Multiplier::Rademacher:
      return u < 0.5 ? -1.0 : 1.0;
    case Multiplier::Mammen: {
      // two-point with mean 0, variance 1, third moment 1
      const double golden = (std::sqrt(5.0) + 1.0) / 2.0;
      const double p_low = golden / std::sqrt(5.0);
      return u < p_low ? 1.0 - golden : golden;
    }
    case Multiplier::Webb: {
      static const double pts[6] = {-1.224744871391589, -1.0, -0.7071067811865476,
                                    0.7071067811865476, 1.0,  1.224744871391589};
      int idx = std::min(5, static_cast<int>(u * 6.0));
      return pts[idx];
    }
  }
  return 0.0;
}

struct Band {
  double alpha = 0.05;
  Multiplier scheme = Multiplier::Rademacher;
  int b_draws = 999;
  std::uint64_t seed = 0;
  double c_star = 0;
  std::vector<int> horizons;
  std::vector<double> theta, se, ci_lo, ci_hi, band_lo, band_hi;
  std::vector<std::string> warnings;
};

/*
 * Sup-t simultaneous band. Each draw perturbs the estimate by
 *     theta*_h - theta_h = (1/N_C) sum_c xi_c IF_{c,h}
 * with one multiplier vector shared across horizons, preserving the
 * cross-horizon dependence; the critical value is the empirical (1-alpha)
 * quantile of T* = max_h |theta*_h - theta_h| / se_h. Draw b uses the seed
 * derived from (seed, b), so results are identical however draws are batched.
 */
inline Band multiplier_bootstrap(const std::vector<int>& horizons,
                                 const std::vector<double>& theta,
                                 const Eigen::MatrixXd& infl, int b_draws,
                                 Multiplier scheme, double alpha, std::uint64_t seed) {
  if (b_draws < 1) throw Error(ErrorCode::BadConfig, "bootstrap needs B >= 1");
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorCode::BadConfig, "alpha must be in (0,1)");
  const int nh = static_cast<int>(horizons.size());
  const int n_c = static_cast<int>(infl.rows());
  if (n_c < 2) throw Error(ErrorCode::TooFewClusters, "need at least 2 clusters");

  Band band;
  band.alpha = alpha;
  band.scheme = scheme;
  band.b_draws = b_draws;
  band.seed = seed;
  band.horizons = horizons;
  band.theta = theta;

  std::vector<int> active;
  band.se.resize(nh);
  for (int j = 0; j < nh; ++j) {
    double v = infl.col(j).squaredNorm() / n_c;
    band.se[j] = std::sqrt(v / n_c);
    if (band.se[j] > 0) active.push_back(j);
    else band.warnings.push_back("horizon " + std::to_string(horizons[j]) +
                                 " has zero SE; excluded from the sup");
  }
  if (active.empty())
    throw Error(ErrorCode::DegenerateBand, "every horizon has zero standard error");

  std::vector<double> tstar(static_cast<std::size_t>(b_draws));
  Eigen::VectorXd xi(n_c);
  for (int bdx = 0; bdx < b_draws; ++bdx) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(bdx)));
    for (int c = 0; c < n_c; ++c) xi(c) = draw_multiplier(scheme, rng);
    double tmax = 0;
    for (int j : active) {
      double dev = xi.dot(infl.col(j)) / n_c;
      tmax = std::max(tmax, std::abs(dev) / band.se[j]);
    }
    tstar[static_cast<std::size_t>(bdx)] = tmax;
  }
  std::sort(tstar.begin(), tstar.end());
  int rank = static_cast<int>(std::ceil((1.0 - alpha) * b_draws));
  rank = std::clamp(rank, 1, b_draws);
  band.c_star = tstar[static_cast<std::size_t>(rank - 1)];

  double z = normal_quantile(1.0 - alpha / 2.0);
  band.ci_lo.resize(nh);
  band.ci_hi.resize(nh);
  band.band_lo.resize(nh);
  band.band_hi.resize(nh);
  for (int j = 0; j < nh; ++j) {
    band.ci_lo[j] = theta[j] - z * band.se[j];
    band.ci_hi[j] = theta[j] + z * band.se[j];
    band.band_lo[j] = theta[j] - band.c_star * band.se[j];
    band.band_hi[j] = theta[j] + band.c_star * band.se[j];
  }
  return band;
}

}  // namespace drlpdid

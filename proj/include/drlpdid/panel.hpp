#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drlpdid/errors.hpp"

namespace drlpdid {

// Staggered-adoption panel. Periods are 1..T. Treatment is absorbing: a unit
// with finite entry date G is treated at every s >= G. Never-treated units
// carry a distinct sentinel so no arithmetic can silently treat them as a
// far-future date.
struct Panel {
  static constexpr int kNever = -1;

  int n_units = 0;
  int n_periods = 0;                 // T
  Eigen::MatrixXd outcome;           // n_units x T, no missing cells
  Eigen::MatrixXd covariates;        // n_units x k, predetermined slice
  std::vector<Eigen::MatrixXd> covariates_tv;  // optional: k matrices, n_units x T
  std::vector<int> first_treat;      // G_i in 1..T, or kNever
  std::vector<int> cluster_id;       // dense 0..n_clusters-1
  int n_clusters = 0;

  std::vector<std::string> unit_labels;
  std::vector<std::string> covariate_names;

  bool ever_treated(int i) const { return first_treat[i] != kNever; }

  // treatment status at period s (1-based)
  bool treated_at(int i, int s) const {
    return ever_treated(i) && s >= first_treat[i];
  }

  int n_covariates() const { return static_cast<int>(covariates.cols()); }

  // covariate j of unit i as measured for entry date t (the base-period value
  // when a time-varying covariate panel is attached, otherwise the
  // predetermined slice)
  double covariate_at(int i, int j, int entry_date) const {
    if (!covariates_tv.empty()) {
      int base = std::max(entry_date - 1, 1);
      return covariates_tv[static_cast<std::size_t>(j)](i, base - 1);
    }
    return covariates(i, j);
  }
};

inline void validate_panel(const Panel& p) {
  if (p.n_units <= 0 || p.n_periods <= 0)
    throw Error(ErrorCode::BadPanel, "panel has no units or no periods");
  if (p.outcome.rows() != p.n_units || p.outcome.cols() != p.n_periods)
    throw Error(ErrorCode::BadPanel, "outcome matrix shape mismatch");
  if (static_cast<int>(p.first_treat.size()) != p.n_units)
    throw Error(ErrorCode::BadPanel, "first_treat length mismatch");
  if (static_cast<int>(p.cluster_id.size()) != p.n_units)
    throw Error(ErrorCode::BadPanel, "cluster_id length mismatch");
  if (!p.outcome.allFinite())
    throw Error(ErrorCode::BadPanel, "outcome contains non-finite cells; missing data is rejected, not dropped");
  for (int i = 0; i < p.n_units; ++i) {
    int g = p.first_treat[i];
    if (g != Panel::kNever && (g < 1 || g > p.n_periods))
      throw Error(ErrorCode::InvalidEntryDate,
                  "first_treat outside 1..T for unit " + std::to_string(i));
    if (p.cluster_id[i] < 0 || p.cluster_id[i] >= p.n_clusters)
      throw Error(ErrorCode::BadPanel, "cluster_id out of range for unit " + std::to_string(i));
  }
}

// ---- base-period rules -----------------------------------------------------

// A base rule maps an entry date t to pre-treatment periods and weights that
// sum to one. The canonical rule uses the single period t-1.
struct BaseRule {
  enum class Kind { LastPre, PreAverage, Weighted };

  Kind kind = Kind::LastPre;
  int window = 1;                // width of {t-window .. t-1}
  std::vector<double> weights;   // Weighted: ascending over that window
  std::string name = "last_pre";

  static BaseRule last_pre() { return BaseRule{}; }

  static BaseRule pre_average(int window) {
    if (window < 1) throw Error(ErrorCode::BadConfig, "pre_average window must be >= 1");
    BaseRule r;
    r.kind = Kind::PreAverage;
    r.window = window;
    r.name = "pre_average(" + std::to_string(window) + ")";
    return r;
  }

  // explicit weights over {t-m .. t-1} in ascending period order
  static BaseRule weighted(std::vector<double> w) {
    if (w.empty()) throw Error(ErrorCode::BadConfig, "weighted base rule needs weights");
    double sum = 0;
    for (double v : w) {
      if (!(v >= 0)) throw Error(ErrorCode::BadConfig, "base weights must be nonnegative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw Error(ErrorCode::BadConfig, "base weights must sum to 1");
    BaseRule r;
    r.kind = Kind::Weighted;
    r.window = static_cast<int>(w.size());
    r.weights = std::move(w);
    r.name = "weighted(" + std::to_string(r.window) + ")";
    return r;
  }

  // pre periods with weights for entry date t; throws if inadmissible
  std::vector<std::pair<int, double>> periods(int t) const {
    int w = (kind == Kind::LastPre) ? 1 : window;
    if (t - w < 1)
      throw Error(ErrorCode::InadmissibleBase,
                  "base rule " + name + " needs periods before 1 at entry date " + std::to_string(t));
    std::vector<std::pair<int, double>> out;
    out.reserve(static_cast<std::size_t>(w));
    for (int l = t - w; l <= t - 1; ++l) {
      double wt = (kind == Kind::Weighted) ? weights[static_cast<std::size_t>(l - (t - w))]
                                           : 1.0 / w;
      out.emplace_back(l, wt);
    }
    return out;
  }

  bool admissible(int t) const {
    int w = (kind == Kind::LastPre) ? 1 : window;
    return t - w >= 1;
  }
};

// ---- base values and long differences ---------------------------------------

inline double base_value(const Panel& p, int unit, int t, const BaseRule& rule) {
  double b = 0.0;
  for (auto [l, w] : rule.periods(t)) b += w * p.outcome(unit, l - 1);
  return b;
}

inline double long_diff(const Panel& p, int unit, int t, int h, const BaseRule& rule) {
  int s = t + h;
  if (s < 1 || s > p.n_periods)
    throw Error(ErrorCode::HorizonOutOfRange,
                "t+h = " + std::to_string(s) + " outside 1..T");
  return p.outcome(unit, s - 1) - base_value(p, unit, t, rule);
}

// ---- clean-control sets and stacks ------------------------------------------

// Whether units entering exactly at the evaluation date t+h stay in the
// control pool. Strict keeps only units untreated at t+h; Inclusive also
// keeps entrants at t+h (h >= 1), the convention of the IPW-only estimator.
enum class ControlBoundary { Strict, Inclusive };

// Units untreated throughout {t+h} union pre_periods(t) (h >= 0); with
// absorbing treatment this is exactly the set untreated at t+h. Negative
// horizons reuse the h=0 membership.
inline std::vector<int> clean_control_set(const Panel& p, int t, int h,
                                          const BaseRule& rule,
                                          ControlBoundary boundary = ControlBoundary::Strict) {
  if (!rule.admissible(t))
    throw Error(ErrorCode::InadmissibleBase, "entry date " + std::to_string(t));
  int eff_h = std::max(h, 0);
  std::vector<int> window;
  for (auto [l, w] : rule.periods(t)) window.push_back(l);
  window.push_back(t + eff_h);

  std::vector<int> out;
  for (int i = 0; i < p.n_units; ++i) {
    if (p.first_treat[i] == t) continue;  // the entering cohort is never a control
    bool clean = true;
    for (int s : window) {
      if (p.treated_at(i, s)) { clean = false; break; }
    }
    if (!clean && boundary == ControlBoundary::Inclusive && eff_h >= 1 &&
        p.first_treat[i] == t + eff_h) {
      // entrant at the evaluation date itself: untreated strictly before t+h
      clean = true;
      for (int s : window) {
        if (s < t + eff_h && p.treated_at(i, s)) { clean = false; break; }
      }
    }
    if (clean) out.push_back(i);
  }
  return out;
}

// One stack row per (unit, entry date) membership. Covariate rows live in a
// dense matrix aligned with the flat arrays.
struct Stack {
  int horizon = 0;
  std::vector<int> unit;
  std::vector<int> entry_date;
  std::vector<double> d;        // 1 treated entrant, 0 clean control
  std::vector<double> dlt;      // long difference at this horizon
  std::vector<int> cluster;
  Eigen::MatrixXd covariates;   // n_rows x k
  std::vector<int> entry_dates; // retained, ascending
  std::vector<std::string> warnings;

  int n_rows() const { return static_cast<int>(d.size()); }
  int n_treated() const {
    int n = 0;
    for (double v : d) n += (v > 0.5);
    return n;
  }
  int n_controls() const { return n_rows() - n_treated(); }
};

// Pool treated entrants and clean controls over all admissible entry dates.
// Cells with entrants but no clean controls are dropped with a warning; the
// population formulas condition on nonempty comparison groups.
inline Stack build_stack(const Panel& p, int h, const BaseRule& rule = BaseRule::last_pre(),
                         ControlBoundary boundary = ControlBoundary::Strict) {
  Stack st;
  st.horizon = h;
  int k = p.n_covariates();

  std::vector<std::pair<int, std::vector<int>>> cells;  // (t, controls)
  std::vector<std::vector<int>> treated_by_cell;
  int total_rows = 0;
  for (int t = 1; t <= p.n_periods; ++t) {
    if (!rule.admissible(t)) continue;
    int s = t + h;                       // evaluation period for this horizon
    int s0 = t + std::max(h, 0);         // membership period (h<0 reuses h=0)
    if (s < 1 || s > p.n_periods || s0 > p.n_periods) continue;

    std::vector<int> treated;
    for (int i = 0; i < p.n_units; ++i)
      if (p.first_treat[i] == t) treated.push_back(i);
    if (treated.empty()) continue;

    std::vector<int> controls = clean_control_set(p, t, h, rule, boundary);
    if (controls.empty()) {
      st.warnings.push_back("entry date " + std::to_string(t) + " dropped at h=" +
                            std::to_string(h) + ": no clean controls");
      continue;
    }
    total_rows += static_cast<int>(treated.size() + controls.size());
    st.entry_dates.push_back(t);
    cells.emplace_back(t, std::move(controls));
    treated_by_cell.push_back(std::move(treated));
  }
  if (st.entry_dates.empty())
    throw Error(ErrorCode::EmptyStack, "no admissible (entry date, horizon) cells at h=" + std::to_string(h));

  st.unit.reserve(total_rows);
  st.entry_date.reserve(total_rows);
  st.d.reserve(total_rows);
  st.dlt.reserve(total_rows);
  st.cluster.reserve(total_rows);
  st.covariates.resize(total_rows, k);

  int r = 0;
  auto push_row = [&](int i, int t, double dval) {
    st.unit.push_back(i);
    st.entry_date.push_back(t);
    st.d.push_back(dval);
    st.dlt.push_back(long_diff(p, i, t, h, rule));
    st.cluster.push_back(p.cluster_id[i]);
    for (int j = 0; j < k; ++j) st.covariates(r, j) = p.covariate_at(i, j, t);
    ++r;
  };
  for (std::size_t c = 0; c < cells.size(); ++c) {
    int t = cells[c].first;
    for (int i : treated_by_cell[c]) push_row(i, t, 1.0);
    for (int i : cells[c].second) push_row(i, t, 0.0);
  }
  return st;
}

}  // namespace drlpdid

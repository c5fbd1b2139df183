#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "drlpdid/errors.hpp"
#include "drlpdid/panel.hpp"

namespace drlpdid {

// shortest representation that parses back to the same double
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double back = std::strtod(buf, nullptr);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char trial[40];
      std::snprintf(trial, sizeof trial, "%.*g", prec, v);
      if (std::strtod(trial, nullptr) == v) return trial;
    }
  }
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') { out.push_back(cur); cur.clear(); }
    else if (ch != '\r') cur += ch;
  }
  out.push_back(cur);
  return out;
}

inline bool parse_int(const std::string& s, long& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtol(s.c_str(), &end, 10);
  return end && *end == '\0';
}

inline bool parse_real(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end && *end == '\0';
}

}  // namespace detail

struct IngestOptions {
  // empty: every column beyond the reserved ones is a covariate
  std::vector<std::string> covariates;
  std::string cluster_column = "cluster";
};

/*
 * Long-format panel CSV: unit_id, time, outcome, first_treat, optionally a
 * cluster column, remaining columns covariates. first_treat is blank for
 * never-treated units and must be constant within a unit. Times must form one
 * contiguous integer range shared by all units; they are shifted to 1..T
 * internally. Covariates are kept per period, and stack construction reads
 * them at each cell's base period.
 */
inline Panel ingest_csv(const std::string& path, const IngestOptions& opt = IngestOptions{}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IngestError, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IngestError, path + " is empty");
  std::vector<std::string> header = detail::split_csv(line);
  auto col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  for (const char* req : {"unit_id", "time", "outcome", "first_treat"})
    if (col(req) < 0)
      throw Error(ErrorCode::IngestError, path + ": missing required column " + req);
  const int c_unit = col("unit_id"), c_time = col("time"), c_out = col("outcome"),
            c_ft = col("first_treat");
  const int c_cluster = col(opt.cluster_column);

  std::vector<int> cov_cols;
  std::vector<std::string> cov_names;
  if (opt.covariates.empty()) {
    for (int j = 0; j < static_cast<int>(header.size()); ++j) {
      if (j == c_unit || j == c_time || j == c_out || j == c_ft || j == c_cluster) continue;
      cov_cols.push_back(j);
      cov_names.push_back(header[static_cast<std::size_t>(j)]);
    }
  } else {
    for (const std::string& name : opt.covariates) {
      int j = col(name);
      if (j < 0) throw Error(ErrorCode::IngestError, path + ": covariate column " + name + " not found");
      cov_cols.push_back(j);
      cov_names.push_back(name);
    }
  }
  const int k = static_cast<int>(cov_cols.size());

  struct Row {
    long time;
    double outcome;
    bool never;
    long first_treat;
    std::string cluster;
    std::vector<double> cov;
  };
  std::vector<std::string> unit_order;
  std::unordered_map<std::string, std::vector<Row>> by_unit;
  long t_lo = 0, t_hi = 0;
  bool any = false;

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f = detail::split_csv(line);
    if (f.size() != header.size())
      throw Error(ErrorCode::IngestError,
                  path + " line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    Row row;
    const std::string& uid = f[static_cast<std::size_t>(c_unit)];
    if (uid.empty())
      throw Error(ErrorCode::IngestError, path + " line " + std::to_string(line_no) + ": empty unit_id");
    if (!detail::parse_int(f[static_cast<std::size_t>(c_time)], row.time))
      throw Error(ErrorCode::IngestError,
                  path + " line " + std::to_string(line_no) + ": non-integer time '" +
                      f[static_cast<std::size_t>(c_time)] + "'");
    if (!detail::parse_real(f[static_cast<std::size_t>(c_out)], row.outcome))
      throw Error(ErrorCode::IngestError,
                  path + " line " + std::to_string(line_no) + ": bad outcome '" +
                      f[static_cast<std::size_t>(c_out)] + "'");
    const std::string& ft = f[static_cast<std::size_t>(c_ft)];
    row.never = ft.empty();
    row.first_treat = 0;
    if (!row.never && !detail::parse_int(ft, row.first_treat))
      throw Error(ErrorCode::IngestError,
                  path + " line " + std::to_string(line_no) + ": bad first_treat '" + ft + "'");
    if (c_cluster >= 0) row.cluster = f[static_cast<std::size_t>(c_cluster)];
    row.cov.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j)
      if (!detail::parse_real(f[static_cast<std::size_t>(cov_cols[static_cast<std::size_t>(j)])],
                              row.cov[static_cast<std::size_t>(j)]))
        throw Error(ErrorCode::IngestError,
                    path + " line " + std::to_string(line_no) + ": bad value in column " +
                        cov_names[static_cast<std::size_t>(j)]);

    auto [it, fresh] = by_unit.try_emplace(uid);
    if (fresh) unit_order.push_back(uid);
    for (const Row& prev : it->second)
      if (prev.time == row.time)
        throw Error(ErrorCode::DuplicateObservation,
                    path + " line " + std::to_string(line_no) + ": duplicate (unit_id=" + uid +
                        ", time=" + std::to_string(row.time) + ")");
    if (!any) { t_lo = t_hi = row.time; any = true; }
    t_lo = std::min(t_lo, row.time);
    t_hi = std::max(t_hi, row.time);
    it->second.push_back(std::move(row));
  }
  if (!any) throw Error(ErrorCode::IngestError, path + " has no data rows");

  const int t_len = static_cast<int>(t_hi - t_lo + 1);
  Panel p;
  p.n_units = static_cast<int>(unit_order.size());
  p.n_periods = t_len;
  p.outcome.resize(p.n_units, t_len);
  p.covariates.resize(p.n_units, k);
  p.covariates_tv.assign(static_cast<std::size_t>(k), Eigen::MatrixXd::Zero(p.n_units, t_len));
  p.first_treat.resize(static_cast<std::size_t>(p.n_units));
  p.cluster_id.resize(static_cast<std::size_t>(p.n_units));
  p.unit_labels = unit_order;
  p.covariate_names = cov_names;

  std::unordered_map<std::string, int> cluster_ids;  // dense ids by first appearance
  for (int i = 0; i < p.n_units; ++i) {
    auto& rows = by_unit[unit_order[static_cast<std::size_t>(i)]];
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.time < b.time; });
    if (static_cast<int>(rows.size()) != t_len)
      throw Error(ErrorCode::IngestError,
                  "unit " + unit_order[static_cast<std::size_t>(i)] + " has " +
                      std::to_string(rows.size()) + " rows; the panel spans " +
                      std::to_string(t_len) + " periods (gaps are not allowed)");
    for (int s = 0; s < t_len; ++s)
      if (rows[static_cast<std::size_t>(s)].time != t_lo + s)
        throw Error(ErrorCode::IngestError,
                    "unit " + unit_order[static_cast<std::size_t>(i)] +
                        ": gap in time series at time " + std::to_string(t_lo + s));

    const Row& first = rows.front();
    for (const Row& row : rows) {
      if (row.never != first.never || (!row.never && row.first_treat != first.first_treat))
        throw Error(ErrorCode::IngestError,
                    "unit " + unit_order[static_cast<std::size_t>(i)] +
                        ": first_treat varies across rows");
      if (row.cluster != first.cluster)
        throw Error(ErrorCode::IngestError,
                    "unit " + unit_order[static_cast<std::size_t>(i)] +
                        ": cluster varies across rows");
    }
    if (first.never) {
      p.first_treat[static_cast<std::size_t>(i)] = Panel::kNever;
    } else {
      long g = first.first_treat - t_lo + 1;
      if (g < 1 || g > t_len)
        throw Error(ErrorCode::InvalidEntryDate,
                    "unit " + unit_order[static_cast<std::size_t>(i)] + ": first_treat " +
                        std::to_string(first.first_treat) + " outside observed times " +
                        std::to_string(t_lo) + ".." + std::to_string(t_hi) +
                        " (never-treated units leave it blank)");
      p.first_treat[static_cast<std::size_t>(i)] = static_cast<int>(g);
    }
    for (int s = 0; s < t_len; ++s) {
      const Row& row = rows[static_cast<std::size_t>(s)];
      p.outcome(i, s) = row.outcome;
      for (int j = 0; j < k; ++j)
        p.covariates_tv[static_cast<std::size_t>(j)](i, s) = row.cov[static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < k; ++j) p.covariates(i, j) = rows.front().cov[static_cast<std::size_t>(j)];
    if (c_cluster >= 0) {
      auto [it_c, fresh_c] = cluster_ids.try_emplace(first.cluster,
                                                     static_cast<int>(cluster_ids.size()));
      p.cluster_id[static_cast<std::size_t>(i)] = it_c->second;
      (void)fresh_c;
    }
  }

  if (c_cluster >= 0) {
    p.n_clusters = static_cast<int>(cluster_ids.size());
  } else {
    for (int i = 0; i < p.n_units; ++i) p.cluster_id[static_cast<std::size_t>(i)] = i;
    p.n_clusters = p.n_units;
  }

  validate_panel(p);
  return p;
}

// Inverse of ingest_csv up to column order: times 1..T, covariates written per
// period (the base-period slice when only a static matrix is held), values at
// full round-trip precision.
inline void export_csv(const Panel& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IngestError, "cannot write " + path);
  out << "unit_id,time,outcome,first_treat,cluster";
  for (int j = 0; j < p.n_covariates(); ++j)
    out << ","
        << (j < static_cast<int>(p.covariate_names.size()) ? p.covariate_names[static_cast<std::size_t>(j)]
                                                           : "x" + std::to_string(j + 1));
  out << "\n";
  for (int i = 0; i < p.n_units; ++i) {
    std::string label = i < static_cast<int>(p.unit_labels.size())
                            ? p.unit_labels[static_cast<std::size_t>(i)]
                            : "u" + std::to_string(i + 1);
    for (int t = 1; t <= p.n_periods; ++t) {
      out << label << "," << t << "," << fmt_double(p.outcome(i, t - 1)) << ",";
      if (p.ever_treated(i)) out << p.first_treat[static_cast<std::size_t>(i)];
      out << "," << p.cluster_id[static_cast<std::size_t>(i)];
      for (int j = 0; j < p.n_covariates(); ++j) {
        double v = p.covariates_tv.empty() ? p.covariates(i, j)
                                           : p.covariates_tv[static_cast<std::size_t>(j)](i, t - 1);
        out << "," << fmt_double(v);
      }
      out << "\n";
    }
  }
}

}  // namespace drlpdid

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sit/basic_stats.hpp"
#include "sit/error.hpp"

namespace sit {

// Column-oriented analysis table. Numeric missing = NaN, categorical
// missing = empty string.
class DataTable {
 public:
  struct Column {
    bool categorical = false;
    std::vector<double> numeric;
    std::vector<std::string> labels;
    std::vector<std::string> levels;  // declared level order for categoricals
  };

  explicit DataTable(std::vector<std::string> row_ids = {}) : row_ids_(std::move(row_ids)) {}

  std::size_t rows() const { return row_ids_.size(); }
  const std::vector<std::string>& row_ids() const { return row_ids_; }

  void add_numeric(const std::string& name, std::vector<double> values) {
    check_length(name, values.size());
    Column c;
    c.numeric = std::move(values);
    columns_[name] = std::move(c);
  }

  void add_categorical(const std::string& name, std::vector<std::string> values,
                       std::vector<std::string> levels = {}) {
    check_length(name, values.size());
    Column c;
    c.categorical = true;
    if (levels.empty()) {
      std::set<std::string> seen;
      for (const auto& v : values)
        if (!v.empty()) seen.insert(v);
      levels.assign(seen.begin(), seen.end());
    }
    c.labels = std::move(values);
    c.levels = std::move(levels);
    columns_[name] = std::move(c);
  }

  bool has(const std::string& name) const { return columns_.count(name) > 0; }

  const Column& column(const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) fail(Errc::not_found, "unknown column '" + name + "'");
    return it->second;
  }

 private:
  void check_length(const std::string& name, std::size_t n) const {
    if (n != row_ids_.size())
      fail(Errc::validation, "column '" + name + "' has " + std::to_string(n) +
                                 " rows, table has " + std::to_string(row_ids_.size()));
  }

  std::vector<std::string> row_ids_;
  std::map<std::string, Column> columns_;
};

struct CovariateBlock {
  std::string name;
  std::vector<std::string> columns;
};

inline const std::vector<std::string>& trait_columns() {
  static const std::vector<std::string> cols = {
      "growth_mindset", "implicit_bias_awareness", "gender_stem_stereotypes",
      "locus_of_control", "social_values", "inclusive_teaching"};
  return cols;
}

inline const std::vector<std::string>& sociodemographic_columns() {
  static const std::vector<std::string> cols = {
      "age",     "gender",           "like_teaching",  "master",     "disability_training",
      "married", "teaching_italian", "teaching_maths", "birth_area"};
  return cols;
}

// Named blocks of the SIT models: IATRev, IATScore, SITScore, W (trait
// indices), X (socio-demographics), LexicalDensity, FramingDummies.
inline CovariateBlock standard_block(const std::string& name) {
  if (name == "IATRev") return {name, {"iat_rev"}};
  if (name == "IATScore") return {name, {"iat_d"}};
  if (name == "SITScore") return {name, {"sit"}};
  if (name == "W") return {name, trait_columns()};
  if (name == "X") return {name, sociodemographic_columns()};
  if (name == "LexicalDensity") return {name, {"lexical_density"}};
  if (name == "FramingDummies") return {name, {"framing"}};
  fail(Errc::not_found, "unknown covariate block '" + name + "'");
}

struct DesignSpec {
  std::string name;
  std::string outcome = "sit";
  std::vector<CovariateBlock> blocks;
  std::map<std::string, std::string> reference_levels = {{"birth_area", "Center"},
                                                         {"framing", "info_guilt"}};
};

inline DesignSpec make_spec(std::string name, std::string outcome,
                            const std::vector<std::string>& blocks) {
  DesignSpec s;
  s.name = std::move(name);
  s.outcome = std::move(outcome);
  for (const auto& b : blocks) s.blocks.push_back(standard_block(b));
  return s;
}

// The model columns reported in the SIT regression tables.
inline std::vector<DesignSpec> builtin_specs() {
  return {
      make_spec("table2_col1", "sit", {"IATRev"}),
      make_spec("table2_col2", "sit", {"IATRev", "X"}),
      make_spec("table2_col3", "sit", {"IATRev", "IATScore", "X"}),
      make_spec("table2_col4", "sit", {"IATRev", "IATScore", "W"}),
      make_spec("table2_col5", "sit", {"IATRev", "IATScore", "W", "X"}),
      make_spec("table2_col6", "sit", {"IATRev", "IATScore", "W", "X", "LexicalDensity"}),
      make_spec("table3_col1", "sit", {"IATScore", "W", "X", "LexicalDensity"}),
      make_spec("table3_col2", "iat_d", {"SITScore", "W", "X", "LexicalDensity"}),
      make_spec("framing_col1", "sit", {"FramingDummies"}),
      make_spec("framing_col2", "sit", {"FramingDummies", "IATRev", "W", "X"}),
      make_spec("framing_col3", "sit",
                {"FramingDummies", "IATRev", "IATScore", "W", "X", "LexicalDensity"}),
      make_spec("robustness_col1", "sit", {"IATRev", "IATScore", "W", "X", "LexicalDensity"}),
      make_spec("robustness_col2", "sit_sd", {"IATRev", "IATScore", "W", "X", "LexicalDensity"}),
      make_spec("robustness_col3", "sit_factor",
                {"IATRev", "IATScore", "W", "X", "LexicalDensity"}),
  };
}

inline DesignSpec builtin_spec(const std::string& name) {
  for (auto& s : builtin_specs())
    if (s.name == name) return s;
  fail(Errc::not_found, "unknown model spec '" + name + "'");
}

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> columns;  // "(Intercept)" first
  std::vector<std::string> row_ids;
  std::size_t dropped_rows = 0;
};

// Intercept, then block columns in spec order. Categoricals expand to one
// dummy per non-reference level ("name=level"), in declared level order.
inline Design build_design(const DataTable& table, const DesignSpec& spec) {
  std::vector<std::string> vars;
  for (const auto& b : spec.blocks)
    for (const auto& c : b.columns) {
      if (std::find(vars.begin(), vars.end(), c) != vars.end())
        fail(Errc::validation, "column '" + c + "' appears in more than one block");
      if (c == spec.outcome) fail(Errc::validation, "outcome '" + c + "' used as a covariate");
      vars.push_back(c);
    }
  const auto& outcome = table.column(spec.outcome);
  if (outcome.categorical) fail(Errc::validation, "outcome must be numeric");
  for (const auto& v : vars) table.column(v);

  std::vector<bool> keep(table.rows(), true);
  auto mark_missing = [&](const DataTable::Column& col) {
    for (std::size_t i = 0; i < table.rows(); ++i)
      if (col.categorical ? col.labels[i].empty() : std::isnan(col.numeric[i])) keep[i] = false;
  };
  mark_missing(outcome);
  for (const auto& v : vars) mark_missing(table.column(v));

  Design d;
  d.columns.push_back("(Intercept)");
  struct Source {
    const DataTable::Column* col;
    std::string level;  // empty for numeric
  };
  std::vector<Source> sources;
  for (const auto& v : vars) {
    const auto& col = table.column(v);
    if (!col.categorical) {
      d.columns.push_back(v);
      sources.push_back({&col, {}});
      continue;
    }
    std::string ref;
    if (auto it = spec.reference_levels.find(v); it != spec.reference_levels.end())
      ref = it->second;
    else if (!col.levels.empty())
      ref = col.levels.front();
    if (std::find(col.levels.begin(), col.levels.end(), ref) == col.levels.end())
      fail(Errc::validation, "reference level '" + ref + "' not a level of '" + v + "'");
    for (const auto& lvl : col.levels) {
      if (lvl == ref) continue;
      d.columns.push_back(v + "=" + lvl);
      sources.push_back({&col, lvl});
    }
  }

  const auto n_kept = static_cast<Eigen::Index>(std::count(keep.begin(), keep.end(), true));
  d.dropped_rows = table.rows() - static_cast<std::size_t>(n_kept);
  if (n_kept == 0) fail(Errc::insufficient_data, "every row has a missing value");
  d.x.resize(n_kept, static_cast<Eigen::Index>(d.columns.size()));
  d.y.resize(n_kept);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    if (!keep[i]) continue;
    d.x(r, 0) = 1.0;
    for (std::size_t c = 0; c < sources.size(); ++c) {
      const auto& s = sources[c];
      d.x(r, static_cast<Eigen::Index>(c + 1)) =
          s.level.empty() ? s.col->numeric[i] : (s.col->labels[i] == s.level ? 1.0 : 0.0);
    }
    d.y(r) = outcome.numeric[i];
    d.row_ids.push_back(table.row_ids()[i]);
    ++r;
  }
  return d;
}

struct ResidualSummary {
  double min = kNaN, q1 = kNaN, median = kNaN, q3 = kNaN, max = kNaN;
};

struct FitResult {
  std::string name;
  std::vector<std::string> terms;
  std::map<std::string, double> coefficients;
  std::map<std::string, double> std_errors;
  std::map<std::string, double> t_values;
  std::map<std::string, double> p_values;
  Eigen::VectorXd residuals;
  Eigen::VectorXd fitted;
  std::size_t n = 0;
  std::size_t p = 0;
  double rss = 0.0;
  double sigma2 = 0.0;
  double r_squared = 0.0;
  ResidualSummary residual_summary;
};

// Least squares via column-pivoted QR; classical SEs from
// sigma^2 (X'X)^-1 with sigma^2 = RSS / (n - p).
inline FitResult ols_fit(const Design& d) {
  const auto n = d.x.rows();
  const auto p = d.x.cols();
  if (n <= p) fail(Errc::insufficient_data, "OLS needs more rows than columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.x);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < p; ++i)
      names += (names.empty() ? "" : ", ") + d.columns.at(static_cast<std::size_t>(perm(i)));
    fail(Errc::rank_deficient, "design is rank deficient; collinear columns: " + names);
  }
  const Eigen::VectorXd beta = qr.solve(d.y);

  // (X'X)^-1 = P R^-1 R^-T P^T
  const Eigen::MatrixXd rtri = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv =
      rtri.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd xtx_inv_perm = rinv * rinv.transpose();
  const Eigen::MatrixXd xtx_inv =
      qr.colsPermutation() * xtx_inv_perm * qr.colsPermutation().transpose();

  FitResult f;
  f.terms = d.columns;
  f.n = static_cast<std::size_t>(n);
  f.p = static_cast<std::size_t>(p);
  f.fitted = d.x * beta;
  f.residuals = d.y - f.fitted;
  f.rss = f.residuals.squaredNorm();
  const double df = static_cast<double>(n - p);
  f.sigma2 = f.rss / df;
  const double tss = (d.y.array() - d.y.mean()).square().sum();
  f.r_squared = tss > 0.0 ? 1.0 - f.rss / tss : kNaN;

  boost::math::students_t dist(df);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& term = d.columns.at(static_cast<std::size_t>(j));
    const double se = std::sqrt(std::max(0.0, f.sigma2 * xtx_inv(j, j)));
    f.coefficients[term] = beta(j);
    f.std_errors[term] = se;
    if (se > 0.0) {
      const double t = beta(j) / se;
      f.t_values[term] = t;
      f.p_values[term] = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
    } else {
      f.t_values[term] = kNaN;
      f.p_values[term] = kNaN;
    }
  }
  std::vector<double> res(f.residuals.data(), f.residuals.data() + n);
  f.residual_summary = {quantile(res, 0.0), quantile(res, 0.25), quantile(res, 0.5),
                        quantile(res, 0.75), quantile(res, 1.0)};
  return f;
}

inline FitResult fit(const DataTable& table, const DesignSpec& spec) {
  auto f = ols_fit(build_design(table, spec));
  f.name = spec.name;
  return f;
}

// * p<0.10, ** p<0.05, *** p<0.01
inline std::string stars(double p) {
  if (std::isnan(p)) return "";
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.10) return "*";
  return "";
}

// Side-by-side coefficient table: estimate with stars, SE in parentheses
// underneath, one column per model.
inline std::string render_table(const std::vector<FitResult>& fits) {
  std::vector<std::string> terms;
  for (const auto& f : fits)
    for (const auto& t : f.terms)
      if (t != "(Intercept)" && std::find(terms.begin(), terms.end(), t) == terms.end())
        terms.push_back(t);
  terms.push_back("(Intercept)");

  constexpr int kLabel = 28, kCell = 16;
  std::string out;
  char buf[128];
  auto rule = [&](char ch) { out += std::string(kLabel + kCell * fits.size(), ch) + "\n"; };
  rule('=');
  std::snprintf(buf, sizeof buf, "%-*s", kLabel, "");
  out += buf;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%*s", kCell, ("(" + std::to_string(i + 1) + ")").c_str());
    out += buf;
  }
  out += "\n";
  std::snprintf(buf, sizeof buf, "%-*s", kLabel, "");
  out += buf;
  for (const auto& f : fits) {
    std::snprintf(buf, sizeof buf, "%*s", kCell, f.name.substr(0, kCell - 1).c_str());
    out += buf;
  }
  out += "\n";
  rule('-');
  for (const auto& t : terms) {
    std::string est_line, se_line;
    std::snprintf(buf, sizeof buf, "%-*s", kLabel, t.substr(0, kLabel - 1).c_str());
    est_line = buf;
    se_line = std::string(kLabel, ' ');
    for (const auto& f : fits) {
      auto it = f.coefficients.find(t);
      if (it == f.coefficients.end()) {
        est_line += std::string(kCell, ' ');
        se_line += std::string(kCell, ' ');
        continue;
      }
      std::snprintf(buf, sizeof buf, "%.3f%s", it->second, stars(f.p_values.at(t)).c_str());
      std::string cell = buf;
      std::snprintf(buf, sizeof buf, "%*s", kCell, cell.c_str());
      est_line += buf;
      std::snprintf(buf, sizeof buf, "(%.3f)", f.std_errors.at(t));
      cell = buf;
      std::snprintf(buf, sizeof buf, "%*s", kCell, cell.c_str());
      se_line += buf;
    }
    out += est_line + "\n" + se_line + "\n";
  }
  rule('-');
  std::snprintf(buf, sizeof buf, "%-*s", kLabel, "N");
  out += buf;
  for (const auto& f : fits) {
    std::snprintf(buf, sizeof buf, "%*zu", kCell, f.n);
    out += buf;
  }
  out += "\n";
  std::snprintf(buf, sizeof buf, "%-*s", kLabel, "R-squared");
  out += buf;
  for (const auto& f : fits) {
    std::snprintf(buf, sizeof buf, "%*.3f", kCell, f.r_squared);
    out += buf;
  }
  out += "\n";
  rule('=');
  out += "Standard errors in parentheses. * p<0.10, ** p<0.05, *** p<0.01\n";
  return out;
}

}  // namespace sit

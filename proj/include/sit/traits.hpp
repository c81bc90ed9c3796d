#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sit/basic_stats.hpp"
#include "sit/factor.hpp"
#include "sit/scales.hpp"

namespace sit {

// One respondent's Likert answers keyed by item id ("growth_mindset_1", ...).
struct ResponseRow {
  std::string respondent_id;
  std::map<std::string, int> answers;
};

struct TraitIndex {
  Scale scale;
  std::vector<std::string> respondent_ids;  // respondents with all items answered
  std::vector<double> values;               // aligned with respondent_ids
  std::vector<std::string> dropped;         // respondents missing at least one item
  FactorSolution solution;

  std::optional<double> value_for(const std::string& id) const {
    for (std::size_t i = 0; i < respondent_ids.size(); ++i)
      if (respondent_ids[i] == id) return values[i];
    return std::nullopt;
  }
};

struct TraitOptions {
  bool standardize = true;  // false keeps raw regression scores
  int likert_max = 5;
};

// Reverse-keys flagged items (likert_max + 1 - x), fits one factor and
// returns regression-method factor scores.
inline TraitIndex trait_index(const std::vector<ResponseRow>& rows, const ScaleDefinition& def,
                              const TraitOptions& opt = {}) {
  TraitIndex out;
  out.scale = def.scale;
  std::vector<std::vector<double>> kept;
  for (const auto& row : rows) {
    std::vector<double> x;
    for (std::size_t i = 0; i < def.size(); ++i) {
      auto it = row.answers.find(def.item_id(i));
      if (it == row.answers.end()) break;
      const int v = it->second;
      if (v < 1 || v > opt.likert_max)
        fail(Errc::validation, "answer out of range for " + def.item_id(i));
      x.push_back(def.reverse_keyed.count(static_cast<int>(i)) ? opt.likert_max + 1 - v : v);
    }
    if (x.size() != def.size()) {
      out.dropped.push_back(row.respondent_id);
      continue;
    }
    out.respondent_ids.push_back(row.respondent_id);
    kept.push_back(std::move(x));
  }
  Eigen::MatrixXd data(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(def.size()));
  for (std::size_t r = 0; r < kept.size(); ++r)
    for (std::size_t c = 0; c < def.size(); ++c)
      data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = kept[r][c];
  try {
    out.solution = factor_single(data);
  } catch (const Error& e) {
    fail(e.code(), def.label + ": " + e.what());
  }
  const Eigen::VectorXd scores = factor_scores(data, out.solution);
  out.values.assign(scores.data(), scores.data() + scores.size());
  if (opt.standardize) out.values = standardize(out.values);
  return out;
}

inline std::vector<TraitIndex> trait_indices(const std::vector<ResponseRow>& rows,
                                             const std::vector<ScaleDefinition>& defs =
                                                 default_scales(),
                                             const TraitOptions& opt = {}) {
  std::vector<TraitIndex> out;
  for (const auto& d : defs) out.push_back(trait_index(rows, d, opt));
  return out;
}

}  // namespace sit

#pragma once

#include <string>
#include <vector>

#include "sit/basic_stats.hpp"
#include "sit/factor.hpp"
#include "sit/reliability.hpp"
#include "sit/sit_scoring.hpp"

namespace sit {

// Three standardized SIT variants per respondent: the standard score, the
// score with every demeaned cell divided by its image's rating SD, and the
// one-factor regression score over the respondent x slot demeaned matrix.
struct RobustnessScores {
  std::vector<std::string> respondent_ids;
  std::vector<double> standard;
  std::vector<double> sd_adjusted;
  std::vector<double> factor;
  FactorSolution solution;
};

inline RobustnessScores robustness_scores(const RatingMatrix& m, const SitOptions& opt = {}) {
  RobustnessScores out;
  out.respondent_ids = m.respondent_ids();
  const Demeaned d = loo_demean(m);

  auto base = tilde_scores(m, d, ImageSubset::All);
  standardize_scores(base, opt);
  for (const auto& s : base) out.standard.push_back(s.standardized);

  std::vector<double> image_sd(m.n_images());
  std::vector<std::string> flat;
  for (std::size_t j = 0; j < m.n_images(); ++j) {
    std::vector<double> xs;
    for (const auto& [r, x] : m.raters(j)) xs.push_back(x);
    image_sd[j] = stddev(xs);
    if (!(image_sd[j] > 0.0)) flat.push_back(m.image_ids()[j]);
  }
  if (!flat.empty()) {
    std::string ids;
    for (const auto& id : flat) ids += (ids.empty() ? "" : ", ") + id;
    fail(Errc::degenerate, "images with zero rating SD: " + ids);
  }
  Demeaned scaled = d;
  for (std::size_t r = 0; r < m.n_respondents(); ++r)
    for (std::size_t c = 0; c < scaled[r].size(); ++c)
      scaled[r][c] /= image_sd[m.cells(r)[c].image];
  auto adj = tilde_scores(m, scaled, ImageSubset::All);
  standardize_scores(adj, opt);
  for (const auto& s : adj) out.sd_adjusted.push_back(s.standardized);

  const ItemMatrix items = slot_matrix(m, d, ImageSubset::All);
  out.solution = factor_single(items);
  const Eigen::VectorXd fs = factor_scores(items, out.solution);
  out.factor = standardize(std::vector<double>(fs.data(), fs.data() + fs.size()), opt.ddof);
  return out;
}

}  // namespace sit

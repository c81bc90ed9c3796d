#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sit/basic_stats.hpp"
#include "sit/error.hpp"

namespace sit {

// Sparse respondent x image rating table. Respondents and images are indexed
// in order of first appearance; each respondent's cells keep insertion
// (presentation) order, which defines the "slot" view used for item-level
// analyses.
class RatingMatrix {
 public:
  struct Cell {
    std::size_t image = 0;
    int rating = 0;
  };

  explicit RatingMatrix(int lo = 1, int hi = 5) : lo_(lo), hi_(hi) {}

  void set_gender_stem(const std::string& image_id, bool flag) {
    gender_[image_index(image_id)] = flag;
  }

  // Registers a respondent without ratings, fixing row order up front.
  void add_respondent(const std::string& respondent_id) { respondent_index(respondent_id); }

  void add(const std::string& respondent_id, const std::string& image_id, int rating) {
    if (rating < lo_ || rating > hi_)
      fail(Errc::validation, "rating " + std::to_string(rating) + " outside " +
                                 std::to_string(lo_) + ".." + std::to_string(hi_));
    const auto r = respondent_index(respondent_id);
    const auto j = image_index(image_id);
    for (const auto& c : by_respondent_[r])
      if (c.image == j)
        fail(Errc::immutability, "duplicate rating for (" + respondent_id + ", " + image_id + ")");
    by_respondent_[r].push_back({j, rating});
    raters_[j].push_back({r, rating});
  }

  std::size_t n_respondents() const { return respondent_ids_.size(); }
  std::size_t n_images() const { return image_ids_.size(); }
  const std::vector<std::string>& respondent_ids() const { return respondent_ids_; }
  const std::vector<std::string>& image_ids() const { return image_ids_; }
  const std::vector<Cell>& cells(std::size_t respondent) const { return by_respondent_.at(respondent); }
  // (respondent index, rating) pairs for one image.
  const std::vector<std::pair<std::size_t, int>>& raters(std::size_t image) const {
    return raters_.at(image);
  }
  bool is_gender_stem(std::size_t image) const { return gender_.at(image); }
  int lo() const { return lo_; }
  int hi() const { return hi_; }

  std::size_t find_image(const std::string& id) const {
    auto it = image_lookup_.find(id);
    if (it == image_lookup_.end()) fail(Errc::not_found, "unknown image '" + id + "'");
    return it->second;
  }

  // Completed-session design: every respondent has exactly `per_respondent`
  // ratings and every gender-STEM image is rated by everyone.
  void validate_design(std::size_t per_respondent = 20) const {
    for (std::size_t r = 0; r < n_respondents(); ++r)
      if (by_respondent_[r].size() != per_respondent)
        fail(Errc::validation, "respondent '" + respondent_ids_[r] + "' has " +
                                   std::to_string(by_respondent_[r].size()) + " ratings, expected " +
                                   std::to_string(per_respondent));
    for (std::size_t j = 0; j < n_images(); ++j)
      if (gender_[j] && raters_[j].size() != n_respondents())
        fail(Errc::validation, "gender-STEM image '" + image_ids_[j] + "' not rated by everyone");
  }

  // Same respondents, only the listed image columns (gender flags kept).
  RatingMatrix restricted(const std::vector<std::size_t>& images) const {
    RatingMatrix out(lo_, hi_);
    std::vector<bool> keep(n_images(), false);
    for (auto j : images) keep.at(j) = true;
    for (std::size_t r = 0; r < n_respondents(); ++r)
      for (const auto& c : by_respondent_[r])
        if (keep[c.image]) out.add(respondent_ids_[r], image_ids_[c.image], c.rating);
    for (std::size_t j = 0; j < n_images(); ++j)
      if (keep[j] && out.image_lookup_.count(image_ids_[j]))
        out.set_gender_stem(image_ids_[j], gender_[j]);
    return out;
  }

 private:
  std::size_t respondent_index(const std::string& id) {
    auto [it, inserted] = respondent_lookup_.emplace(id, respondent_ids_.size());
    if (inserted) {
      respondent_ids_.push_back(id);
      by_respondent_.emplace_back();
    }
    return it->second;
  }

  std::size_t image_index(const std::string& id) {
    auto [it, inserted] = image_lookup_.emplace(id, image_ids_.size());
    if (inserted) {
      image_ids_.push_back(id);
      raters_.emplace_back();
      gender_.push_back(false);
    }
    return it->second;
  }

  int lo_;
  int hi_;
  std::vector<std::string> respondent_ids_;
  std::vector<std::string> image_ids_;
  std::unordered_map<std::string, std::size_t> respondent_lookup_;
  std::unordered_map<std::string, std::size_t> image_lookup_;
  std::vector<std::vector<Cell>> by_respondent_;
  std::vector<std::vector<std::pair<std::size_t, int>>> raters_;
  std::vector<bool> gender_;
};

// Demeaned values aligned with RatingMatrix::cells(r).
using Demeaned = std::vector<std::vector<double>>;

// rating_ij minus the mean rating of image j over all other raters.
inline Demeaned loo_demean(const RatingMatrix& m) {
  std::vector<double> sums(m.n_images(), 0.0);
  std::vector<std::string> lonely;
  for (std::size_t j = 0; j < m.n_images(); ++j) {
    const auto& rs = m.raters(j);
    if (rs.size() < 2) lonely.push_back(m.image_ids()[j]);
    for (const auto& [r, x] : rs) sums[j] += x;
  }
  if (!lonely.empty()) {
    std::string ids;
    for (const auto& id : lonely) ids += (ids.empty() ? "" : ", ") + id;
    fail(Errc::degenerate, "images with fewer than 2 raters: " + ids);
  }
  Demeaned out(m.n_respondents());
  for (std::size_t r = 0; r < m.n_respondents(); ++r) {
    const auto& cells = m.cells(r);
    out[r].reserve(cells.size());
    for (const auto& c : cells) {
      const double n = static_cast<double>(m.raters(c.image).size());
      const double loo = (sums[c.image] - c.rating) / (n - 1.0);
      out[r].push_back(c.rating - loo);
    }
  }
  return out;
}

enum class ImageSubset { All, GenderStemOnly };

struct SitScore {
  std::string respondent_id;
  double tilde = 0.0;
  double standardized = 0.0;
  int n_images = 0;
};

struct SitOptions {
  int ddof = 1;  // cohort SD estimator for standardization
};

// Unstandardized per-respondent means of demeaned cells over the subset.
inline std::vector<SitScore> tilde_scores(const RatingMatrix& m, const Demeaned& d,
                                          ImageSubset subset) {
  std::vector<SitScore> out(m.n_respondents());
  for (std::size_t r = 0; r < m.n_respondents(); ++r) {
    double sum = 0.0;
    int n = 0;
    const auto& cells = m.cells(r);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (subset == ImageSubset::GenderStemOnly && !m.is_gender_stem(cells[k].image)) continue;
      sum += d[r][k];
      ++n;
    }
    if (n == 0)
      fail(Errc::insufficient_data, "respondent '" + m.respondent_ids()[r] +
                                        "' has no ratings in the requested subset");
    out[r] = {m.respondent_ids()[r], sum / n, 0.0, n};
  }
  return out;
}

inline void standardize_scores(std::vector<SitScore>& scores, const SitOptions& opt = {}) {
  std::vector<double> t;
  t.reserve(scores.size());
  for (const auto& s : scores) t.push_back(s.tilde);
  const auto z = standardize(t, opt.ddof);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i].standardized = z[i];
}

inline std::vector<SitScore> sit_scores(const RatingMatrix& m, ImageSubset subset,
                                        const SitOptions& opt = {}) {
  auto scores = tilde_scores(m, loo_demean(m), subset);
  standardize_scores(scores, opt);
  return scores;
}

// Maps a 0..5 pilot rating onto the 1..5 scale.
inline double rescale_pilot(double rating_0_5) {
  if (!(rating_0_5 >= 0.0 && rating_0_5 <= 5.0))
    fail(Errc::validation, "pilot rating must lie in [0, 5]");
  return 4.0 / 5.0 * rating_0_5 + 1.0;
}

}  // namespace sit

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sit/basic_stats.hpp"
#include "sit/error.hpp"
#include "sit/parallel.hpp"
#include "sit/rng.hpp"
#include "sit/sit_scoring.hpp"

namespace sit {

// Respondents x items; NaN marks a missing answer.
using ItemMatrix = Eigen::MatrixXd;

// alpha = k/(k-1) * (1 - sum of item variances / variance of the total).
// With allow_missing the total variance is assembled from pairwise-complete
// covariances.
inline double cronbach_alpha(const ItemMatrix& x, bool allow_missing = false) {
  const auto n = x.rows();
  const auto k = x.cols();
  if (k < 2) fail(Errc::insufficient_data, "cronbach_alpha needs at least 2 items");
  if (n < 3) fail(Errc::insufficient_data, "cronbach_alpha needs at least 3 respondents");
  const bool has_missing = x.array().isNaN().any();
  if (has_missing && !allow_missing)
    fail(Errc::validation, "item matrix has missing values (allow_missing not set)");

  auto cov = [&](Eigen::Index a, Eigen::Index b) {
    double ma = 0.0, mb = 0.0;
    int m = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isnan(x(i, a)) || std::isnan(x(i, b))) continue;
      ma += x(i, a);
      mb += x(i, b);
      ++m;
    }
    if (m < 2) fail(Errc::insufficient_data, "too few complete pairs for a covariance");
    ma /= m;
    mb /= m;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isnan(x(i, a)) || std::isnan(x(i, b))) continue;
      s += (x(i, a) - ma) * (x(i, b) - mb);
    }
    return s / (m - 1);
  };

  double item_var = 0.0, total_var = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    const double va = cov(a, a);
    item_var += va;
    total_var += va;
    for (Eigen::Index b = a + 1; b < k; ++b) total_var += 2.0 * cov(a, b);
  }
  if (!(total_var > 0.0)) fail(Errc::degenerate, "cronbach_alpha: zero total variance");
  const double kd = static_cast<double>(k);
  return kd / (kd - 1.0) * (1.0 - item_var / total_var);
}

// Projects a half-test correlation to full length: 2r / (1 + r).
inline double spearman_brown(double r) {
  if (!(r > -1.0 && r <= 1.0)) {
    if (r == -1.0) fail(Errc::degenerate, "spearman_brown is singular at r = -1");
    fail(Errc::validation, "spearman_brown needs r in (-1, 1]");
  }
  return 2.0 * r / (1.0 + r);
}

enum class ReliabilityMode { SplitHalf, TestRetest };

inline const char* to_string(ReliabilityMode m) {
  return m == ReliabilityMode::SplitHalf ? "split-half" : "test-retest";
}

// How the half scores of a split are demeaned: recompute leave-one-out image
// means among the respondents whose half contains the image, or reuse the
// demeaning from the full data.
enum class HalfDemeaning { WithinHalf, FullSample };

struct ReliabilityOptions {
  std::size_t n_draws = 9999;
  std::uint64_t seed = 0;
  ImageSubset subset = ImageSubset::All;
  HalfDemeaning demeaning = HalfDemeaning::WithinHalf;
  unsigned threads = 0;
};

struct ReliabilityReport {
  ReliabilityMode mode = ReliabilityMode::SplitHalf;
  ImageSubset subset = ImageSubset::All;
  std::uint64_t seed = 0;
  std::vector<double> coefficients;  // in draw order, skipped draws removed
  std::vector<std::size_t> draw_index;
  std::size_t n_draws = 0;
  std::size_t n_skipped = 0;
  double mean = kNaN;
  double q025 = kNaN;
  double q975 = kNaN;
};

namespace detail {

inline ReliabilityReport summarize(ReliabilityMode mode, const ReliabilityOptions& opt,
                                   const std::vector<std::optional<double>>& draws) {
  ReliabilityReport rep;
  rep.mode = mode;
  rep.subset = opt.subset;
  rep.seed = opt.seed;
  for (std::size_t d = 0; d < draws.size(); ++d) {
    if (!draws[d]) {
      ++rep.n_skipped;
      continue;
    }
    rep.coefficients.push_back(*draws[d]);
    rep.draw_index.push_back(d);
  }
  rep.n_draws = rep.coefficients.size();
  if (rep.n_draws == 0) fail(Errc::degenerate, "every resampling draw was degenerate");
  rep.mean = mean(rep.coefficients);
  rep.q025 = quantile(rep.coefficients, 0.025);
  rep.q975 = quantile(rep.coefficients, 0.975);
  return rep;
}

inline std::optional<double> safe_pearson(const std::vector<double>& a,
                                          const std::vector<double>& b) {
  try {
    return pearson(a, b);
  } catch (const Error& e) {
    if (e.code() == Errc::degenerate) return std::nullopt;
    throw;
  }
}

}  // namespace detail

// Split-half on a dense item matrix: per draw, each respondent's items are
// shuffled and split into first/second half; half scores are item means.
inline ReliabilityReport split_half_reliability(const ItemMatrix& items,
                                                const ReliabilityOptions& opt = {}) {
  const auto n = static_cast<std::size_t>(items.rows());
  const auto k = static_cast<std::size_t>(items.cols());
  if (k < 2 || k % 2 != 0) fail(Errc::validation, "split-half needs an even item count");
  if (items.array().isNaN().any()) fail(Errc::validation, "split-half needs complete items");
  std::vector<std::optional<double>> draws(opt.n_draws);
  detail::parallel_for(
      opt.n_draws,
      [&](std::size_t d) {
        Rng rng(derive_seed(opt.seed, d));
        std::vector<std::size_t> order(k);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t c = 0; c < k; ++c) order[c] = c;
          rng.shuffle(std::span<std::size_t>(order));
          double sa = 0.0, sb = 0.0;
          for (std::size_t c = 0; c < k / 2; ++c) sa += items(i, order[c]);
          for (std::size_t c = k / 2; c < k; ++c) sb += items(i, order[c]);
          a[i] = sa / (k / 2);
          b[i] = sb / (k / 2);
        }
        if (auto r = detail::safe_pearson(a, b); r && *r > -1.0) draws[d] = spearman_brown(*r);
      },
      opt.threads);
  return detail::summarize(ReliabilityMode::SplitHalf, opt, draws);
}

// Split-half on the sparse rating table, scoring each half the SIT way.
inline ReliabilityReport split_half_reliability(const RatingMatrix& m,
                                                const ReliabilityOptions& opt = {}) {
  const std::size_t n = m.n_respondents();
  // Positions (into cells(r)) that belong to the subset.
  std::vector<std::vector<std::size_t>> pos(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& cells = m.cells(r);
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (opt.subset == ImageSubset::All || m.is_gender_stem(cells[c].image)) pos[r].push_back(c);
    if (pos[r].size() < 2 || pos[r].size() % 2 != 0)
      fail(Errc::validation, "respondent '" + m.respondent_ids()[r] +
                                 "' has an odd or too small item count for split-half");
  }
  const Demeaned full = opt.demeaning == HalfDemeaning::FullSample ? loo_demean(m) : Demeaned{};

  std::vector<std::optional<double>> draws(opt.n_draws);
  detail::parallel_for(
      opt.n_draws,
      [&](std::size_t d) {
        Rng rng(derive_seed(opt.seed, d));
        // first half = leading positions of each shuffled order
        std::vector<std::vector<std::size_t>> order(pos);
        for (auto& o : order) rng.shuffle(std::span<std::size_t>(o));

        std::vector<double> score[2] = {std::vector<double>(n), std::vector<double>(n)};
        if (opt.demeaning == HalfDemeaning::FullSample) {
          for (std::size_t r = 0; r < n; ++r) {
            const std::size_t h = order[r].size() / 2;
            for (int half = 0; half < 2; ++half) {
              double s = 0.0;
              for (std::size_t c = half * h; c < (half + 1) * h; ++c) s += full[r][order[r][c]];
              score[half][r] = s / h;
            }
          }
        } else {
          for (int half = 0; half < 2; ++half) {
            std::vector<double> sum(m.n_images(), 0.0);
            std::vector<int> cnt(m.n_images(), 0);
            for (std::size_t r = 0; r < n; ++r) {
              const std::size_t h = order[r].size() / 2;
              for (std::size_t c = half * h; c < (half + 1) * h; ++c) {
                const auto& cell = m.cells(r)[order[r][c]];
                sum[cell.image] += cell.rating;
                ++cnt[cell.image];
              }
            }
            for (std::size_t r = 0; r < n; ++r) {
              const std::size_t h = order[r].size() / 2;
              double s = 0.0;
              for (std::size_t c = half * h; c < (half + 1) * h; ++c) {
                const auto& cell = m.cells(r)[order[r][c]];
                if (cnt[cell.image] < 2) return;  // image seen once in this half: skip draw
                s += cell.rating - (sum[cell.image] - cell.rating) / (cnt[cell.image] - 1);
              }
              score[half][r] = s / h;
            }
          }
        }
        if (auto r = detail::safe_pearson(score[0], score[1]); r && *r > -1.0)
          draws[d] = spearman_brown(*r);
      },
      opt.threads);
  return detail::summarize(ReliabilityMode::SplitHalf, opt, draws);
}

// Test-retest by resampling with replacement: each respondent's non-gender
// and gender-STEM demeaned ratings are bootstrapped separately (keeping the
// 14 + 6 structure), and the simulated score is correlated with the
// original one across respondents.
inline ReliabilityReport test_retest_reliability(const RatingMatrix& m,
                                                 const ReliabilityOptions& opt = {}) {
  const std::size_t n = m.n_respondents();
  const Demeaned dm = loo_demean(m);
  std::vector<std::vector<double>> gender(n), other(n);
  std::vector<double> original(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& cells = m.cells(r);
    for (std::size_t c = 0; c < cells.size(); ++c)
      (m.is_gender_stem(cells[c].image) ? gender[r] : other[r]).push_back(dm[r][c]);
    if (opt.subset == ImageSubset::GenderStemOnly) other[r].clear();
    const std::size_t total = gender[r].size() + other[r].size();
    if (total == 0)
      fail(Errc::insufficient_data, "respondent '" + m.respondent_ids()[r] + "' has no ratings");
    double s = 0.0;
    for (double v : gender[r]) s += v;
    for (double v : other[r]) s += v;
    original[r] = s / static_cast<double>(total);
  }

  std::vector<std::optional<double>> draws(opt.n_draws);
  detail::parallel_for(
      opt.n_draws,
      [&](std::size_t d) {
        Rng rng(derive_seed(opt.seed, d));
        std::vector<double> sim(n);
        for (std::size_t r = 0; r < n; ++r) {
          double s = 0.0;
          for (const auto* pool : {&other[r], &gender[r]})
            for (std::size_t t = 0; t < pool->size(); ++t) s += (*pool)[rng.below(pool->size())];
          sim[r] = s / static_cast<double>(other[r].size() + gender[r].size());
        }
        draws[d] = detail::safe_pearson(original, sim);
      },
      opt.threads);
  return detail::summarize(ReliabilityMode::TestRetest, opt, draws);
}

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

// Equal-width bins spanning [min, max] of the values.
inline std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty() || bins == 0) return {};
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn;
  const double width = (*mx - lo) > 0.0 ? (*mx - lo) / bins : 1.0;
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) out[b] = {lo + b * width, lo + (b + 1) * width, 0};
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    out[std::min(b, bins - 1)].count++;
  }
  return out;
}

// Respondent x item matrix of demeaned ratings. For All the items are
// presentation slots; for GenderStemOnly they are the shared images, in image
// order. Every respondent must have the same number of ratings in the subset.
inline ItemMatrix slot_matrix(const RatingMatrix& m, const Demeaned& d,
                              ImageSubset subset = ImageSubset::All) {
  std::vector<std::vector<double>> rows(m.n_respondents());
  for (std::size_t r = 0; r < m.n_respondents(); ++r) {
    const auto& cells = m.cells(r);
    std::vector<std::pair<std::size_t, double>> picked;
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (subset == ImageSubset::All || m.is_gender_stem(cells[c].image))
        picked.emplace_back(subset == ImageSubset::All ? c : cells[c].image, d[r][c]);
    std::sort(picked.begin(), picked.end());
    for (const auto& [key, v] : picked) rows[r].push_back(v);
  }
  if (rows.empty()) return ItemMatrix(0, 0);
  const auto k = rows.front().size();
  ItemMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != k) fail(Errc::validation, "respondents have unequal item counts");
    for (std::size_t c = 0; c < k; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return out;
}

}  // namespace sit

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "sit/error.hpp"

namespace sit {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) fail(Errc::insufficient_data, "mean of empty series");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Two-pass variance; `ddof` = 1 for the sample (n-1) estimator.
inline double variance(std::span<const double> xs, int ddof = 1) {
  const auto n = static_cast<std::ptrdiff_t>(xs.size());
  if (n - ddof <= 0) fail(Errc::insufficient_data, "variance needs more observations");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(n - ddof);
}

inline double stddev(std::span<const double> xs, int ddof = 1) {
  return std::sqrt(variance(xs, ddof));
}

// Pearson correlation. Throws Errc::degenerate when either side is constant.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(Errc::validation, "pearson: length mismatch");
  if (x.size() < 2) fail(Errc::insufficient_data, "pearson: need at least 2 pairs");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) fail(Errc::degenerate, "pearson: zero variance");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

// Empirical quantile, linear interpolation between order statistics
// (Hyndman-Fan type 7, the R/NumPy default).
inline double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) fail(Errc::insufficient_data, "quantile of empty series");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

// z-scores with sample SD; throws on zero variance.
inline std::vector<double> standardize(std::span<const double> xs, int ddof = 1) {
  const double m = mean(xs);
  const double sd = stddev(xs, ddof);
  if (!(sd > 0.0)) fail(Errc::degenerate, "standardize: zero variance");
  std::vector<double> z(xs.size());
  std::transform(xs.begin(), xs.end(), z.begin(), [&](double x) { return (x - m) / sd; });
  return z;
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace sit

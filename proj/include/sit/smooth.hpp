#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sit/basic_stats.hpp"
#include "sit/error.hpp"

namespace sit {

struct SmoothOptions {
  std::optional<double> bandwidth;     // default: normal-reference rule of thumb
  std::size_t grid_points = 50;        // evenly spaced over [min x, max x]
  std::vector<double> eval_points;     // overrides the grid when non-empty
  double z = 1.959963984540054;        // two-sided 95%
};

struct SmoothCurve {
  double bandwidth = 0.0;
  double sigma2 = 0.0;
  std::vector<double> x;
  std::vector<double> fit;
  std::vector<double> se;
  std::vector<double> lower;
  std::vector<double> upper;
};

// Normal-reference bandwidth for the Epanechnikov kernel:
// 2.34 * min(sd, IQR / 1.349) * n^(-1/5).
inline double rule_of_thumb_bandwidth(std::span<const double> x) {
  const double sd = stddev(x);
  std::vector<double> v(x.begin(), x.end());
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.349) : sd;
  return 2.34 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

namespace detail {

// Local-linear equivalent-kernel weights at x0; empty when fewer than two
// distinct points carry weight.
inline std::vector<double> local_linear_weights(std::span<const double> xs, double x0,
                                                double h) {
  std::vector<double> w(xs.size(), 0.0);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double u = (xs[i] - x0) / h;
    if (std::fabs(u) >= 1.0) continue;
    w[i] = 0.75 * (1.0 - u * u);
    const double d = xs[i] - x0;
    s0 += w[i];
    s1 += w[i] * d;
    s2 += w[i] * d * d;
  }
  const double det = s0 * s2 - s1 * s1;
  if (!(det > 1e-14 * std::max(1.0, s0 * s2))) return {};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (w[i] == 0.0) continue;
    w[i] = w[i] * (s2 - (xs[i] - x0) * s1) / det;
  }
  return w;
}

}  // namespace detail

// Local-linear regression with an Epanechnikov kernel and a pointwise
// normal-approximation band: fit +- z * sigma * ||l(x0)||, with sigma^2 the
// residual variance over n - tr(L). Grid points with too little support get
// NaN. Input order does not matter: points are sorted first.
inline SmoothCurve kernel_smooth(std::span<const double> x_in, std::span<const double> y_in,
                                 const SmoothOptions& opt = {}) {
  if (x_in.size() != y_in.size()) fail(Errc::validation, "kernel_smooth: length mismatch");
  if (x_in.size() < 10) fail(Errc::insufficient_data, "kernel_smooth needs at least 10 points");
  std::vector<std::pair<double, double>> pts(x_in.size());
  for (std::size_t i = 0; i < x_in.size(); ++i) pts[i] = {x_in[i], y_in[i]};
  std::sort(pts.begin(), pts.end());
  std::vector<double> xs(pts.size()), ys(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) std::tie(xs[i], ys[i]) = pts[i];
  if (xs.front() == xs.back()) fail(Errc::degenerate, "kernel_smooth: all x identical");

  SmoothCurve c;
  c.bandwidth = opt.bandwidth.value_or(rule_of_thumb_bandwidth(xs));
  if (!(c.bandwidth > 0.0)) fail(Errc::validation, "kernel_smooth: bandwidth must be positive");

  // residual variance from the fit at the data points
  double rss = 0.0, trace = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto l = detail::local_linear_weights(xs, xs[i], c.bandwidth);
    if (l.empty()) continue;
    double f = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) f += l[k] * ys[k];
    rss += (ys[i] - f) * (ys[i] - f);
    trace += l[i];
    ++used;
  }
  const double dof = static_cast<double>(used) - trace;
  c.sigma2 = dof > 0.0 ? rss / dof : rss / std::max<double>(1.0, static_cast<double>(used));

  if (!opt.eval_points.empty()) {
    c.x = opt.eval_points;
  } else {
    const std::size_t g = std::max<std::size_t>(opt.grid_points, 2);
    for (std::size_t i = 0; i < g; ++i)
      c.x.push_back(xs.front() + (xs.back() - xs.front()) * static_cast<double>(i) / (g - 1));
  }
  for (double x0 : c.x) {
    const auto l = detail::local_linear_weights(xs, x0, c.bandwidth);
    if (l.empty()) {
      c.fit.push_back(kNaN);
      c.se.push_back(kNaN);
      c.lower.push_back(kNaN);
      c.upper.push_back(kNaN);
      continue;
    }
    double f = 0.0, norm2 = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      f += l[k] * ys[k];
      norm2 += l[k] * l[k];
    }
    const double se = std::sqrt(c.sigma2 * norm2);
    c.fit.push_back(f);
    c.se.push_back(se);
    c.lower.push_back(f - opt.z * se);
    c.upper.push_back(f + opt.z * se);
  }
  return c;
}

}  // namespace sit

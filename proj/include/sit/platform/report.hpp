#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "sit/agreement.hpp"
#include "sit/platform/pipeline.hpp"
#include "sit/regression.hpp"
#include "sit/reliability.hpp"
#include "sit/smooth.hpp"
#include "sit/text.hpp"

namespace sit::platform {

struct ReportOptions {
  std::size_t draws = 999;
  std::uint64_t seed = 1;
  std::size_t bins = 20;
  ScoreOptions scoring;
};

inline std::string render_histogram(const std::vector<double>& values, std::size_t bins,
                                    const std::string& title) {
  std::string out = title + "\n";
  const auto h = histogram(values, bins);
  std::size_t top = 1;
  for (const auto& b : h) top = std::max(top, b.count);
  char buf[160];
  for (const auto& b : h) {
    const auto width = static_cast<int>(std::lround(50.0 * static_cast<double>(b.count) /
                                                    static_cast<double>(top)));
    std::snprintf(buf, sizeof buf, "  [%8.3f, %8.3f) %6zu %s\n", b.lo, b.hi, b.count,
                  std::string(static_cast<std::size_t>(width), '#').c_str());
    out += buf;
  }
  return out;
}

inline std::string render_reliability(const ReliabilityReport& r, std::size_t bins,
                                      const std::string& title) {
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%s: mean %.4f, 2.5%% %.4f, 97.5%% %.4f (%zu draws, %zu skipped, seed %llu)",
                title.c_str(), r.mean, r.q025, r.q975, r.n_draws, r.n_skipped,
                static_cast<unsigned long long>(r.seed));
  return render_histogram(r.coefficients, bins, buf);
}

// Plain-text rendering of the standard outputs: rating distribution and
// timing, SIT distributions, reliability resampling, regression tables, text
// and tag summaries. Sections whose inputs are missing are skipped.
inline std::string render_report(const Bundle& b, const ReportOptions& opt = {}) {
  std::string out;
  char buf[256];
  const auto ids = scored_sessions(b, opt.scoring);
  const auto m = rating_matrix(b, ids);

  {
    std::map<int, std::size_t> count;
    std::map<int, std::vector<double>> times;
    std::set<std::string> keep(ids.begin(), ids.end());
    std::size_t n = 0;
    std::vector<double> xs, ys;
    for (const auto& r : b.ratings) {
      if (!keep.count(r.session_id)) continue;
      ++count[r.rating];
      ++n;
      times[r.rating].push_back(static_cast<double>(r.rating_time_ms));
      xs.push_back(r.rating);
      ys.push_back(static_cast<double>(r.rating_time_ms) / 1000.0);
    }
    out += "Rating distribution\n";
    for (int k = 1; k <= 5; ++k) {
      const double share = n ? static_cast<double>(count[k]) / static_cast<double>(n) : 0.0;
      const double t = times[k].empty() ? kNaN : mean(times[k]) / 1000.0;
      std::snprintf(buf, sizeof buf, "  %d: %6.2f%%  mean rating time %7.2f s\n", k,
                    100.0 * share, t);
      out += buf;
    }
    out += "\n";
  }

  const auto rows = score(b, opt.scoring);
  {
    std::vector<double> sit, gsit;
    for (const auto& r : rows) {
      sit.push_back(r.sit);
      if (!std::isnan(r.gender_sit)) gsit.push_back(r.gender_sit);
    }
    out += render_histogram(sit, opt.bins, "SIT score distribution") + "\n";
    if (!gsit.empty()) out += render_histogram(gsit, opt.bins, "Gender-SIT distribution") + "\n";
  }

  {
    ReliabilityOptions ro;
    ro.n_draws = opt.draws;
    ro.seed = opt.seed;
    const auto sh = split_half_reliability(m, ro);
    out += render_reliability(sh, opt.bins, "Split-half reliability, all images") + "\n";
    bool gender = false;
    for (std::size_t j = 0; j < m.n_images(); ++j) gender |= m.is_gender_stem(j);
    if (gender) {
      ro.subset = ImageSubset::GenderStemOnly;
      out += render_reliability(split_half_reliability(m, ro), opt.bins,
                                "Split-half reliability, gender-STEM images") +
             "\n";
      ro.subset = ImageSubset::All;
      out += render_reliability(test_retest_reliability(m, ro), opt.bins,
                                "Test-retest reliability") +
             "\n";
    }
    std::snprintf(buf, sizeof buf, "Cronbach's alpha (presentation slots): %.4f\n\n",
                  cronbach_alpha(slot_matrix(m, loo_demean(m))));
    out += buf;
  }

  {
    std::vector<double> x, y;
    for (const auto& r : rows)
      if (!std::isnan(r.iat_d)) {
        x.push_back(r.iat_d);
        y.push_back(r.sit);
      }
    if (x.size() >= 10) {
      SmoothOptions so;
      so.grid_points = 9;
      const auto c = kernel_smooth(x, y, so);
      std::snprintf(buf, sizeof buf, "SIT on IAT D-score, local-linear fit (bandwidth %.3f)\n",
                    c.bandwidth);
      out += buf;
      for (std::size_t i = 0; i < c.x.size(); ++i) {
        std::snprintf(buf, sizeof buf, "  d=%7.3f  fit %7.3f  [%7.3f, %7.3f]\n", c.x[i],
                      c.fit[i], c.lower[i], c.upper[i]);
        out += buf;
      }
      out += "\n";
    }
  }

  if (!b.sessions.empty() && !b.questionnaire.empty()) {
    const auto table = analysis_table(b, opt.scoring);
    auto fit_all = [&](std::initializer_list<const char*> names) {
      std::vector<FitResult> fits;
      for (const char* n : names) fits.push_back(fit(table, builtin_spec(n)));
      return render_table(fits);
    };
    out += "Regressions of SIT on IAT revelation\n";
    out += fit_all({"table2_col1", "table2_col2", "table2_col3", "table2_col4", "table2_col5",
                    "table2_col6"});
    out += "\nSIT and IAT\n" + fit_all({"table3_col1", "table3_col2"});
    out += "\nFraming arms (reference: info_guilt)\n" +
           fit_all({"framing_col1", "framing_col2", "framing_col3"});
    out += "\nRobustness: standard, SD-adjusted and factor-score SIT\n";
    try {
      out += fit_all({"robustness_col1", "robustness_col2", "robustness_col3"});
    } catch (const Error& e) {
      out += std::string("  skipped: ") + e.what() + "\n";
    }
    out += "\n";
  }

  if (!b.tokens.empty()) {
    const auto lex = lexical_metrics(b);
    std::vector<double> dens, ttr;
    for (const auto& [sid, v] : lex) {
      dens.push_back(v.first);
      ttr.push_back(v.second);
    }
    if (!dens.empty()) {
      std::snprintf(buf, sizeof buf,
                    "Text: %zu respondents, mean lexical density %.3f, mean TTR %.3f\n",
                    dens.size(), mean(dens), mean(ttr));
      out += buf;
    }
  }
  if (!b.stance.empty()) {
    std::map<std::string, std::map<std::string, std::string>> by_comment;
    for (const auto& s : b.stance) by_comment[s.comment_id][s.annotator_id] = text::to_string(s.stance);
    std::vector<std::string> a, c;
    for (const auto& [cid, ann] : by_comment)
      if (ann.size() == 2) {
        a.push_back(ann.begin()->second);
        c.push_back(std::next(ann.begin())->second);
      }
    if (!a.empty()) {
      std::snprintf(buf, sizeof buf, "Stance agreement (Cohen's kappa, %zu comments): %.3f\n",
                    a.size(), cohens_kappa(a, c));
      out += buf;
    }
  }
  if (!b.tag_probs.empty() && !b.pool.empty()) {
    const auto stats = text::image_tag_stats(b.pool, text::classify_tags(b.tag_probs));
    std::snprintf(buf, sizeof buf,
                  "Tags: %.1f per tagged image (%g-%g), %zu untagged, %zu without protected "
                  "tags, %.1f protected per image (%g-%g), proportion %.0f%%-%.0f%% "
                  "(mean %.0f%%)\n",
                  stats.tags_per_image.mean, stats.tags_per_image.min, stats.tags_per_image.max,
                  stats.untagged.size(), stats.without_protected.size(),
                  stats.protected_per_image.mean, stats.protected_per_image.min,
                  stats.protected_per_image.max, 100 * stats.proportion.min,
                  100 * stats.proportion.max, 100 * stats.proportion.mean);
    out += buf;
  }
  return out;
}

}  // namespace sit::platform

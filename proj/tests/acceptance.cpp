// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "ols_oracle.hpp"
#include "sit/agreement.hpp"
#include "sit/basic_stats.hpp"
#include "sit/factor.hpp"
#include "sit/iat.hpp"
#include "sit/platform/pipeline.hpp"
#include "sit/platform/tables.hpp"
#include "sit/regression.hpp"
#include "sit/reliability.hpp"
#include "sit/sit_scoring.hpp"
#include "sit/synth.hpp"
#include "sit/text.hpp"
#include "support.hpp"

using namespace sit;
using namespace sit::platform;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "failed: " + what;
    }
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Bundle cohort(std::uint64_t seed, synth::CohortSpec s = {}) {
  s.seed = seed;
  return to_bundle(synth::generate_cohort(s));
}

RatingMatrix matrix_of(const Bundle& b) { return rating_matrix(b, scored_sessions(b)); }

// Random incomplete design: n raters, each rating k of m images.
RatingMatrix random_design(Rng& rng, std::size_t n, std::size_t m, std::size_t k) {
  RatingMatrix rm;
  for (std::size_t j = 0; j < m; ++j) rm.set_gender_stem("i" + std::to_string(j), j < 3);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> imgs(m);
    std::iota(imgs.begin(), imgs.end(), std::size_t{0});
    for (std::size_t a = 0; a < k; ++a) std::swap(imgs[a], imgs[a + rng.below(m - a)]);
    for (std::size_t a = 0; a < k; ++a)
      rm.add("r" + std::to_string(i), "i" + std::to_string(imgs[a]), 1 + static_cast<int>(rng.below(5)));
  }
  return rm;
}

Outcome c1_loo_identity() {
  Outcome o;
  double worst = 0.0;
  auto check = [&](const RatingMatrix& m) {
    const auto d = loo_demean(m);
    std::vector<double> sums(m.n_images(), 0.0);
    for (std::size_t r = 0; r < m.n_respondents(); ++r) {
      const auto& cells = m.cells(r);
      for (std::size_t c = 0; c < cells.size(); ++c) sums[cells[c].image] += d[r][c];
    }
    for (double s : sums) worst = std::max(worst, std::fabs(s));
  };
  Rng rng(101);
  for (int rep = 0; rep < 50; ++rep) {
    const auto m = random_design(rng, 10 + rng.below(60), 8 + rng.below(20), 5);
    bool ok = true;
    for (std::size_t j = 0; j < m.n_images(); ++j) ok &= m.raters(j).size() >= 2;
    if (ok) check(m);
  }
  for (std::uint64_t seed : {1, 2, 3}) check(matrix_of(cohort(seed)));
  o.require(worst < 1e-9, "max |column sum| < 1e-9");
  o.note(fmt("max |sum_i demeaned(i,j)| = %.3g over random designs and 3 cohorts", worst));
  return o;
}

Outcome c2_standardized_moments() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t seed : {4, 5, 6}) {
    const auto m = matrix_of(cohort(seed));
    for (auto subset : {ImageSubset::All, ImageSubset::GenderStemOnly}) {
      std::vector<double> z;
      for (const auto& s : sit_scores(m, subset)) z.push_back(s.standardized);
      worst = std::max({worst, std::fabs(mean(z)), std::fabs(stddev(z) - 1.0)});
    }
  }
  o.require(worst < 1e-9, "moments within 1e-9");
  o.note(fmt("max deviation from mean 0 / SD 1 = %.3g (SIT and Gender-SIT, 3 cohorts)", worst));
  return o;
}

Outcome c3_dscore_invariance() {
  Outcome o;
  Rng rng(303);
  double worst_scale = 0.0, worst_swap = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> con(20), inc(20);
    for (auto& x : con) x = rng.normal(700, 120);
    for (auto& x : inc) x = rng.normal(820, 140);
    const double d = iat::d_score(con, inc).d_score;
    const double c = 0.1 + 10.0 * rng.uniform(), k = rng.normal(0, 500);
    std::vector<double> con2 = con, inc2 = inc;
    for (auto& x : con2) x = c * x + k;
    for (auto& x : inc2) x = c * x + k;
    worst_scale = std::max(worst_scale, std::fabs(iat::d_score(con2, inc2).d_score - d));
    worst_swap = std::max(worst_swap, std::fabs(iat::d_score(inc, con).d_score + d));
  }
  o.require(worst_scale < 1e-9, "scale/shift invariance to 1e-9");
  o.require(worst_swap == 0.0, "label swap negates exactly");
  o.note(fmt("max scale/shift change %.3g, max swap residual %.3g over 200 cases", worst_scale,
             worst_swap));
  return o;
}

Outcome c4_split_half_convergence() {
  Outcome o;
  const auto m = matrix_of(cohort(614));
  const double alpha = cronbach_alpha(slot_matrix(m, loo_demean(m)));
  ReliabilityOptions opt;
  opt.n_draws = 9999;
  opt.seed = 2024;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = split_half_reliability(m, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(std::fabs(r.mean - alpha) < 0.02, "|mean - alpha| < 0.02");
  o.require(secs < 60.0, "runtime < 60 s");
  o.note(fmt("alpha %.4f, split-half mean %.4f, %.2f s", alpha, r.mean, secs));
  return o;
}

Outcome c5_reliability_regime() {
  Outcome o;
  const auto m = matrix_of(cohort(55));
  const auto d = loo_demean(m);
  const double a20 = cronbach_alpha(slot_matrix(m, d, ImageSubset::All));
  const double a6 = cronbach_alpha(slot_matrix(m, d, ImageSubset::GenderStemOnly));
  o.require(a20 >= 0.9, "alpha(20) >= 0.9");
  o.require(a6 >= 0.75 && a6 <= 0.90, "alpha(6) in [0.75, 0.90]");
  o.note(fmt("loading 0.6: alpha(20) %.4f, alpha(6) %.4f; qualitative regime only", a20, a6));
  return o;
}

Outcome c6_factor_recovery() {
  Outcome o;
  const auto x = sit::testing::one_factor_items(5000, 20, 0.6, 606);
  const auto sol = factor_single(x);
  double worst_l = 0.0, worst_u = 0.0;
  for (Eigen::Index j = 0; j < sol.loadings.size(); ++j) {
    worst_l = std::max(worst_l, std::fabs(sol.loadings(j) - 0.6));
    worst_u = std::max(worst_u, std::fabs(sol.uniquenesses(j) - (1.0 - sol.loadings(j) * sol.loadings(j))));
  }
  o.require(worst_l <= 0.05, "loadings within 0.6 +- 0.05");
  o.require(worst_u <= 1e-3, "uniqueness = 1 - loading^2 within 1e-3");
  o.note(fmt("max |loading - 0.6| %.4f, max uniqueness residual %.3g", worst_l, worst_u));
  return o;
}

Outcome c7_ols() {
  Outcome o;
  Rng rng(707);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 15 + rng.below(60), p = 2 + rng.below(5);
    Design d;
    d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    d.y.resize(static_cast<Eigen::Index>(n));
    std::vector<std::vector<double>> xv(n, std::vector<double>(p));
    std::vector<double> yv(n);
    for (std::size_t i = 0; i < n; ++i) {
      double y = rng.normal();
      for (std::size_t j = 0; j < p; ++j) {
        const double v = j == 0 ? 1.0 : rng.normal(0.0, 1.0 + static_cast<double>(j));
        xv[i][j] = v;
        d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        y += 0.3 * static_cast<double>(j) * v;
      }
      yv[i] = y;
      d.y(static_cast<Eigen::Index>(i)) = y;
    }
    for (std::size_t j = 0; j < p; ++j) d.columns.push_back(j ? "x" + std::to_string(j) : "(Intercept)");
    const auto f = ols_fit(d);
    const auto ref = sit::testing::ols_oracle(xv, yv);
    for (std::size_t j = 0; j < p; ++j) {
      worst = std::max(worst, std::fabs(f.coefficients.at(d.columns[j]) - ref.beta[j]));
      worst = std::max(worst, std::fabs(f.std_errors.at(d.columns[j]) - ref.se[j]));
    }
  }
  o.require(worst < 1e-8, "OLS matches oracle to 1e-8");
  o.note(fmt("oracle max abs diff %.3g over 100 systems", worst));

  std::vector<double> est;
  std::size_t within = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto t = analysis_table(cohort(70000 + seed));
    est.push_back(fit(t, builtin_spec("table2_col1")).coefficients.at("iat_rev"));
    within += std::fabs(est.back() - 0.25) <= 0.10;
  }
  double sq = 0.0;
  for (double e : est) sq += (e - 0.25) * (e - 0.25);
  const double rmse = std::sqrt(sq / static_cast<double>(est.size()));
  const double m = mean(est);
  o.require(std::fabs(m - 0.25) <= 0.02, "mean revelation estimate within 0.25 +- 0.02");
  o.require(rmse <= 0.10, "RMSE of revelation estimates <= 0.10");
  o.note(fmt("revelation over 200 seeds: mean %.4f, RMSE %.4f, sd %.4f", m, rmse, stddev(est)));
  o.note(fmt("%.0f/200 single estimates within +-0.10", static_cast<double>(within)));
  return o;
}

Outcome c8_framing_null() {
  Outcome o;
  const std::vector<std::string> specs = {"framing_col1", "framing_col3"};
  const std::vector<std::string> dummies = {"framing=info", "framing=no_frame"};
  std::map<std::string, int> ok;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto t = analysis_table(cohort(80000 + seed));
    for (const auto& s : specs) {
      const auto f = fit(t, builtin_spec(s));
      for (const auto& d : dummies)
        ok[s + " " + d] += std::fabs(f.coefficients.at(d)) < 2.0 * f.std_errors.at(d);
    }
  }
  for (const auto& [k, v] : ok) {
    o.require(v >= 90, k + " >= 90/100");
    o.note(k + " " + std::to_string(v) + "/100");
  }
  return o;
}

Outcome c9_kappa() {
  Outcome o;
  Rng rng(909);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t k = 2 + rng.below(3);
    std::vector<std::vector<long long>> cm(k, std::vector<long long>(k));
    std::vector<std::string> a, b;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        cm[i][j] = static_cast<long long>(rng.below(i == j ? 30 : 10)) + 1;
        for (long long c = 0; c < cm[i][j]; ++c) {
          a.push_back("L" + std::to_string(i));
          b.push_back("L" + std::to_string(j));
        }
      }
    // integer form: (n * diag - sum row*col) / (n^2 - sum row*col)
    long long n = 0, diag = 0, rc = 0;
    std::vector<long long> row(k, 0), col(k, 0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        n += cm[i][j];
        row[i] += cm[i][j];
        col[j] += cm[i][j];
        if (i == j) diag += cm[i][j];
      }
    for (std::size_t i = 0; i < k; ++i) rc += row[i] * col[i];
    const double ref = static_cast<double>(n * diag - rc) / static_cast<double>(n * n - rc);
    worst = std::max(worst, std::fabs(cohens_kappa(a, b) - ref));
  }
  const std::vector<std::string> same = {"pro", "against", "neutral", "pro", "against"};
  const double perfect = cohens_kappa(same, same);
  o.require(worst <= 1e-15, "randomized tables match the integer oracle");
  o.require(perfect == 1.0, "kappa = 1 on perfect agreement");
  o.note(fmt("max |kappa - oracle| %.3g over 20 tables; perfect agreement %.17g", worst, perfect));
  return o;
}

Outcome c10_formulas() {
  Outcome o;
  double worst = 0.0;
  for (double r : {-0.5, 0.0, 0.25, 0.5, 0.9, 1.0})
    worst = std::max(worst, std::fabs(spearman_brown(r) - 2.0 * r / (1.0 + r)));
  const std::vector<std::pair<double, double>> pilot = {{0.0, 1.0}, {2.5, 3.0}, {5.0, 5.0}};
  for (const auto& [in, out] : pilot) worst = std::max(worst, std::fabs(rescale_pilot(in) - out));
  o.require(worst <= 1e-12, "analytic values to 1e-12");
  o.note(fmt("max abs error %.3g", worst));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// simulate -> write -> read -> score -> reliability -> regress, as bytes.
std::string pipeline_bytes(const fs::path& dir) {
  fs::remove_all(dir);
  synth::CohortSpec s;
  s.seed = 1111;
  write_bundle(dir, to_bundle(synth::generate_cohort(s)));
  std::string out;
  for (const auto& name : {"pool.csv", "sessions.csv", "ratings.csv", "comments.csv", "iat_trials.csv",
                           "questionnaire.csv"})
    out += slurp(dir / name);
  const auto b = read_bundle(dir);
  out += csv::to_string(scores_table(score(b)));
  ReliabilityOptions ro;
  ro.n_draws = 999;
  ro.seed = 77;
  const auto m = matrix_of(b);
  const auto sh = split_half_reliability(m, ro);
  out += csv::to_string(reliability_draws_table(sh));
  out += csv::to_string(reliability_summary_table(test_retest_reliability(m, ro)));
  const auto t = analysis_table(b);
  std::vector<FitResult> fits;
  for (const auto& spec : builtin_specs()) fits.push_back(fit(t, spec));
  out += render_table(fits);
  return out;
}

Outcome c11_determinism() {
  Outcome o;
  const auto base = fs::temp_directory_path() / ("sit_acceptance_" + std::to_string(::getpid()));
  const auto a = pipeline_bytes(base / "run1");
  const auto b = pipeline_bytes(base / "run2");
  o.require(!a.empty() && a == b, "pipeline byte-identical across runs");
  o.note("pipeline output " + std::to_string(a.size()) + " bytes, identical: " + (a == b ? "yes" : "no"));

  EngineOptions eo;
  eo.seed = 5;
  const auto log = base / "events.ndjson";
  std::string online;
  std::vector<EventRecord> events;
  {
    Engine eng(sit::testing::make_pool(), log, eo);
    Api api(eng);
    Rng rng(12);
    for (int i = 0; i < 120; ++i) sit::testing::drive_session(api, rng);
    online = csv::to_string(scores_table(eng.scores()));
    events = eng.events();
  }
  const auto replayed = Engine::replay(sit::testing::make_pool(), read_log(log), eo);
  const auto from_log = csv::to_string(scores_table(replayed->scores()));
  Engine reopened(sit::testing::make_pool(), log, eo);
  const auto from_file = csv::to_string(scores_table(reopened.scores()));
  o.require(from_log == online && from_file == online, "replay reproduces online scores");
  o.note(std::to_string(events.size()) + " events replayed, scores identical: " +
         (from_log == online && from_file == online ? "yes" : "no"));
  fs::remove_all(base);
  return o;
}

Outcome c12_tag_coverage() {
  Outcome o;
  using text::Characteristic;
  auto p = [](std::string tag, Characteristic c, double v) {
    text::TagCategoryProbs t;
    t.tag = std::move(tag);
    for (auto k : text::kCharacteristics) t.probs[k] = 0.0;
    t.probs[c] = v;
    return t;
  };
  const std::vector<text::TagCategoryProbs> probs = {
      p("girl", Characteristic::Gender, 0.93),         p("boy", Characteristic::Gender, 0.51),
      p("wheelchair", Characteristic::Disability, 0.88), p("church", Characteristic::Religion, 0.5),
      p("elderly", Characteristic::Age, 0.5000001),    p("book", Characteristic::Age, 0.05),
      p("desk", Characteristic::SocialOrigin, 0.3),    p("Hijab", Characteristic::Religion, 0.97)};
  flow::ImagePool pool = {
      {"a", true, {"girl", "book", "desk"}, ""},
      {"b", false, {"boy", "church", "elderly", "hijab"}, ""},
      {"c", false, {"book", "desk"}, ""},
      {"d", false, {}, ""},
      {"e", true, {"girl", "wheelchair", "elderly", "boy", "church"}, ""},
  };
  const auto cls = text::classify_tags(probs);
  const auto st = text::image_tag_stats(pool, cls);
  // hand counts: protected tags per image and distinct characteristics
  const std::vector<std::size_t> n_prot = {1, 3, 0, 0, 4};
  const std::vector<std::size_t> n_char = {1, 3, 0, 0, 3};
  bool counts_ok = st.images.size() == 5;
  for (std::size_t i = 0; counts_ok && i < 5; ++i) {
    counts_ok &= st.images[i].n_tags == pool[i].tags.size();
    counts_ok &= st.images[i].n_protected == n_prot[i];
    counts_ok &= st.images[i].n_characteristics == n_char[i];
  }
  counts_ok &= st.untagged == std::vector<std::string>{"d"};
  counts_ok &= st.without_protected == std::vector<std::string>{"c", "d"};
  counts_ok &= st.images_per_characteristic.at(Characteristic::Gender) == 3;
  counts_ok &= st.images_per_characteristic.at(Characteristic::Age) == 2;
  counts_ok &= st.images_per_characteristic.at(Characteristic::Religion) == 1;
  counts_ok &= st.images_per_characteristic.at(Characteristic::Disability) == 1;
  counts_ok &= std::fabs(st.images[1].proportion - 0.75) < 1e-15 &&
               std::fabs(st.images[4].proportion - 0.8) < 1e-15;
  o.require(counts_ok, "per-image counts equal hand counts");
  const bool boundary = !cls.at("church").has_value() && cls.at("elderly") == Characteristic::Age &&
                        cls.at("boy") == Characteristic::Gender;
  o.require(boundary, "0.5 unclassified, just above 0.5 classified");
  o.note(std::string("counts ") + (counts_ok ? "match" : "differ") + ", boundary " +
         (boundary ? "strict" : "wrong"));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"leave-one-out identity", c1_loo_identity},
      {"standardized SIT moments", c2_standardized_moments},
      {"IAT D-score invariances", c3_dscore_invariance},
      {"split-half convergence to alpha", c4_split_half_convergence},
      {"reliability regime", c5_reliability_regime},
      {"factor recovery", c6_factor_recovery},
      {"OLS oracle and revelation recovery", c7_ols},
      {"framing null", c8_framing_null},
      {"Cohen's kappa", c9_kappa},
      {"Spearman-Brown and pilot rescale", c10_formulas},
      {"pipeline determinism and replay", c11_determinism},
      {"tag coverage", c12_tag_coverage},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("criterion %2zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

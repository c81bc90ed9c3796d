#include <gtest/gtest.h>

#include <cmath>

#include "sit/basic_stats.hpp"
#include "sit/platform/pipeline.hpp"
#include "sit/platform/tables.hpp"
#include "sit/regression.hpp"
#include "sit/reliability.hpp"
#include "sit/robustness.hpp"
#include "sit/synth.hpp"

using namespace sit;
using namespace sit::platform;

namespace {

Bundle cohort(synth::CohortSpec spec) { return to_bundle(synth::generate_cohort(spec)); }

RatingMatrix matrix_of(const Bundle& b) { return rating_matrix(b, scored_sessions(b)); }

std::vector<double> answers(const Bundle& b, const std::string& q) {
  std::vector<double> v;
  for (const auto& a : b.questionnaire)
    if (a.question_id == q) v.push_back(std::stod(a.value));
  return v;
}

}  // namespace

TEST(Synth, SameSpecSameBytes) {
  synth::CohortSpec s;
  s.n_respondents = 80;
  s.seed = 12;
  const auto a = cohort(s), b = cohort(s);
  EXPECT_EQ(csv::to_string(ratings_table(a.ratings)), csv::to_string(ratings_table(b.ratings)));
  EXPECT_EQ(csv::to_string(iat_trials_table(a.iat_trials)),
            csv::to_string(iat_trials_table(b.iat_trials)));
  EXPECT_EQ(csv::to_string(questionnaire_table(a.questionnaire)),
            csv::to_string(questionnaire_table(b.questionnaire)));
  EXPECT_EQ(csv::to_string(tokens_table(a.tokens)), csv::to_string(tokens_table(b.tokens)));
  s.seed = 13;
  EXPECT_NE(csv::to_string(ratings_table(cohort(s).ratings)),
            csv::to_string(ratings_table(a.ratings)));
}

TEST(Synth, RatingMatrixInvariantsHold) {
  for (std::uint64_t seed : {1, 2, 3}) {
    synth::CohortSpec s;
    s.n_respondents = 150;
    s.seed = seed;
    const auto b = cohort(s);
    EXPECT_EQ(b.sessions.size(), 150u);
    for (const auto& r : b.sessions) EXPECT_TRUE(r.complete);
    const auto m = matrix_of(b);
    EXPECT_NO_THROW(m.validate_design(20));
    std::size_t gender = 0;
    for (std::size_t j = 0; j < m.n_images(); ++j) gender += m.is_gender_stem(j);
    EXPECT_EQ(gender, 6u);
    for (const auto& r : b.ratings) {
      EXPECT_GE(r.rating, 1);
      EXPECT_LE(r.rating, 5);
      EXPECT_GT(r.rating_time_ms, 0);
    }
  }
}

TEST(Synth, NoCommonFactorMeansNoConsistency) {
  synth::CohortSpec s;
  s.n_respondents = 1000;
  s.latent_sensitivity_loading = 0.0;
  s.thresholds = synth::fit_thresholds(s, {0.23, 0.14, 0.15, 0.15, 0.33});
  const auto m = matrix_of(cohort(s));
  EXPECT_LT(std::fabs(cronbach_alpha(slot_matrix(m, loo_demean(m)))), 0.1);
}

TEST(Synth, CalibratedLoadingGivesHighAlpha) {
  synth::CohortSpec s;
  s.seed = 31;
  const auto m = matrix_of(cohort(s));
  EXPECT_GE(cronbach_alpha(slot_matrix(m, loo_demean(m))), 0.9);
}

TEST(Synth, ThresholdsReproduceRequestedShares) {
  synth::CohortSpec s;
  const std::array<double, 5> target = {0.2, 0.2, 0.2, 0.2, 0.2};
  s.thresholds = synth::fit_thresholds(s, target);
  const auto dist = synth::rating_distribution(s);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(dist[static_cast<std::size_t>(k)], 0.2, 1e-6);
  s.n_respondents = 1000;
  std::array<double, 5> seen{};
  const auto b = cohort(s);
  for (const auto& r : b.ratings) seen[static_cast<std::size_t>(r.rating - 1)] += 1.0;
  for (auto& x : seen) x /= static_cast<double>(b.ratings.size());
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(seen[static_cast<std::size_t>(k)], 0.2, 0.02);
}

TEST(Synth, InfeasibleDiscretizationIsCalibrationError) {
  synth::CohortSpec s;
  s.thresholds = {40.0, 41.0, 42.0, 43.0};
  try {
    synth::generate_cohort(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::calibration);
  }
  s.thresholds = {0.5, 0.1, 0.2, 0.3};
  EXPECT_THROW(synth::generate_cohort(s), Error);
}

TEST(Synth, RevelationEffectRecoveredOnAverage) {
  double sum = 0.0;
  const int runs = 12;
  for (int k = 0; k < runs; ++k) {
    synth::CohortSpec s;
    s.seed = 500 + static_cast<std::uint64_t>(k);
    const auto t = analysis_table(cohort(s));
    sum += fit(t, builtin_spec("table2_col1")).coefficients.at("iat_rev");
  }
  EXPECT_NEAR(sum / runs, 0.25, 0.10);
}

TEST(Synth, RobustnessVariantsAgreeOnStrongFactorCohort) {
  synth::CohortSpec s;
  s.seed = 8;
  s.noise_sd = 0.35;
  const auto rs = robustness_scores(matrix_of(cohort(s)));
  EXPECT_GT(pearson(rs.standard, rs.sd_adjusted), 0.95);
  EXPECT_GT(pearson(rs.standard, rs.factor), 0.95);
  EXPECT_GT(pearson(rs.sd_adjusted, rs.factor), 0.95);
}

TEST(Calibration, FemaleShareAndAgeMoments) {
  const auto spec = synth::calibrate_to_paper({0.845, 51.8, 9.5, 25, 69});
  const auto m = synth::clipped_normal_moments(spec.demographics.age_mu, spec.demographics.age_sigma,
                                               25, 69);
  EXPECT_NEAR(m.mean, 51.8, 1e-6);
  EXPECT_NEAR(m.sd, 9.5, 1e-6);
  auto s = spec;
  s.seed = 4;
  const auto b = cohort(s);
  const auto g = answers(b, "gender");
  const auto age = answers(b, "age");
  ASSERT_EQ(g.size(), 614u);
  EXPECT_GE(mean(g), 0.80);
  EXPECT_LE(mean(g), 0.89);
  EXPECT_NEAR(mean(age), 51.8, 0.05 * 51.8);
  EXPECT_NEAR(stddev(age), 9.5, 0.05 * 9.5);
}

TEST(Calibration, ClippedMomentsMatchMonteCarlo) {
  Rng rng(1);
  std::vector<double> v;
  for (int i = 0; i < 200000; ++i) v.push_back(std::clamp(rng.normal(50, 12), 25.0, 69.0));
  const auto m = synth::clipped_normal_moments(50, 12, 25, 69);
  EXPECT_NEAR(m.mean, mean(v), 0.05);
  EXPECT_NEAR(m.sd, stddev(v), 0.05);
}

TEST(Calibration, UnreachableTargetsListed) {
  synth::CalibrationTargets t;
  t.age_sd = 0.0;
  try {
    synth::calibrate_to_paper(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::calibration);
    EXPECT_NE(std::string(e.what()).find("age_sd"), std::string::npos);
  }
  t = {};
  t.female_share = 1.2;
  t.age_mean = 80;
  try {
    synth::calibrate_to_paper(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("female_share"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("age_mean"), std::string::npos);
  }
}

#include <gtest/gtest.h>

#include <cmath>

#include "sit/basic_stats.hpp"
#include "sit/factor.hpp"
#include "sit/platform/pipeline.hpp"
#include "sit/synth.hpp"
#include "sit/traits.hpp"
#include "support.hpp"

using namespace sit;

TEST(FactorSingle, ExactOneFactorCorrelationRecoversLoadings) {
  Eigen::VectorXd lambda(6);
  lambda << 0.8, 0.7, 0.6, 0.5, 0.65, 0.4;
  Eigen::MatrixXd r = lambda * lambda.transpose();
  r.diagonal().setOnes();
  FactorOptions o;
  o.tolerance = 1e-12;
  o.max_iterations = 5000;
  const auto sol = factor_single_corr(r, o);
  EXPECT_TRUE(sol.converged);
  EXPECT_FALSE(sol.heywood);
  for (Eigen::Index i = 0; i < 6; ++i) {
    EXPECT_NEAR(sol.loadings(i), lambda(i), 1e-5);
    EXPECT_NEAR(sol.uniquenesses(i), 1.0 - lambda(i) * lambda(i), 1e-5);
  }
}

TEST(FactorSingle, SimulatedLoadingsPointSix) {
  const auto x = sit::testing::one_factor_items(5000, 20, 0.6, 2024);
  const auto sol = factor_single(x);
  EXPECT_TRUE(sol.converged);
  for (Eigen::Index i = 0; i < sol.loadings.size(); ++i) {
    EXPECT_NEAR(sol.loadings(i), 0.6, 0.05);
    EXPECT_NEAR(sol.uniquenesses(i), 1.0 - sol.loadings(i) * sol.loadings(i), 1e-3);
  }
}

TEST(FactorSingle, NearDuplicateItemsHitTheCeiling) {
  Rng rng(3);
  Eigen::MatrixXd x(400, 3);
  for (Eigen::Index i = 0; i < 400; ++i) {
    const double f = rng.normal();
    x(i, 0) = f;
    x(i, 1) = f + 1e-4 * rng.normal();
    x(i, 2) = 0.5 * f + rng.normal();
  }
  const auto sol = factor_single(x);
  EXPECT_NEAR(sol.loadings(0), 1.0, 1e-2);
  EXPECT_NEAR(sol.loadings(1), 1.0, 1e-2);
  EXPECT_NEAR(sol.uniquenesses(0), 0.0, 2e-2);
}

TEST(FactorSingle, SignIsNormalizedPositive) {
  auto x = sit::testing::one_factor_items(500, 5, 0.6, 8);
  x = -x;
  EXPECT_GT(factor_single(x).loadings.sum(), 0.0);
}

TEST(FactorSingle, Errors) {
  Eigen::MatrixXd x = sit::testing::one_factor_items(50, 4, 0.5, 1);
  x.col(2).setConstant(3.0);
  try {
    factor_single(x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate);
  }
  EXPECT_THROW(factor_single(sit::testing::one_factor_items(50, 2, 0.5, 1)), Error);
}

TEST(FactorScores, MatchNormalEquationsWeights) {
  const auto x = sit::testing::one_factor_items(300, 6, 0.6, 12);
  const auto sol = factor_single(x);
  const auto s = factor_scores(x, sol);
  // oracle: w solves R w = lambda via explicit inverse
  Eigen::MatrixXd z = x.rowwise() - x.colwise().mean();
  for (Eigen::Index c = 0; c < z.cols(); ++c) z.col(c) /= std::sqrt(z.col(c).squaredNorm() / 299.0);
  const Eigen::MatrixXd r = z.transpose() * z / 299.0;
  const Eigen::VectorXd w = r.inverse() * sol.loadings;
  const Eigen::VectorXd expect = z * w;
  for (Eigen::Index i = 0; i < s.size(); ++i) EXPECT_NEAR(s(i), expect(i), 1e-9);
}

namespace {

std::vector<ResponseRow> likert_rows(const ScaleDefinition& def, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ResponseRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    ResponseRow row{"p" + std::to_string(i), {}};
    const double f = rng.normal();
    for (std::size_t k = 0; k < def.size(); ++k) {
      double y = 0.7 * f + 0.7 * rng.normal();
      if (def.reverse_keyed.count(static_cast<int>(k))) y = -y;
      row.answers[def.item_id(k)] = std::clamp(static_cast<int>(std::lround(3 + 1.2 * y)), 1, 5);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST(TraitIndex, StandardizedByDefault) {
  const auto def = default_scales()[0];
  const auto idx = trait_index(likert_rows(def, 300, 1), def);
  EXPECT_EQ(idx.values.size(), 300u);
  EXPECT_NEAR(mean(idx.values), 0.0, 1e-9);
  EXPECT_NEAR(stddev(idx.values), 1.0, 1e-9);
}

TEST(TraitIndex, MissingItemDropsRespondent) {
  const auto def = default_scales()[1];
  auto rows = likert_rows(def, 100, 2);
  rows[7].answers.erase(def.item_id(0));
  const auto idx = trait_index(rows, def);
  ASSERT_EQ(idx.dropped.size(), 1u);
  EXPECT_EQ(idx.dropped[0], "p7");
  EXPECT_FALSE(idx.value_for("p7"));
  EXPECT_TRUE(idx.value_for("p8"));
}

TEST(TraitIndex, IdenticalAnswersAreDegenerate) {
  for (const auto& d : default_scales()) {
    std::vector<ResponseRow> rs;
    for (int i = 0; i < 20; ++i) {
      ResponseRow r{"p" + std::to_string(i), {}};
      for (std::size_t k = 0; k < d.size(); ++k) r.answers[d.item_id(k)] = 3;
      rs.push_back(r);
    }
    try {
      trait_index(rs, d);
      FAIL() << d.key;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::degenerate);
    }
  }
}

TEST(TraitIndex, OutOfRangeAnswerRejected) {
  const auto def = default_scales()[0];
  auto rows = likert_rows(def, 30, 3);
  rows[0].answers[def.item_id(0)] = 6;
  EXPECT_THROW(trait_index(rows, def), Error);
}

TEST(TraitIndex, FlippingAReverseKeyFlipsItsLoadingOnly) {
  for (const auto& def : default_scales()) {
    if (def.reverse_keyed.empty()) continue;
    const auto rows = likert_rows(def, 400, 4);
    const auto a = trait_index(rows, def);
    auto flipped = def;
    const int item = *def.reverse_keyed.begin();
    flipped.reverse_keyed.erase(item);
    const auto b = trait_index(rows, flipped);
    // normalize the global sign on the largest loading
    Eigen::Index big = item == 0 ? 1 : 0;
    for (Eigen::Index i = 0; i < a.solution.loadings.size(); ++i)
      if (i != item && std::fabs(a.solution.loadings(i)) > std::fabs(a.solution.loadings(big))) big = i;
    const double sign = (a.solution.loadings(big) > 0) == (b.solution.loadings(big) > 0) ? 1.0 : -1.0;
    for (Eigen::Index i = 0; i < a.solution.loadings.size(); ++i) {
      const double expect = (i == item ? -1.0 : 1.0) * a.solution.loadings(i);
      EXPECT_NEAR(sign * b.solution.loadings(i), expect, 1e-9) << def.key << " item " << i;
    }
    for (std::size_t r = 0; r < a.values.size(); ++r)
      EXPECT_NEAR(sign * b.values[r], a.values[r], 1e-9) << def.key;
  }
}

TEST(TraitIndex, RawScoresOnCalibratedCohortHaveTargetSpread) {
  const auto spec = synth::calibrate_to_paper({});
  auto s = spec;
  s.seed = 17;
  const auto b = platform::to_bundle(synth::generate_cohort(s));
  const auto rows = platform::detail::response_rows(b, platform::scored_sessions(b));
  TraitOptions raw;
  raw.standardize = false;
  for (const auto& idx : trait_indices(rows, default_scales(), raw)) {
    const double sd = stddev(idx.values);
    EXPECT_GE(sd, 0.79) << static_cast<int>(idx.scale);
    EXPECT_LE(sd, 0.97) << static_cast<int>(idx.scale);
  }
}

#include <gtest/gtest.h>

#include <cmath>

#include "sit/basic_stats.hpp"
#include "sit/rng.hpp"
#include "sit/robustness.hpp"
#include "sit/sit_scoring.hpp"
#include "support.hpp"

using namespace sit;

namespace {

RatingMatrix small_matrix() {
  RatingMatrix m;
  m.add("r1", "A", 5);
  m.add("r2", "A", 3);
  m.add("r3", "A", 1);
  m.add("r1", "B", 4);
  m.add("r2", "B", 4);
  m.add("r3", "B", 1);
  return m;
}

// Random design: each respondent rates all gender images plus a sample of others.
RatingMatrix random_matrix(std::uint64_t seed, std::size_t n = 60, std::size_t pool = 30,
                           std::size_t gender = 4, std::size_t others = 8) {
  Rng rng(seed);
  RatingMatrix m;
  for (std::size_t r = 0; r < n; ++r) {
    const auto rid = "r" + std::to_string(r);
    std::vector<std::size_t> idx;
    for (std::size_t j = gender; j < pool; ++j) idx.push_back(j);
    rng.shuffle(std::span<std::size_t>(idx));
    idx.resize(others);
    for (std::size_t j = 0; j < gender; ++j) idx.push_back(j);
    for (auto j : idx) m.add(rid, "i" + std::to_string(j), 1 + static_cast<int>(rng.below(5)));
  }
  for (std::size_t j = 0; j < gender; ++j) m.set_gender_stem("i" + std::to_string(j), true);
  return m;
}

// Brute force: rating minus the mean of the other raters of that image.
double loo_oracle(const RatingMatrix& m, std::size_t r, std::size_t image) {
  double own = 0.0, sum = 0.0;
  int n = 0;
  for (const auto& [who, x] : m.raters(image)) {
    if (who == r)
      own = x;
    else {
      sum += x;
      ++n;
    }
  }
  return own - sum / n;
}

}  // namespace

TEST(RatingMatrix, RejectsOutOfRangeAndDuplicates) {
  RatingMatrix m;
  EXPECT_THROW(m.add("r", "A", 0), Error);
  EXPECT_THROW(m.add("r", "A", 6), Error);
  m.add("r", "A", 3);
  try {
    m.add("r", "A", 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::immutability);
  }
}

TEST(RatingMatrix, ValidateDesign) {
  auto m = random_matrix(3, 20, 30, 4, 8);
  EXPECT_NO_THROW(m.validate_design(12));
  EXPECT_THROW(m.validate_design(20), Error);
}

TEST(LooDemean, HandEnumeration) {
  const auto m = small_matrix();
  const auto d = loo_demean(m);
  EXPECT_DOUBLE_EQ(d[0][0], 3.0);
  EXPECT_DOUBLE_EQ(d[1][0], 0.0);
  EXPECT_DOUBLE_EQ(d[2][0], -3.0);
  EXPECT_DOUBLE_EQ(d[0][1], 1.5);
  EXPECT_DOUBLE_EQ(d[1][1], 1.5);
  EXPECT_DOUBLE_EQ(d[2][1], -3.0);
}

TEST(LooDemean, IdenticalRatingsGiveZero) {
  RatingMatrix m;
  for (int r = 0; r < 5; ++r) m.add("r" + std::to_string(r), "A", 4);
  for (const auto& row : loo_demean(m)) EXPECT_EQ(row[0], 0.0);
}

TEST(LooDemean, SingleRaterImageIsDegenerate) {
  RatingMatrix m;
  m.add("r1", "A", 4);
  m.add("r2", "A", 2);
  m.add("r1", "lonely", 3);
  try {
    loo_demean(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate);
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
}

TEST(LooDemean, PropertyMatchesBruteForceAndSumsToZero) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto m = random_matrix(seed);
    const auto d = loo_demean(m);
    std::vector<double> col_sum(m.n_images(), 0.0);
    for (std::size_t r = 0; r < m.n_respondents(); ++r)
      for (std::size_t k = 0; k < m.cells(r).size(); ++k) {
        const auto j = m.cells(r)[k].image;
        EXPECT_NEAR(d[r][k], loo_oracle(m, r, j), 1e-12);
        col_sum[j] += d[r][k];
      }
    for (double s : col_sum) EXPECT_NEAR(s, 0.0, 1e-9);
  }
}

TEST(SitScores, HandEnumeration) {
  const auto m = small_matrix();
  const auto s = sit_scores(m, ImageSubset::All);
  EXPECT_DOUBLE_EQ(s[0].tilde, 2.25);
  EXPECT_DOUBLE_EQ(s[1].tilde, 0.75);
  EXPECT_DOUBLE_EQ(s[2].tilde, -3.0);
  const double sd = std::sqrt((2.25 * 2.25 + 0.75 * 0.75 + 9.0) / 2.0);
  EXPECT_NEAR(s[0].standardized, 2.25 / sd, 1e-12);
  EXPECT_NEAR(s[0].standardized, 0.832, 5e-4);
  EXPECT_NEAR(s[1].standardized, 0.277, 5e-4);
  EXPECT_NEAR(s[2].standardized, -1.109, 5e-4);
}

TEST(SitScores, AllIdenticalRaisesZeroVariance) {
  RatingMatrix m;
  for (int r = 0; r < 4; ++r)
    for (const char* img : {"A", "B"}) m.add("r" + std::to_string(r), img, 3);
  const auto t = tilde_scores(m, loo_demean(m), ImageSubset::All);
  for (const auto& s : t) EXPECT_EQ(s.tilde, 0.0);
  EXPECT_THROW(sit_scores(m, ImageSubset::All), Error);
}

TEST(SitScores, EmptySubsetIsAnError) {
  const auto m = small_matrix();  // no gender flags
  try {
    sit_scores(m, ImageSubset::GenderStemOnly);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_data);
  }
}

TEST(SitScores, PropertyStandardizedMomentsAndSubsetCounts) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto m = random_matrix(seed);
    for (auto subset : {ImageSubset::All, ImageSubset::GenderStemOnly}) {
      const auto s = sit_scores(m, subset);
      std::vector<double> z;
      for (const auto& x : s) {
        z.push_back(x.standardized);
        EXPECT_EQ(x.n_images, subset == ImageSubset::All ? 12 : 4);
      }
      EXPECT_NEAR(mean(z), 0.0, 1e-9);
      EXPECT_NEAR(stddev(z), 1.0, 1e-9);
    }
  }
}

TEST(RescalePilot, Endpoints) {
  EXPECT_EQ(rescale_pilot(0.0), 1.0);
  EXPECT_EQ(rescale_pilot(5.0), 5.0);
  EXPECT_EQ(rescale_pilot(2.5), 3.0);
  EXPECT_THROW(rescale_pilot(-0.1), Error);
  EXPECT_THROW(rescale_pilot(5.1), Error);
}

TEST(Robustness, EqualImageSdMakesVariantsOneAndTwoIdentical) {
  // every image gets the same rating multiset, in a different respondent order
  RatingMatrix m;
  const std::vector<int> base = {1, 2, 3, 4, 5, 3, 2};
  for (int j = 0; j < 6; ++j)
    for (int r = 0; r < 7; ++r)
      m.add("r" + std::to_string(r), "i" + std::to_string(j), base[(r + 2 * j) % 7]);
  const auto rs = robustness_scores(m);
  for (std::size_t i = 0; i < rs.standard.size(); ++i)
    EXPECT_NEAR(rs.standard[i], rs.sd_adjusted[i], 1e-12);
}

TEST(Robustness, ZeroSdImageIsDegenerate) {
  RatingMatrix m;
  for (int r = 0; r < 4; ++r) {
    m.add("r" + std::to_string(r), "flat", 3);
    m.add("r" + std::to_string(r), "B", 1 + r);
  }
  try {
    robustness_scores(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate);
  }
}

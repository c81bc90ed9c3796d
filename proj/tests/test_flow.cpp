#include <gtest/gtest.h>

#include <set>

#include "sit/survey_flow.hpp"
#include "support.hpp"

using namespace sit;
using namespace sit::flow;
using sit::testing::make_pool;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::parse;
}

// A session in its SIT task with the given framing arm.
std::pair<SessionAssignment, SessionState> sit_session(Framing arm) {
  const auto pool = make_pool();
  for (std::uint64_t seed = 1;; ++seed) {
    auto a = create_session(pool, seed);
    if (a.framing.arm != arm || a.iat_first) continue;
    auto s = start_session(a);
    if (s.phase == Phase::Framing) s = acknowledge_framing(s, a);
    return {a, s};
  }
}

std::vector<iat::Trial> play_iat(SessionState& s, const SessionAssignment& a, std::int64_t fast = 0) {
  std::vector<iat::Trial> out;
  for (int i = 0; i < 40; ++i) {
    const auto step = next_step(s, a);
    iat::Trial t{a.session_id, step.iat_block->pairing, static_cast<int>(step.index), "w",
                 fast ? fast : (step.iat_block->pairing == iat::Pairing::Congruent ? 700 : 850) + i,
                 true};
    s = record_iat_trial(s, t, a);
    out.push_back(t);
  }
  return out;
}

}  // namespace

TEST(CreateSession, SequenceHasTwentyDistinctIdsIncludingGenderImages) {
  const auto pool = make_pool();
  const auto a = create_session(pool, 42);
  ASSERT_EQ(a.image_sequence.size(), 20u);
  std::set<std::string> ids(a.image_sequence.begin(), a.image_sequence.end());
  EXPECT_EQ(ids.size(), 20u);
  for (const auto& c : pool)
    if (c.is_gender_stem) {
      EXPECT_TRUE(ids.count(c.image_id)) << c.image_id;
    }
  EXPECT_EQ(a.session_id, session_id_for_seed(42));
}

TEST(CreateSession, Deterministic) {
  const auto pool = make_pool();
  EXPECT_EQ(create_session(pool, 7), create_session(pool, 7));
  EXPECT_NE(create_session(pool, 7).image_sequence, create_session(pool, 8).image_sequence);
}

TEST(CreateSession, ArmAndOrderFrequencies) {
  const auto pool = make_pool();
  std::map<Framing, int> arms;
  int iat_first = 0;
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    const auto a = create_session(pool, derive_seed(2024, static_cast<std::uint64_t>(i)));
    ++arms[a.framing.arm];
    iat_first += a.iat_first;
  }
  for (auto arm : {Framing::Info, Framing::InfoGuilt, Framing::NoFrame})
    EXPECT_NEAR(arms[arm] / static_cast<double>(n), 1.0 / 3.0, 0.02);
  EXPECT_NEAR(iat_first / static_cast<double>(n), 0.5, 0.02);
}

TEST(CreateSession, SampleAndOrderAreUniform) {
  const auto pool = make_pool();
  std::map<std::string, int> included;
  int gender_in_first_slot = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto a = create_session(pool, derive_seed(5, static_cast<std::uint64_t>(i)));
    for (const auto& id : a.image_sequence) ++included[id];
    for (std::size_t g = 0; g < 6; ++g) gender_in_first_slot += pool[g].image_id == a.image_sequence[0];
  }
  // each non-gender image is included with probability 14/94
  for (std::size_t j = 6; j < pool.size(); ++j)
    EXPECT_NEAR(included[pool[j].image_id] / static_cast<double>(n), 14.0 / 94.0, 0.015);
  EXPECT_NEAR(gender_in_first_slot / static_cast<double>(n), 6.0 / 20.0, 0.015);
}

TEST(CreateSession, PoolValidation) {
  auto pool = make_pool();
  pool[10].image_id = pool[11].image_id;
  EXPECT_EQ(code_of([&] { create_session(pool, 1); }), Errc::validation);
  pool = make_pool(100, 5);
  EXPECT_EQ(code_of([&] { create_session(pool, 1); }), Errc::validation);
  pool = make_pool(99, 6);
  EXPECT_EQ(code_of([&] { create_session(pool, 1); }), Errc::validation);
}

TEST(NextStep, FramingTextShownFirst) {
  const auto pool = make_pool();
  for (std::uint64_t seed = 1; seed < 50; ++seed) {
    const auto a = create_session(pool, seed);
    const auto s = start_session(a);
    const auto step = next_step(s, a);
    if (a.framing.arm == Framing::NoFrame) {
      EXPECT_NE(step.kind, StepKind::FramingText);
    } else {
      EXPECT_EQ(step.kind, StepKind::FramingText);
      EXPECT_EQ(step.text, framing_arm(a.framing.arm).text);
      if (a.framing.arm == Framing::Info) {
        EXPECT_NE(step.text.find("cognitive shortcuts"), std::string::npos);
      }
    }
  }
}

TEST(Rating, AcceptedThenCommentForSameImage) {
  auto [a, s] = sit_session(Framing::Info);
  const auto img = a.image_sequence[0];
  s = record_rating(s, {a.session_id, img, 5, 1200}, a);
  const auto step = next_step(s, a);
  EXPECT_EQ(step.kind, StepKind::CommentImage);
  EXPECT_EQ(step.image_id, img);
}

TEST(Rating, ValidationSequencingImmutability) {
  auto [a, s] = sit_session(Framing::InfoGuilt);
  const auto img = a.image_sequence[0];
  EXPECT_EQ(code_of([&] { record_rating(s, {a.session_id, img, 0, 10}, a); }), Errc::validation);
  EXPECT_EQ(code_of([&] { record_rating(s, {a.session_id, img, 6, 10}, a); }), Errc::validation);
  EXPECT_EQ(code_of([&] { record_rating(s, {a.session_id, a.image_sequence[1], 3, 10}, a); }),
            Errc::sequencing);
  s = record_rating(s, {a.session_id, img, 3, 10}, a);
  EXPECT_EQ(code_of([&] { record_rating(s, {a.session_id, img, 4, 10}, a); }), Errc::immutability);
  // comment cannot change the rating either: the stored rating stays 3
  s = record_comment(s, {a.session_id, img, "changed my mind", 10}, a);
  EXPECT_EQ(s.ratings[0].rating, 3);
  EXPECT_EQ(code_of([&] { record_rating(s, {a.session_id, img, 1, 10}, a); }), Errc::immutability);
}

TEST(Comment, OptionalLongAndOrdered) {
  auto [a, s] = sit_session(Framing::NoFrame);
  EXPECT_EQ(code_of([&] { record_comment(s, {a.session_id, a.image_sequence[0], "x", 1}, a); }),
            Errc::sequencing);
  s = record_rating(s, {a.session_id, a.image_sequence[0], 2, 1}, a);
  s = record_comment(s, {a.session_id, a.image_sequence[0], "", 1}, a);
  EXPECT_EQ(s.cursor, 1u);
  s = record_rating(s, {a.session_id, a.image_sequence[1], 2, 1}, a);
  s = record_comment(s, {a.session_id, a.image_sequence[1], std::string(1012, 'a'), 1}, a);
  EXPECT_EQ(s.cursor, 2u);
  EXPECT_EQ(code_of([&] { record_comment(s, {a.session_id, a.image_sequence[3], "", 1}, a); }),
            Errc::sequencing);
}

TEST(Flow, PhaseOrderSitFirstThenIatThenQuestionnaire) {
  auto [a, s] = sit_session(Framing::Info);
  EXPECT_EQ(s.phase, Phase::TaskA);
  for (const auto& img : a.image_sequence) {
    s = record_rating(s, {a.session_id, img, 4, 1}, a);
    s = record_comment(s, {a.session_id, img, "", 1}, a);
  }
  EXPECT_TRUE(s.sit_done);
  EXPECT_EQ(s.phase, Phase::TaskB);
  EXPECT_EQ(next_step(s, a).kind, StepKind::IatBlock);
  EXPECT_TRUE(next_step(s, a).iat_practice.has_value());
  play_iat(s, a);
  EXPECT_FALSE(s.iat_revealed);
  EXPECT_EQ(s.phase, Phase::Questionnaire);
  const auto step = next_step(s, a);
  EXPECT_EQ(step.kind, StepKind::QuestionnairePage);
  EXPECT_EQ(step.page_name, "demographics");
}

TEST(Flow, IatFirstRevealsFeedbackBeforeSit) {
  const auto pool = make_pool();
  std::uint64_t seed = 1;
  while (!create_session(pool, seed).iat_first) ++seed;
  const auto a = create_session(pool, seed);
  auto s = start_session(a);
  if (s.phase == Phase::Framing) s = acknowledge_framing(s, a);
  EXPECT_EQ(code_of([&] { record_rating(s, {a.session_id, a.image_sequence[0], 3, 1}, a); }),
            Errc::sequencing);
  play_iat(s, a);
  EXPECT_TRUE(s.awaiting_feedback);
  EXPECT_EQ(next_step(s, a).kind, StepKind::IatFeedback);
  s = record_feedback_shown(s, a);
  EXPECT_TRUE(s.iat_revealed);
  EXPECT_EQ(next_step(s, a).kind, StepKind::RateImage);
}

TEST(Flow, ExcludedIatFirstRespondentGetsNoFeedback) {
  const auto pool = make_pool();
  std::uint64_t seed = 1;
  while (!create_session(pool, seed).iat_first) ++seed;
  const auto a = create_session(pool, seed);
  auto s = start_session(a);
  if (s.phase == Phase::Framing) s = acknowledge_framing(s, a);
  play_iat(s, a, 150);
  EXPECT_FALSE(s.awaiting_feedback);
  EXPECT_FALSE(s.iat_revealed);
  EXPECT_EQ(next_step(s, a).kind, StepKind::RateImage);
  EXPECT_EQ(code_of([&] { record_feedback_shown(s, a); }), Errc::sequencing);
}

TEST(Flow, IatTrialsMustFollowSchedule) {
  auto [a, s] = sit_session(Framing::Info);
  for (const auto& img : a.image_sequence) {
    s = record_rating(s, {a.session_id, img, 4, 1}, a);
    s = record_comment(s, {a.session_id, img, "", 1}, a);
  }
  const auto step = next_step(s, a);
  const auto other = step.iat_block->pairing == iat::Pairing::Congruent ? iat::Pairing::Incongruent
                                                                         : iat::Pairing::Congruent;
  EXPECT_EQ(code_of([&] { record_iat_trial(s, {a.session_id, other, 0, "w", 700, true}, a); }),
            Errc::sequencing);
  EXPECT_EQ(code_of([&] {
              record_iat_trial(s, {a.session_id, step.iat_block->pairing, 3, "w", 700, true}, a);
            }),
            Errc::sequencing);
  EXPECT_EQ(code_of([&] {
              record_iat_trial(s, {a.session_id, step.iat_block->pairing, 0, "w", 0, true}, a);
            }),
            Errc::validation);
}

TEST(Questionnaire, PagesInOrderWithValidation) {
  auto [a, s] = sit_session(Framing::Info);
  for (const auto& img : a.image_sequence) {
    s = record_rating(s, {a.session_id, img, 4, 1}, a);
    s = record_comment(s, {a.session_id, img, "", 1}, a);
  }
  play_iat(s, a);
  EXPECT_EQ(code_of([&] { record_questionnaire(s, {1, {}}, a); }), Errc::sequencing);
  EXPECT_EQ(code_of([&] { record_questionnaire(s, {0, {{"age", "200"}}}, a); }), Errc::validation);
  EXPECT_EQ(code_of([&] { record_questionnaire(s, {0, {{"birth_area", "Mars"}}}, a); }),
            Errc::validation);
  EXPECT_EQ(code_of([&] { record_questionnaire(s, {0, {{"shoe_size", "4"}}}, a); }),
            Errc::validation);
  s = record_questionnaire(s, {0, {{"age", "40"}, {"birth_area", "South"}, {"gender", "1"}}}, a);
  const auto layout = questionnaire_layout();
  for (std::size_t p = 1; p < layout.page_names.size(); ++p) {
    const auto& item = layout.page_items[p][0];
    if (p == 1) {
      EXPECT_EQ(code_of([&] { record_questionnaire(s, {1, {{item, "7"}}}, a); }), Errc::validation);
    }
    s = record_questionnaire(s, {static_cast<int>(p), {{item, "3"}}}, a);
  }
  EXPECT_TRUE(is_complete(s));
  EXPECT_EQ(next_step(s, a).kind, StepKind::Done);
}

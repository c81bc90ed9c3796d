#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "sit/error.hpp"
#include "sit/iat.hpp"
#include "sit/rng.hpp"
#include "sit/scales.hpp"

namespace sit::flow {

struct ImageCard {
  std::string image_id;
  bool is_gender_stem = false;
  std::vector<std::string> tags;
  std::string path;

  bool operator==(const ImageCard&) const = default;
};

using ImagePool = std::vector<ImageCard>;

struct PoolRules {
  std::size_t pool_size = 100;
  std::size_t gender_stem = 6;
  std::size_t sampled_others = 14;

  std::size_t sequence_length() const { return gender_stem + sampled_others; }
};

inline void validate_pool(const ImagePool& pool, const PoolRules& rules = {}) {
  std::unordered_set<std::string> ids;
  std::size_t gender = 0;
  for (const auto& card : pool) {
    if (card.image_id.empty()) fail(Errc::validation, "image with empty id in pool");
    if (!ids.insert(card.image_id).second)
      fail(Errc::validation, "duplicate image id '" + card.image_id + "' in pool");
    if (card.is_gender_stem) ++gender;
  }
  if (pool.size() != rules.pool_size)
    fail(Errc::validation, "pool has " + std::to_string(pool.size()) + " images, expected " +
                               std::to_string(rules.pool_size));
  if (gender != rules.gender_stem)
    fail(Errc::validation, "pool has " + std::to_string(gender) +
                               " gender-STEM images, expected " +
                               std::to_string(rules.gender_stem));
  if (pool.size() - gender < rules.sampled_others)
    fail(Errc::validation, "pool has too few non-gender images to sample from");
}

enum class Framing { Info, InfoGuilt, NoFrame };

inline const char* to_string(Framing f) {
  switch (f) {
    case Framing::Info: return "info";
    case Framing::InfoGuilt: return "info_guilt";
    case Framing::NoFrame: return "no_frame";
  }
  return "";
}

inline Framing parse_framing(const std::string& s) {
  if (s == "info") return Framing::Info;
  if (s == "info_guilt") return Framing::InfoGuilt;
  if (s == "no_frame") return Framing::NoFrame;
  fail(Errc::parse, "unknown framing arm '" + s + "'");
}

struct FramingArm {
  Framing arm = Framing::NoFrame;
  std::string text;

  bool operator==(const FramingArm&) const = default;
};

inline FramingArm framing_arm(Framing arm) {
  switch (arm) {
    case Framing::Info:
      return {arm,
              "Stereotypes are cognitive shortcuts used by the brain to generate expectations "
              "about one's own or others' behaviour. Everyone has them and they don't always "
              "know it."};
    case Framing::InfoGuilt:
      return {arm,
              "Many studies show that school environments suffer from stereotypes of various "
              "kinds. Being exposed to negative stereotypes about one's group has an effect on "
              "self-confidence and performance."};
    case Framing::NoFrame:
      return {arm, ""};
  }
  return {};
}

struct SessionAssignment {
  std::string session_id;
  FramingArm framing;
  bool iat_first = false;
  std::vector<std::string> image_sequence;
  std::uint64_t seed = 0;

  bool operator==(const SessionAssignment&) const = default;
};

inline std::string session_id_for_seed(std::uint64_t seed) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(seed));
  return buf;
}

// Draw order on the seeded stream: framing arm, IAT position, the 14-image
// sample (partial Fisher-Yates over the non-gender images in pool order),
// then a full shuffle of the 20-image union.
inline SessionAssignment create_session(const ImagePool& pool, std::uint64_t seed,
                                        std::string session_id = {},
                                        const PoolRules& rules = {}) {
  validate_pool(pool, rules);
  Rng rng(seed);
  SessionAssignment a;
  a.seed = seed;
  a.session_id = session_id.empty() ? session_id_for_seed(seed) : std::move(session_id);
  a.framing = framing_arm(static_cast<Framing>(rng.below(3)));
  a.iat_first = rng.below(2) == 1;

  std::vector<std::string> others;
  for (const auto& card : pool) {
    if (card.is_gender_stem)
      a.image_sequence.push_back(card.image_id);
    else
      others.push_back(card.image_id);
  }
  for (std::size_t i = 0; i < rules.sampled_others; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(others.size() - i));
    std::swap(others[i], others[j]);
    a.image_sequence.push_back(others[i]);
  }
  rng.shuffle(std::span<std::string>(a.image_sequence));
  return a;
}

enum class Phase { Framing, TaskA, Checkpoint, TaskB, Questionnaire, Done };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Framing: return "framing";
    case Phase::TaskA: return "task_a";
    case Phase::Checkpoint: return "checkpoint";
    case Phase::TaskB: return "task_b";
    case Phase::Questionnaire: return "questionnaire";
    case Phase::Done: return "done";
  }
  return "";
}

enum class Task { Sit, Iat };

struct RatingEvent {
  std::string session_id;
  std::string image_id;
  int rating = 0;
  std::int64_t rating_time_ms = 0;

  bool operator==(const RatingEvent&) const = default;
};

struct CommentEvent {
  std::string session_id;
  std::string image_id;
  std::string text;
  std::int64_t comment_time_ms = 0;

  bool operator==(const CommentEvent&) const = default;
};

struct QuestionnairePage {
  int page = 0;
  std::map<std::string, std::string> answers;

  bool operator==(const QuestionnairePage&) const = default;
};

// Page 0 collects demographics; pages 1..6 one trait scale each.
struct QuestionnaireLayout {
  std::vector<std::string> page_names;
  std::vector<std::vector<std::string>> page_items;
};

inline QuestionnaireLayout questionnaire_layout(const std::vector<ScaleDefinition>& scales =
                                                    default_scales()) {
  QuestionnaireLayout q;
  q.page_names.push_back("demographics");
  q.page_items.emplace_back();
  for (const auto& d : demographic_questions()) q.page_items.back().push_back(d.id);
  for (const auto& s : scales) {
    q.page_names.push_back(s.key);
    q.page_items.emplace_back();
    for (std::size_t i = 0; i < s.size(); ++i) q.page_items.back().push_back(s.item_id(i));
  }
  return q;
}

struct FlowConfig {
  iat::Config iat;
  std::vector<ScaleDefinition> scales = default_scales();
};

// Everything a session has recorded so far, plus where it is.
struct SessionState {
  Phase phase = Phase::Framing;
  std::size_t cursor = 0;          // SIT image / IAT scored trial / questionnaire page
  bool awaiting_comment = false;   // SIT: rating for image `cursor` recorded
  bool awaiting_feedback = false;  // IAT-first: all trials in, feedback pending
  bool sit_done = false;
  bool iat_done = false;
  bool iat_revealed = false;

  std::vector<RatingEvent> ratings;
  std::vector<CommentEvent> comments;
  std::vector<iat::Trial> iat_trials;
  std::vector<QuestionnairePage> questionnaire;

  bool operator==(const SessionState&) const = default;
};

inline std::optional<Task> current_task(const SessionState& s, const SessionAssignment& a) {
  if (s.phase == Phase::TaskA) return a.iat_first ? Task::Iat : Task::Sit;
  if (s.phase == Phase::TaskB) return a.iat_first ? Task::Sit : Task::Iat;
  return std::nullopt;
}

enum class StepKind { FramingText, RateImage, CommentImage, IatBlock, IatFeedback, Checkpoint,
                      QuestionnairePage, Done };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::FramingText: return "framing";
    case StepKind::RateImage: return "rate_image";
    case StepKind::CommentImage: return "comment_image";
    case StepKind::IatBlock: return "iat_block";
    case StepKind::IatFeedback: return "iat_feedback";
    case StepKind::Checkpoint: return "checkpoint";
    case StepKind::QuestionnairePage: return "questionnaire_page";
    case StepKind::Done: return "done";
  }
  return "";
}

struct StepDescriptor {
  StepKind kind = StepKind::Done;
  std::string text;
  std::string image_id;
  std::size_t index = 0;  // image position, trial_index or page number
  std::optional<iat::BlockDescriptor> iat_block;
  std::optional<iat::BlockDescriptor> iat_practice;  // unscored block to run first
  std::string page_name;
  std::vector<std::string> page_items;
};

namespace detail {

inline std::size_t scored_trials_total(const iat::Config& cfg) {
  return 2 * static_cast<std::size_t>(cfg.scored_trials);
}

// Moves through non-interactive phases: a NoFrame framing phase and the
// checkpoint between the two tasks.
inline void settle(SessionState& s, const SessionAssignment& a) {
  if (s.phase == Phase::Framing && a.framing.arm == Framing::NoFrame) s.phase = Phase::TaskA;
  if (s.phase == Phase::Checkpoint) {
    s.phase = Phase::TaskB;
    s.cursor = 0;
  }
}

inline void finish_task(SessionState& s) {
  s.cursor = 0;
  if (s.phase == Phase::TaskA)
    s.phase = Phase::Checkpoint;
  else
    s.phase = Phase::Questionnaire;
}

inline void require_task(const SessionState& s, const SessionAssignment& a, Task t,
                         const char* what) {
  if (current_task(s, a) != t)
    fail(Errc::sequencing, std::string(what) + " not allowed in phase " + to_string(s.phase));
}

}  // namespace detail

inline SessionState start_session(const SessionAssignment& a) {
  SessionState s;
  detail::settle(s, a);
  return s;
}

inline StepDescriptor next_step(const SessionState& s, const SessionAssignment& a,
                                const FlowConfig& cfg = {}) {
  StepDescriptor d;
  switch (s.phase) {
    case Phase::Framing:
      d.kind = StepKind::FramingText;
      d.text = a.framing.text;
      return d;
    case Phase::Checkpoint:
      d.kind = StepKind::Checkpoint;
      return d;
    case Phase::Questionnaire: {
      const auto layout = questionnaire_layout(cfg.scales);
      d.kind = StepKind::QuestionnairePage;
      d.index = s.cursor;
      d.page_name = layout.page_names.at(s.cursor);
      d.page_items = layout.page_items.at(s.cursor);
      return d;
    }
    case Phase::Done:
      d.kind = StepKind::Done;
      return d;
    case Phase::TaskA:
    case Phase::TaskB:
      break;
  }
  if (*current_task(s, a) == Task::Sit) {
    d.kind = s.awaiting_comment ? StepKind::CommentImage : StepKind::RateImage;
    d.index = s.cursor;
    d.image_id = a.image_sequence.at(s.cursor);
    return d;
  }
  if (s.awaiting_feedback) {
    d.kind = StepKind::IatFeedback;
    return d;
  }
  const auto schedule = iat::schedule_blocks(a.seed, cfg.iat);
  const auto per_block = static_cast<std::size_t>(cfg.iat.scored_trials);
  const std::size_t block = s.cursor / per_block;  // 0 or 1 among scored blocks
  d.kind = StepKind::IatBlock;
  d.iat_block = schedule.at(2 * block + 1);
  if (s.cursor % per_block == 0) d.iat_practice = schedule.at(2 * block);
  d.index = s.cursor % per_block;
  return d;
}

inline SessionState acknowledge_framing(SessionState s, const SessionAssignment& a) {
  if (s.phase != Phase::Framing) fail(Errc::sequencing, "framing already passed");
  s.phase = Phase::TaskA;
  detail::settle(s, a);
  return s;
}

inline SessionState record_rating(SessionState s, const RatingEvent& e,
                                  const SessionAssignment& a) {
  if (e.session_id != a.session_id) fail(Errc::validation, "rating for another session");
  if (e.rating < 1 || e.rating > 5)
    fail(Errc::validation, "rating must be in 1..5, got " + std::to_string(e.rating));
  if (e.rating_time_ms < 0) fail(Errc::validation, "rating time must be non-negative");
  for (const auto& r : s.ratings)
    if (r.image_id == e.image_id)
      fail(Errc::immutability, "image '" + e.image_id + "' already rated");
  detail::require_task(s, a, Task::Sit, "rating");
  if (s.awaiting_comment)
    fail(Errc::sequencing, "comment for the current image is pending");
  if (a.image_sequence.at(s.cursor) != e.image_id)
    fail(Errc::sequencing, "expected rating for image '" + a.image_sequence.at(s.cursor) +
                               "', got '" + e.image_id + "'");
  s.ratings.push_back(e);
  s.awaiting_comment = true;
  return s;
}

inline SessionState record_comment(SessionState s, const CommentEvent& e,
                                   const SessionAssignment& a) {
  if (e.session_id != a.session_id) fail(Errc::validation, "comment for another session");
  if (e.comment_time_ms < 0) fail(Errc::validation, "comment time must be non-negative");
  detail::require_task(s, a, Task::Sit, "comment");
  if (!s.awaiting_comment || a.image_sequence.at(s.cursor) != e.image_id)
    fail(Errc::sequencing, "comment for '" + e.image_id + "' before its rating");
  s.comments.push_back(e);
  s.awaiting_comment = false;
  if (++s.cursor == a.image_sequence.size()) {
    s.sit_done = true;
    detail::finish_task(s);
    detail::settle(s, a);
  }
  return s;
}

// Scored trials arrive in schedule order: first scored block trial 0..n-1,
// then the second. The last trial closes the task, unless the session is
// IAT-first and the score is usable, in which case the feedback step opens.
inline SessionState record_iat_trial(SessionState s, const iat::Trial& t,
                                     const SessionAssignment& a, const FlowConfig& cfg = {}) {
  if (t.session_id != a.session_id) fail(Errc::validation, "IAT trial for another session");
  if (t.reaction_time_ms <= 0) fail(Errc::validation, "IAT reaction time must be positive");
  detail::require_task(s, a, Task::Iat, "IAT trial");
  if (s.awaiting_feedback) fail(Errc::sequencing, "IAT already complete");
  const auto step = next_step(s, a, cfg);
  if (t.block != step.iat_block->pairing || t.trial_index != static_cast<int>(step.index))
    fail(Errc::sequencing, "expected " + std::string(iat::to_string(step.iat_block->pairing)) +
                               " trial " + std::to_string(step.index));
  s.iat_trials.push_back(t);
  if (++s.cursor < detail::scored_trials_total(cfg.iat)) return s;

  const auto score = iat::score_trials(s.iat_trials, cfg.iat);
  if (a.iat_first && iat::render_feedback(score)) {
    s.awaiting_feedback = true;
    return s;
  }
  s.iat_done = true;
  detail::finish_task(s);
  detail::settle(s, a);
  return s;
}

inline SessionState record_feedback_shown(SessionState s, const SessionAssignment& a) {
  detail::require_task(s, a, Task::Iat, "IAT feedback");
  if (!s.awaiting_feedback) fail(Errc::sequencing, "IAT feedback is not available");
  s.awaiting_feedback = false;
  s.iat_revealed = true;
  s.iat_done = true;
  detail::finish_task(s);
  detail::settle(s, a);
  return s;
}

inline void validate_answers(const QuestionnairePage& page, const FlowConfig& cfg) {
  const auto layout = questionnaire_layout(cfg.scales);
  const auto& items = layout.page_items.at(static_cast<std::size_t>(page.page));
  for (const auto& [id, value] : page.answers) {
    if (std::find(items.begin(), items.end(), id) == items.end())
      fail(Errc::validation, "unknown question '" + id + "' on page " +
                                 std::to_string(page.page));
    if (page.page == 0) {
      const auto& qs = demographic_questions();
      const auto q = std::find_if(qs.begin(), qs.end(), [&](const auto& d) { return d.id == id; });
      if (q->kind == AnswerKind::Category) {
        if (std::find(q->categories.begin(), q->categories.end(), value) == q->categories.end())
          fail(Errc::validation, "invalid category '" + value + "' for " + id);
        continue;
      }
      int v = 0;
      try {
        std::size_t used = 0;
        v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        fail(Errc::validation, "non-integer answer for " + id);
      }
      if (v < q->lo || v > q->hi) fail(Errc::validation, "answer out of range for " + id);
      continue;
    }
    if (value != "1" && value != "2" && value != "3" && value != "4" && value != "5")
      fail(Errc::validation, "Likert answer must be 1..5 for " + id);
  }
}

inline SessionState record_questionnaire(SessionState s, const QuestionnairePage& page,
                                         const SessionAssignment&, const FlowConfig& cfg = {}) {
  if (s.phase != Phase::Questionnaire)
    fail(Errc::sequencing, std::string("questionnaire not allowed in phase ") +
                               to_string(s.phase));
  if (page.page != static_cast<int>(s.cursor))
    fail(Errc::sequencing, "expected questionnaire page " + std::to_string(s.cursor));
  validate_answers(page, cfg);
  s.questionnaire.push_back(page);
  if (++s.cursor == questionnaire_layout(cfg.scales).page_names.size()) {
    s.phase = Phase::Done;
    s.cursor = 0;
  }
  return s;
}

inline bool is_complete(const SessionState& s) { return s.phase == Phase::Done; }

}  // namespace sit::flow

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sit/basic_stats.hpp"
#include "sit/error.hpp"
#include "sit/rng.hpp"

namespace sit::iat {

enum class Pairing { Congruent, Incongruent };

inline const char* to_string(Pairing p) {
  return p == Pairing::Congruent ? "congruent" : "incongruent";
}

inline Pairing parse_pairing(const std::string& s) {
  if (s == "congruent") return Pairing::Congruent;
  if (s == "incongruent") return Pairing::Incongruent;
  fail(Errc::parse, "unknown IAT block '" + s + "'");
}

struct Trial {
  std::string session_id;
  Pairing block = Pairing::Congruent;
  int trial_index = 0;
  std::string stimulus_id;
  std::int64_t reaction_time_ms = 0;
  bool correct = true;

  bool operator==(const Trial&) const = default;
};

// Defaults: 10 practice + 20 scored trials per pairing; trials slower than
// 10 s are dropped; a respondent is excluded when more than 10% of trials
// are faster than 300 ms.
struct Config {
  int scored_trials = 20;
  int practice_trials = 10;
  std::int64_t max_rt_ms = 10'000;
  std::int64_t fast_rt_ms = 300;
  double max_fast_share = 0.10;
  bool sample_variance = true;
};

struct BlockDescriptor {
  int index = 0;
  Pairing pairing = Pairing::Congruent;
  bool scored = false;
  int n_trials = 0;

  bool operator==(const BlockDescriptor&) const = default;
};

// practice(first), scored(first), practice(second), scored(second); which
// pairing comes first is a fair coin on the seed.
inline std::vector<BlockDescriptor> schedule_blocks(std::uint64_t seed, const Config& cfg = {}) {
  if (cfg.scored_trials < 2 || cfg.practice_trials < 0)
    fail(Errc::validation, "IAT config: scored_trials must be >= 2");
  Rng rng(seed);
  const bool congruent_first = rng.below(2) == 0;
  const Pairing first = congruent_first ? Pairing::Congruent : Pairing::Incongruent;
  const Pairing second = congruent_first ? Pairing::Incongruent : Pairing::Congruent;
  return {
      {0, first, false, cfg.practice_trials},
      {1, first, true, cfg.scored_trials},
      {2, second, false, cfg.practice_trials},
      {3, second, true, cfg.scored_trials},
  };
}

inline std::vector<BlockDescriptor> scored_blocks(std::span<const BlockDescriptor> schedule) {
  std::vector<BlockDescriptor> out;
  for (const auto& b : schedule)
    if (b.scored) out.push_back(b);
  return out;
}

enum class ExclusionReason { TooManyFastTrials };

inline const char* to_string(ExclusionReason) { return "too_many_fast_trials"; }

struct TrialVerdict {
  std::vector<Trial> kept;
  std::size_t dropped_slow = 0;
  std::size_t fast = 0;
  double fast_share = 0.0;
  bool excluded = false;
  std::optional<ExclusionReason> reason;
};

inline TrialVerdict validate_trials(std::span<const Trial> trials, const Config& cfg = {}) {
  if (trials.empty()) fail(Errc::insufficient_data, "no IAT trials");
  std::set<std::pair<Pairing, int>> seen;
  TrialVerdict v;
  for (const auto& t : trials) {
    if (t.session_id != trials.front().session_id)
      fail(Errc::validation, "IAT trials span multiple sessions");
    if (t.reaction_time_ms <= 0) fail(Errc::validation, "IAT reaction time must be positive");
    if (t.trial_index < 0) fail(Errc::validation, "IAT trial_index must be non-negative");
    if (!seen.emplace(t.block, t.trial_index).second)
      fail(Errc::validation, "duplicate IAT trial_index " + std::to_string(t.trial_index) +
                                 " in " + to_string(t.block) + " block");
    if (t.reaction_time_ms < cfg.fast_rt_ms) ++v.fast;
    if (t.reaction_time_ms > cfg.max_rt_ms) {
      ++v.dropped_slow;
      continue;
    }
    v.kept.push_back(t);
  }
  v.fast_share = static_cast<double>(v.fast) / static_cast<double>(trials.size());
  if (v.fast_share > cfg.max_fast_share) {
    v.excluded = true;
    v.reason = ExclusionReason::TooManyFastTrials;
  }
  return v;
}

struct Score {
  double d_score = kNaN;
  double mean_congruent_ms = kNaN;
  double mean_incongruent_ms = kNaN;
  double var_congruent = kNaN;
  double var_incongruent = kNaN;
  int n_congruent = 0;
  int n_incongruent = 0;
  bool excluded = false;
  std::optional<ExclusionReason> exclusion_reason;
};

// Standardized mean difference: (mean_incongruent - mean_congruent) divided
// by the square root of the summed block variances. Positive means slower on
// incongruent pairings.
inline Score d_score(std::span<const double> congruent, std::span<const double> incongruent,
                     bool use_sample_variance = true) {
  if (congruent.size() < 2 || incongruent.size() < 2)
    fail(Errc::insufficient_data, "IAT scoring needs at least 2 kept trials per block");
  const int ddof = use_sample_variance ? 1 : 0;
  Score s;
  s.n_congruent = static_cast<int>(congruent.size());
  s.n_incongruent = static_cast<int>(incongruent.size());
  s.mean_congruent_ms = mean(congruent);
  s.mean_incongruent_ms = mean(incongruent);
  s.var_congruent = variance(congruent, ddof);
  s.var_incongruent = variance(incongruent, ddof);
  const double denom = std::sqrt(s.var_incongruent + s.var_congruent);
  if (!(denom > 0.0)) fail(Errc::degenerate, "IAT: zero variance in both blocks");
  s.d_score = (s.mean_incongruent_ms - s.mean_congruent_ms) / denom;
  return s;
}

inline Score compute_iat(std::span<const Trial> kept, bool use_sample_variance = true) {
  std::vector<double> con, inc;
  for (const auto& t : kept)
    (t.block == Pairing::Congruent ? con : inc).push_back(static_cast<double>(t.reaction_time_ms));
  return d_score(con, inc, use_sample_variance);
}

// validate + score. Excluded respondents get a Score with excluded=true and a
// NaN d_score rather than an exception.
inline Score score_trials(std::span<const Trial> trials, const Config& cfg = {}) {
  auto verdict = validate_trials(trials, cfg);
  if (verdict.excluded) {
    Score s;
    s.excluded = true;
    s.exclusion_reason = verdict.reason;
    return s;
  }
  return compute_iat(verdict.kept, cfg.sample_variance);
}

enum class Direction { StereotypeConsistent, CounterStereotypical, NoPreference };

inline const char* to_string(Direction d) {
  switch (d) {
    case Direction::StereotypeConsistent: return "stereotype_consistent";
    case Direction::CounterStereotypical: return "counter_stereotypical";
    case Direction::NoPreference: return "no_preference";
  }
  return "";
}

struct Feedback {
  double d_score = 0.0;
  Direction direction = Direction::NoPreference;
  std::string strength;  // slight / moderate / strong / none
  std::string summary;
  std::string computation;
  std::string stereotype;
};

// Conventional IAT magnitude bands on |d|.
inline std::string strength_label(double d) {
  const double a = std::fabs(d);
  if (a < 0.15) return "none";
  if (a < 0.35) return "slight";
  if (a < 0.65) return "moderate";
  return "strong";
}

// Returns nullopt for excluded scores: no feedback is shown and the session
// keeps its revelation flag false.
inline std::optional<Feedback> render_feedback(const Score& score) {
  if (score.excluded || std::isnan(score.d_score)) return std::nullopt;
  Feedback f;
  f.d_score = score.d_score;
  f.direction = score.d_score > 0.0   ? Direction::StereotypeConsistent
                : score.d_score < 0.0 ? Direction::CounterStereotypical
                                      : Direction::NoPreference;
  f.strength = strength_label(score.d_score);

  char buf[512];
  std::snprintf(buf, sizeof buf, "Your IAT score is %.2f.", score.d_score);
  f.summary = buf;
  switch (f.direction) {
    case Direction::StereotypeConsistent:
      f.summary += " You were faster when associating boys with STEM and girls with the "
                   "humanities, i.e. in the stereotype-consistent direction (" +
                   f.strength + " association).";
      break;
    case Direction::CounterStereotypical:
      f.summary += " You were faster when associating girls with STEM and boys with the "
                   "humanities, i.e. in the counter-stereotypical direction (" +
                   f.strength + " association).";
      break;
    case Direction::NoPreference:
      f.summary += " Your response times did not differ between the two pairings.";
      break;
  }
  std::snprintf(buf, sizeof buf,
                "The score is the difference between your average response time in the "
                "incongruent block (%.0f ms over %d trials) and in the congruent block "
                "(%.0f ms over %d trials), divided by the square root of the sum of the two "
                "blocks' response-time variances.",
                score.mean_incongruent_ms, score.n_incongruent, score.mean_congruent_ms,
                score.n_congruent);
  f.computation = buf;
  f.stereotype =
      "The test measures the implicit association between gender and academic fields: "
      "men with science, technology, engineering and mathematics (STEM), and women with "
      "the humanities.";
  return f;
}

}  // namespace sit::iat

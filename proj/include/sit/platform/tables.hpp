#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sit/iat.hpp"
#include "sit/platform/csv.hpp"
#include "sit/records.hpp"
#include "sit/survey_flow.hpp"
#include "sit/text.hpp"

namespace sit::platform {

// File layout of a data directory. Headers are fixed; see README.
//   pool.csv           image_id,is_gender_stem,tags,path          (tags '|'-separated)
//   sessions.csv       session_id,framing,iat_first,iat_revealed,seed,complete
//   ratings.csv        session_id,image_id,rating,rating_time_ms
//   comments.csv       session_id,image_id,text,comment_time_ms
//   iat_trials.csv     session_id,block,trial_index,stimulus_id,reaction_time_ms,correct
//   questionnaire.csv  session_id,question_id,answer
//   tokens.csv         comment_id,token_index,surface,lemma,pos
//   stance.csv         comment_id,annotator_id,subjective,stance
//   tag_probs.csv      tag,gender,race,social_origin,religion,disability,age
//   tag_overrides.csv  tag,characteristic (empty characteristic: not protected)
//   scores.csv         session_id,sit,gender_sit,iat_d,iat_rev,<six indices>,lexical_density,ttr
namespace headers {
inline const csv::Row pool = {"image_id", "is_gender_stem", "tags", "path"};
inline const csv::Row sessions = {"session_id", "framing",  "iat_first",
                                  "iat_revealed", "seed",   "complete"};
inline const csv::Row ratings = {"session_id", "image_id", "rating", "rating_time_ms"};
inline const csv::Row comments = {"session_id", "image_id", "text", "comment_time_ms"};
inline const csv::Row iat_trials = {"session_id",      "block",          "trial_index",
                                    "stimulus_id",     "reaction_time_ms", "correct"};
inline const csv::Row questionnaire = {"session_id", "question_id", "answer"};
inline const csv::Row tokens = {"comment_id", "token_index", "surface", "lemma", "pos"};
inline const csv::Row stance = {"comment_id", "annotator_id", "subjective", "stance"};
inline const csv::Row tag_probs = {"tag",      "gender",     "race", "social_origin",
                                   "religion", "disability", "age"};
inline const csv::Row tag_overrides = {"tag", "characteristic"};
}  // namespace headers

struct SessionRow {
  std::string session_id;
  flow::Framing framing = flow::Framing::NoFrame;
  bool iat_first = false;
  bool iat_revealed = false;
  std::uint64_t seed = 0;
  bool complete = false;

  bool operator==(const SessionRow&) const = default;
};

// Everything an analysis run reads. Any member may be empty when the
// corresponding file is absent.
struct Bundle {
  flow::ImagePool pool;
  std::vector<SessionRow> sessions;
  std::vector<flow::RatingEvent> ratings;
  std::vector<flow::CommentEvent> comments;
  std::vector<iat::Trial> iat_trials;
  std::vector<QuestionnaireAnswer> questionnaire;
  std::vector<TokenRow> tokens;
  std::vector<StanceRow> stance;
  std::vector<text::TagCategoryProbs> tag_probs;
};

inline Bundle bundle_from_sessions(const flow::ImagePool& pool,
                                   const std::vector<SessionRecord>& sessions) {
  Bundle b;
  b.pool = pool;
  for (const auto& [a, s] : sessions) {
    b.sessions.push_back({a.session_id, a.framing.arm, a.iat_first, s.iat_revealed, a.seed,
                          flow::is_complete(s)});
    b.ratings.insert(b.ratings.end(), s.ratings.begin(), s.ratings.end());
    b.comments.insert(b.comments.end(), s.comments.begin(), s.comments.end());
    b.iat_trials.insert(b.iat_trials.end(), s.iat_trials.begin(), s.iat_trials.end());
    for (const auto& page : s.questionnaire)
      for (const auto& [q, v] : page.answers) b.questionnaire.push_back({a.session_id, q, v});
  }
  return b;
}

// --- to CSV ------------------------------------------------------------------

inline csv::Table pool_table(const flow::ImagePool& pool) {
  csv::Table t{headers::pool, {}};
  for (const auto& c : pool) {
    std::string tags;
    for (const auto& tag : c.tags) {
      if (tag.find('|') != std::string::npos)
        fail(Errc::validation, "tag '" + tag + "' contains the '|' separator");
      tags += (tags.empty() ? "" : "|") + tag;
    }
    t.rows.push_back({c.image_id, c.is_gender_stem ? "1" : "0", tags, c.path});
  }
  return t;
}

inline csv::Table sessions_table(const std::vector<SessionRow>& rows) {
  csv::Table t{headers::sessions, {}};
  for (const auto& r : rows)
    t.rows.push_back({r.session_id, flow::to_string(r.framing), r.iat_first ? "1" : "0",
                      r.iat_revealed ? "1" : "0", std::to_string(r.seed),
                      r.complete ? "1" : "0"});
  return t;
}

inline csv::Table ratings_table(const std::vector<flow::RatingEvent>& rows) {
  csv::Table t{headers::ratings, {}};
  for (const auto& r : rows)
    t.rows.push_back({r.session_id, r.image_id, std::to_string(r.rating),
                      std::to_string(r.rating_time_ms)});
  return t;
}

inline csv::Table comments_table(const std::vector<flow::CommentEvent>& rows) {
  csv::Table t{headers::comments, {}};
  for (const auto& r : rows)
    t.rows.push_back({r.session_id, r.image_id, r.text, std::to_string(r.comment_time_ms)});
  return t;
}

inline csv::Table iat_trials_table(const std::vector<iat::Trial>& rows) {
  csv::Table t{headers::iat_trials, {}};
  for (const auto& r : rows)
    t.rows.push_back({r.session_id, iat::to_string(r.block), std::to_string(r.trial_index),
                      r.stimulus_id, std::to_string(r.reaction_time_ms), r.correct ? "1" : "0"});
  return t;
}

inline csv::Table questionnaire_table(const std::vector<QuestionnaireAnswer>& rows) {
  csv::Table t{headers::questionnaire, {}};
  for (const auto& r : rows) t.rows.push_back({r.session_id, r.question_id, r.value});
  return t;
}

inline csv::Table tokens_table(const std::vector<TokenRow>& rows) {
  csv::Table t{headers::tokens, {}};
  for (const auto& r : rows)
    t.rows.push_back({r.comment_id, std::to_string(r.token_index), r.token.surface,
                      r.token.lemma.value_or(""), text::to_string(r.token.pos)});
  return t;
}

inline csv::Table stance_table(const std::vector<StanceRow>& rows) {
  csv::Table t{headers::stance, {}};
  for (const auto& r : rows)
    t.rows.push_back({r.comment_id, r.annotator_id, r.subjective ? "1" : "0",
                      text::to_string(r.stance)});
  return t;
}

inline csv::Table tag_probs_table(const std::vector<text::TagCategoryProbs>& rows) {
  csv::Table t{headers::tag_probs, {}};
  for (const auto& r : rows) {
    csv::Row row{r.tag};
    for (auto c : text::kCharacteristics) {
      auto it = r.probs.find(c);
      row.push_back(it == r.probs.end() ? "0" : csv::format_double(it->second));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// --- from CSV ----------------------------------------------------------------

namespace detail {

inline void expect_header(const csv::Table& t, const csv::Row& h, const char* what) {
  if (t.header != h) {
    std::string want;
    for (const auto& c : h) want += (want.empty() ? "" : ",") + c;
    fail(Errc::parse, std::string(what) + ": header must be " + want);
  }
}

}  // namespace detail

inline flow::ImagePool parse_pool(const csv::Table& t) {
  detail::expect_header(t, headers::pool, "pool manifest");
  flow::ImagePool pool;
  for (const auto& r : t.rows) {
    flow::ImageCard c;
    c.image_id = r[0];
    c.is_gender_stem = csv::parse_bool(r[1]);
    std::size_t start = 0;
    while (!r[2].empty() && start <= r[2].size()) {
      const auto bar = r[2].find('|', start);
      const auto end = bar == std::string::npos ? r[2].size() : bar;
      c.tags.push_back(r[2].substr(start, end - start));
      start = end + 1;
    }
    c.path = r[3];
    pool.push_back(std::move(c));
  }
  return pool;
}

inline std::vector<SessionRow> parse_sessions(const csv::Table& t) {
  detail::expect_header(t, headers::sessions, "sessions");
  std::vector<SessionRow> out;
  for (const auto& r : t.rows) {
    SessionRow s;
    s.session_id = r[0];
    s.framing = flow::parse_framing(r[1]);
    s.iat_first = csv::parse_bool(r[2]);
    s.iat_revealed = csv::parse_bool(r[3]);
    try {
      s.seed = std::stoull(r[4]);
    } catch (const std::exception&) {
      fail(Errc::parse, "bad seed '" + r[4] + "'");
    }
    s.complete = csv::parse_bool(r[5]);
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<flow::RatingEvent> parse_ratings(const csv::Table& t) {
  detail::expect_header(t, headers::ratings, "ratings");
  std::vector<flow::RatingEvent> out;
  for (const auto& r : t.rows)
    out.push_back({r[0], r[1], static_cast<int>(csv::parse_int(r[2], "rating")),
                   csv::parse_int(r[3], "rating_time_ms")});
  return out;
}

inline std::vector<flow::CommentEvent> parse_comments(const csv::Table& t) {
  detail::expect_header(t, headers::comments, "comments");
  std::vector<flow::CommentEvent> out;
  for (const auto& r : t.rows)
    out.push_back({r[0], r[1], r[2], csv::parse_int(r[3], "comment_time_ms")});
  return out;
}

inline std::vector<iat::Trial> parse_iat_trials(const csv::Table& t) {
  detail::expect_header(t, headers::iat_trials, "iat_trials");
  std::vector<iat::Trial> out;
  for (const auto& r : t.rows)
    out.push_back({r[0], iat::parse_pairing(r[1]),
                   static_cast<int>(csv::parse_int(r[2], "trial_index")), r[3],
                   csv::parse_int(r[4], "reaction_time_ms"), csv::parse_bool(r[5])});
  return out;
}

inline std::vector<QuestionnaireAnswer> parse_questionnaire(const csv::Table& t) {
  detail::expect_header(t, headers::questionnaire, "questionnaire");
  std::vector<QuestionnaireAnswer> out;
  for (const auto& r : t.rows) out.push_back({r[0], r[1], r[2]});
  return out;
}

inline std::vector<TokenRow> parse_tokens(const csv::Table& t) {
  detail::expect_header(t, headers::tokens, "tokens");
  std::vector<TokenRow> out;
  for (const auto& r : t.rows) {
    TokenRow row;
    row.comment_id = r[0];
    row.token_index = static_cast<int>(csv::parse_int(r[1], "token_index"));
    row.token.surface = r[2];
    if (!r[3].empty()) row.token.lemma = r[3];
    row.token.pos = text::parse_pos(r[4]);
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<StanceRow> parse_stance(const csv::Table& t) {
  detail::expect_header(t, headers::stance, "stance");
  std::vector<StanceRow> out;
  for (const auto& r : t.rows)
    out.push_back({r[0], r[1], csv::parse_bool(r[2]), text::parse_stance(r[3])});
  return out;
}

inline std::vector<text::TagCategoryProbs> parse_tag_probs(const csv::Table& t) {
  detail::expect_header(t, headers::tag_probs, "tag_probs");
  std::vector<text::TagCategoryProbs> out;
  for (const auto& r : t.rows) {
    text::TagCategoryProbs p;
    p.tag = r[0];
    for (std::size_t c = 0; c < text::kCharacteristics.size(); ++c)
      p.probs[text::kCharacteristics[c]] = csv::parse_double(r[c + 1], "probability");
    out.push_back(std::move(p));
  }
  return out;
}

// Manual review verdicts that replace the automatic tag classification.
inline text::TagClassification parse_tag_overrides(const csv::Table& t) {
  detail::expect_header(t, headers::tag_overrides, "tag_overrides");
  text::TagClassification out;
  for (const auto& r : t.rows) {
    if (r[1].empty())
      out[r[0]] = std::nullopt;
    else
      out[r[0]] = text::parse_characteristic(r[1]);
  }
  return out;
}

// --- directories -------------------------------------------------------------

inline void write_bundle(const std::filesystem::path& dir, const Bundle& b) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const csv::Table& t) {
    csv::write_file((dir / name).string(), t);
  };
  put("pool.csv", pool_table(b.pool));
  put("sessions.csv", sessions_table(b.sessions));
  put("ratings.csv", ratings_table(b.ratings));
  put("comments.csv", comments_table(b.comments));
  put("iat_trials.csv", iat_trials_table(b.iat_trials));
  put("questionnaire.csv", questionnaire_table(b.questionnaire));
  put("tokens.csv", tokens_table(b.tokens));
  put("stance.csv", stance_table(b.stance));
  put("tag_probs.csv", tag_probs_table(b.tag_probs));
}

// Reads whichever files exist; ratings.csv is required.
inline Bundle read_bundle(const std::filesystem::path& dir) {
  Bundle b;
  auto get = [&](const char* name) -> std::optional<csv::Table> {
    const auto p = dir / name;
    if (!std::filesystem::exists(p)) return std::nullopt;
    return csv::read_file(p.string());
  };
  if (auto t = get("ratings.csv"))
    b.ratings = parse_ratings(*t);
  else
    fail(Errc::not_found, "no ratings.csv in " + dir.string());
  if (auto t = get("pool.csv")) b.pool = parse_pool(*t);
  if (auto t = get("sessions.csv")) b.sessions = parse_sessions(*t);
  if (auto t = get("comments.csv")) b.comments = parse_comments(*t);
  if (auto t = get("iat_trials.csv")) b.iat_trials = parse_iat_trials(*t);
  if (auto t = get("questionnaire.csv")) b.questionnaire = parse_questionnaire(*t);
  if (auto t = get("tokens.csv")) b.tokens = parse_tokens(*t);
  if (auto t = get("stance.csv")) b.stance = parse_stance(*t);
  if (auto t = get("tag_probs.csv")) b.tag_probs = parse_tag_probs(*t);
  return b;
}

}  // namespace sit::platform

#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "sit/iat.hpp"
#include "sit/platform/csv.hpp"
#include "sit/platform/tables.hpp"
#include "sit/regression.hpp"
#include "sit/reliability.hpp"
#include "sit/robustness.hpp"
#include "sit/scales.hpp"
#include "sit/sit_scoring.hpp"
#include "sit/synth.hpp"
#include "sit/text.hpp"
#include "sit/traits.hpp"

namespace sit::platform {

struct ScoreRow {
  std::string session_id;
  double sit = kNaN;
  double gender_sit = kNaN;
  double iat_d = kNaN;
  double iat_rev = kNaN;
  std::array<double, 6> traits = {kNaN, kNaN, kNaN, kNaN, kNaN, kNaN};  // kAllScales order
  double lexical_density = kNaN;
  double ttr = kNaN;
};

inline csv::Row scores_header() {
  csv::Row h = {"session_id", "sit", "gender_sit", "iat_d", "iat_rev"};
  for (const auto& c : trait_columns()) h.push_back(c);
  h.push_back("lexical_density");
  h.push_back("ttr");
  return h;
}

inline csv::Table scores_table(const std::vector<ScoreRow>& rows) {
  csv::Table t{scores_header(), {}};
  for (const auto& r : rows) {
    csv::Row row = {r.session_id, csv::format_double(r.sit), csv::format_double(r.gender_sit),
                    csv::format_double(r.iat_d), csv::format_double(r.iat_rev)};
    for (double v : r.traits) row.push_back(csv::format_double(v));
    row.push_back(csv::format_double(r.lexical_density));
    row.push_back(csv::format_double(r.ttr));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::vector<ScoreRow> parse_scores(const csv::Table& t) {
  detail::expect_header(t, scores_header(), "scores");
  std::vector<ScoreRow> out;
  for (const auto& r : t.rows) {
    ScoreRow s;
    s.session_id = r[0];
    s.sit = csv::parse_double(r[1]);
    s.gender_sit = csv::parse_double(r[2]);
    s.iat_d = csv::parse_double(r[3]);
    s.iat_rev = csv::parse_double(r[4]);
    for (std::size_t k = 0; k < 6; ++k) s.traits[k] = csv::parse_double(r[5 + k]);
    s.lexical_density = csv::parse_double(r[11]);
    s.ttr = csv::parse_double(r[12]);
    out.push_back(std::move(s));
  }
  return out;
}

struct ScoreOptions {
  iat::Config iat;
  SitOptions sit;
  std::vector<ScaleDefinition> scales = default_scales();
  TraitOptions traits;
  std::size_t ratings_per_session = 20;
};

// Sessions that enter scoring: complete sessions from the sessions table, or,
// when it is absent, every session with a full set of ratings.
inline std::vector<std::string> scored_sessions(const Bundle& b, const ScoreOptions& opt = {}) {
  std::vector<std::string> ids;
  if (!b.sessions.empty()) {
    for (const auto& s : b.sessions)
      if (s.complete) ids.push_back(s.session_id);
    return ids;
  }
  std::map<std::string, std::size_t> count;
  for (const auto& r : b.ratings)
    if (count[r.session_id]++ == 0) ids.push_back(r.session_id);
  std::erase_if(ids, [&](const auto& id) { return count[id] != opt.ratings_per_session; });
  return ids;
}

// Gender-STEM flags come from the pool manifest; without one, the images that
// every scored respondent rated are taken as the shared gender-STEM set.
inline RatingMatrix rating_matrix(const Bundle& b, const std::vector<std::string>& ids) {
  RatingMatrix m;
  const std::set<std::string> keep(ids.begin(), ids.end());
  std::map<std::string, std::size_t> raters;
  for (const auto& id : ids) m.add_respondent(id);
  for (const auto& r : b.ratings) {
    if (!keep.count(r.session_id)) continue;
    m.add(r.session_id, r.image_id, r.rating);
    ++raters[r.image_id];
  }
  if (!b.pool.empty()) {
    for (const auto& c : b.pool)
      if (c.is_gender_stem) m.set_gender_stem(c.image_id, true);
  } else {
    for (const auto& [img, n] : raters)
      if (n == ids.size()) m.set_gender_stem(img, true);
  }
  return m;
}

namespace detail {

inline std::vector<ResponseRow> response_rows(const Bundle& b, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> at;
  std::vector<ResponseRow> rows;
  for (const auto& id : ids) {
    at[id] = rows.size();
    rows.push_back({id, {}});
  }
  const auto demo = demographic_questions();
  std::set<std::string> demo_ids;
  for (const auto& q : demo) demo_ids.insert(q.id);
  for (const auto& a : b.questionnaire) {
    auto it = at.find(a.session_id);
    if (it == at.end() || demo_ids.count(a.question_id)) continue;
    rows[it->second].answers[a.question_id] =
        static_cast<int>(csv::parse_int(a.value, "Likert answer"));
  }
  return rows;
}

inline std::pair<std::string, std::string> split_comment_id(const std::string& cid) {
  const auto p = cid.rfind(':');
  if (p == std::string::npos) fail(Errc::parse, "comment id '" + cid + "' lacks ':'");
  return {cid.substr(0, p), cid.substr(p + 1)};
}

}  // namespace detail

// Lexical metrics per session over its gender-STEM comments, skipping
// single-character placeholders.
inline std::map<std::string, std::pair<double, double>> lexical_metrics(const Bundle& b) {
  std::set<std::string> gender;
  for (const auto& c : b.pool)
    if (c.is_gender_stem) gender.insert(c.image_id);
  std::map<std::string, std::vector<text::AnnotatedToken>> by_comment;
  for (const auto& t : b.tokens) by_comment[t.comment_id].push_back(t.token);
  std::map<std::string, std::vector<text::AnnotatedToken>> by_session;
  for (const auto& [cid, toks] : by_comment) {
    const auto [sid, img] = detail::split_comment_id(cid);
    if (!gender.empty() && !gender.count(img)) continue;
    std::string joined;
    for (const auto& t : toks) joined += t.surface;
    if (text::is_single_character(joined)) continue;
    auto& dst = by_session[sid];
    dst.insert(dst.end(), toks.begin(), toks.end());
  }
  std::map<std::string, std::pair<double, double>> out;
  for (const auto& [sid, toks] : by_session)
    if (!toks.empty()) out[sid] = {text::lexical_density(toks), text::type_token_ratio(toks)};
  return out;
}

inline std::vector<ScoreRow> score(const Bundle& b, const ScoreOptions& opt = {}) {
  const auto ids = scored_sessions(b, opt);
  if (ids.size() < 3) fail(Errc::insufficient_data, "fewer than 3 complete sessions to score");
  const auto m = rating_matrix(b, ids);
  const Demeaned d = loo_demean(m);

  std::vector<ScoreRow> rows(ids.size());
  {
    auto all = tilde_scores(m, d, ImageSubset::All);
    standardize_scores(all, opt.sit);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      rows[i].session_id = ids[i];
      rows[i].sit = all[i].standardized;
    }
    bool any_gender = false;
    for (std::size_t j = 0; j < m.n_images(); ++j) any_gender |= m.is_gender_stem(j);
    if (any_gender) {
      auto g = tilde_scores(m, d, ImageSubset::GenderStemOnly);
      standardize_scores(g, opt.sit);
      for (std::size_t i = 0; i < ids.size(); ++i) rows[i].gender_sit = g[i].standardized;
    }
  }

  std::unordered_map<std::string, std::size_t> at;
  for (std::size_t i = 0; i < ids.size(); ++i) at[ids[i]] = i;

  std::vector<std::vector<iat::Trial>> trials(ids.size());
  for (const auto& t : b.iat_trials)
    if (auto it = at.find(t.session_id); it != at.end()) trials[it->second].push_back(t);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (trials[i].empty()) continue;
    const auto s = iat::score_trials(trials[i], opt.iat);
    rows[i].iat_d = s.excluded ? kNaN : s.d_score;
  }

  for (const auto& s : b.sessions)
    if (auto it = at.find(s.session_id); it != at.end())
      rows[it->second].iat_rev = s.iat_revealed ? 1.0 : 0.0;

  if (!b.questionnaire.empty()) {
    const auto resp = detail::response_rows(b, ids);
    for (const auto& def : opt.scales) {
      const auto k = static_cast<std::size_t>(def.scale);
      const auto idx = trait_index(resp, def, opt.traits);
      for (std::size_t i = 0; i < idx.respondent_ids.size(); ++i)
        rows[at.at(idx.respondent_ids[i])].traits[k] = idx.values[i];
    }
  }

  for (const auto& [sid, metrics] : lexical_metrics(b))
    if (auto it = at.find(sid); it != at.end()) {
      rows[it->second].lexical_density = metrics.first;
      rows[it->second].ttr = metrics.second;
    }
  return rows;
}

// Regression-ready table: scores, the robustness outcomes, framing and the
// socio-demographic answers, one row per scored session.
inline DataTable analysis_table(const Bundle& b, const ScoreOptions& opt = {}) {
  const auto rows = score(b, opt);
  std::vector<std::string> ids;
  for (const auto& r : rows) ids.push_back(r.session_id);
  DataTable t(ids);
  auto numeric = [&](const std::string& name, auto get) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(get(r));
    t.add_numeric(name, std::move(v));
  };
  numeric("sit", [](const ScoreRow& r) { return r.sit; });
  numeric("gender_sit", [](const ScoreRow& r) { return r.gender_sit; });
  numeric("iat_d", [](const ScoreRow& r) { return r.iat_d; });
  numeric("iat_rev", [](const ScoreRow& r) { return r.iat_rev; });
  for (std::size_t k = 0; k < 6; ++k)
    numeric(trait_columns()[k], [k](const ScoreRow& r) { return r.traits[k]; });
  numeric("lexical_density", [](const ScoreRow& r) { return r.lexical_density; });
  numeric("ttr", [](const ScoreRow& r) { return r.ttr; });

  // small cohorts can leave an image with one distinct rating; the robustness
  // outcomes are then missing and only the models that use them fail
  std::vector<double> sit_sd(ids.size(), kNaN), sit_factor(ids.size(), kNaN);
  try {
    const auto rob = robustness_scores(rating_matrix(b, ids), opt.sit);
    sit_sd = rob.sd_adjusted;
    sit_factor = rob.factor;
  } catch (const Error& e) {
    if (e.code() != Errc::degenerate) throw;
  }
  t.add_numeric("sit_sd", std::move(sit_sd));
  t.add_numeric("sit_factor", std::move(sit_factor));

  std::unordered_map<std::string, std::size_t> at;
  for (std::size_t i = 0; i < ids.size(); ++i) at[ids[i]] = i;

  std::vector<std::string> framing(ids.size());
  for (const auto& s : b.sessions)
    if (auto it = at.find(s.session_id); it != at.end())
      framing[it->second] = flow::to_string(s.framing);
  t.add_categorical("framing", framing, {"info", "info_guilt", "no_frame"});

  for (const auto& q : demographic_questions()) {
    std::vector<std::string> raw(ids.size());
    for (const auto& a : b.questionnaire)
      if (a.question_id == q.id)
        if (auto it = at.find(a.session_id); it != at.end()) raw[it->second] = a.value;
    if (q.kind == AnswerKind::Category) {
      t.add_categorical(q.id, raw, q.categories);
    } else {
      std::vector<double> v;
      for (const auto& s : raw) v.push_back(csv::parse_double(s, q.id.c_str()));
      t.add_numeric(q.id, std::move(v));
    }
  }
  return t;
}

// Reliability exports: one row per kept draw, and a one-row summary.
inline csv::Table reliability_draws_table(const ReliabilityReport& r) {
  csv::Table t{{"draw_index", "coefficient"}, {}};
  for (std::size_t i = 0; i < r.coefficients.size(); ++i)
    t.rows.push_back({std::to_string(r.draw_index[i]), csv::format_double(r.coefficients[i])});
  return t;
}

inline csv::Table reliability_summary_table(const ReliabilityReport& r) {
  csv::Table t{{"mode", "subset", "seed", "n_draws", "n_skipped", "mean", "q025", "q975"}, {}};
  t.rows.push_back({to_string(r.mode), r.subset == ImageSubset::All ? "all" : "gender_stem",
                    std::to_string(r.seed), std::to_string(r.n_draws),
                    std::to_string(r.n_skipped), csv::format_double(r.mean),
                    csv::format_double(r.q025), csv::format_double(r.q975)});
  return t;
}

inline csv::Table iat_scores_table(const std::vector<iat::Trial>& trials,
                                   const iat::Config& cfg = {}) {
  csv::Table t{{"session_id", "d_score", "mean_congruent_ms", "mean_incongruent_ms",
                "n_congruent", "n_incongruent", "excluded", "exclusion_reason"},
               {}};
  std::vector<std::string> order;
  std::map<std::string, std::vector<iat::Trial>> by;
  for (const auto& tr : trials) {
    auto& v = by[tr.session_id];
    if (v.empty()) order.push_back(tr.session_id);
    v.push_back(tr);
  }
  for (const auto& sid : order) {
    const auto s = iat::score_trials(by[sid], cfg);
    t.rows.push_back({sid, csv::format_double(s.d_score), csv::format_double(s.mean_congruent_ms),
                      csv::format_double(s.mean_incongruent_ms), std::to_string(s.n_congruent),
                      std::to_string(s.n_incongruent), s.excluded ? "1" : "0",
                      s.exclusion_reason ? iat::to_string(*s.exclusion_reason) : ""});
  }
  return t;
}

inline Bundle to_bundle(const synth::Dataset& ds) {
  auto b = bundle_from_sessions(ds.pool, ds.sessions);
  b.tokens = ds.tokens;
  b.stance = ds.stance;
  b.tag_probs = ds.tag_probs;
  return b;
}

}  // namespace sit::platform

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sit/error.hpp"
#include "sit/iat.hpp"
#include "sit/platform/pipeline.hpp"
#include "sit/platform/tables.hpp"
#include "sit/records.hpp"
#include "sit/rng.hpp"
#include "sit/survey_flow.hpp"

namespace sit::platform {

using json = nlohmann::ordered_json;

enum class EventKind {
  Assigned,
  FramingAcknowledged,
  Rated,
  Commented,
  IatTrial,
  IatFeedbackShown,
  QuestionnaireAnswered,
  Completed
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Assigned: return "Assigned";
    case EventKind::FramingAcknowledged: return "FramingAcknowledged";
    case EventKind::Rated: return "Rated";
    case EventKind::Commented: return "Commented";
    case EventKind::IatTrial: return "IatTrial";
    case EventKind::IatFeedbackShown: return "IatFeedbackShown";
    case EventKind::QuestionnaireAnswered: return "QuestionnaireAnswered";
    case EventKind::Completed: return "Completed";
  }
  return "";
}

inline EventKind parse_event_kind(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(EventKind::Completed); ++k)
    if (s == to_string(static_cast<EventKind>(k))) return static_cast<EventKind>(k);
  fail(Errc::parse, "unknown event kind '" + s + "'");
}

struct EventRecord {
  std::uint64_t event_id = 0;
  std::string session_id;
  EventKind kind = EventKind::Assigned;
  json payload = json::object();
  std::int64_t server_ts = 0;  // ms since the Unix epoch

  bool operator==(const EventRecord&) const = default;
};

inline std::string to_line(const EventRecord& e) {
  json j;
  j["event_id"] = e.event_id;
  j["session_id"] = e.session_id;
  j["kind"] = to_string(e.kind);
  j["payload"] = e.payload;
  j["server_ts"] = e.server_ts;
  return j.dump();
}

inline EventRecord parse_line(const std::string& line) {
  try {
    const auto j = json::parse(line);
    EventRecord e;
    e.event_id = j.at("event_id").get<std::uint64_t>();
    e.session_id = j.at("session_id").get<std::string>();
    e.kind = parse_event_kind(j.at("kind").get<std::string>());
    e.payload = j.at("payload");
    e.server_ts = j.at("server_ts").get<std::int64_t>();
    return e;
  } catch (const json::exception& ex) {
    fail(Errc::parse, std::string("bad event record: ") + ex.what());
  }
}

// --- payload codecs ----------------------------------------------------------

inline json to_json(const flow::SessionAssignment& a) {
  return {{"session_id", a.session_id},
          {"framing", flow::to_string(a.framing.arm)},
          {"framing_text", a.framing.text},
          {"iat_first", a.iat_first},
          {"image_sequence", a.image_sequence},
          {"seed", a.seed}};
}

inline json to_json(const flow::StepDescriptor& d) {
  json j = {{"kind", flow::to_string(d.kind)}, {"index", d.index}};
  if (!d.text.empty()) j["text"] = d.text;
  if (!d.image_id.empty()) j["image_id"] = d.image_id;
  auto block = [](const iat::BlockDescriptor& b) {
    return json{{"index", b.index},
                {"pairing", iat::to_string(b.pairing)},
                {"scored", b.scored},
                {"n_trials", b.n_trials}};
  };
  if (d.iat_block) j["iat_block"] = block(*d.iat_block);
  if (d.iat_practice) j["iat_practice"] = block(*d.iat_practice);
  if (!d.page_name.empty()) {
    j["page_name"] = d.page_name;
    j["page_items"] = d.page_items;
  }
  return j;
}

inline json to_json(const iat::Feedback& f) {
  return {{"d_score", f.d_score},           {"direction", iat::to_string(f.direction)},
          {"strength", f.strength},         {"summary", f.summary},
          {"computation", f.computation},   {"stereotype", f.stereotype}};
}

namespace detail {

template <class T>
T field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name))
    fail(Errc::validation, std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    fail(Errc::validation, std::string("field '") + name + "' has the wrong type");
  }
}

inline void only_fields(const json& j, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(Errc::validation, "request body must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= k == a;
    if (!ok) fail(Errc::validation, "unexpected field '" + k + "'");
  }
}

}  // namespace detail

inline flow::RatingEvent rating_from_json(const std::string& sid, const json& j) {
  detail::only_fields(j, {"image_id", "rating", "rating_time_ms"});
  return {sid, detail::field<std::string>(j, "image_id"), detail::field<int>(j, "rating"),
          detail::field<std::int64_t>(j, "rating_time_ms")};
}

inline json to_json(const flow::RatingEvent& e) {
  return {{"image_id", e.image_id}, {"rating", e.rating}, {"rating_time_ms", e.rating_time_ms}};
}

inline flow::CommentEvent comment_from_json(const std::string& sid, const json& j) {
  detail::only_fields(j, {"image_id", "text", "comment_time_ms"});
  return {sid, detail::field<std::string>(j, "image_id"), detail::field<std::string>(j, "text"),
          detail::field<std::int64_t>(j, "comment_time_ms")};
}

inline json to_json(const flow::CommentEvent& e) {
  return {{"image_id", e.image_id}, {"text", e.text}, {"comment_time_ms", e.comment_time_ms}};
}

inline iat::Trial trial_from_json(const std::string& sid, const json& j) {
  detail::only_fields(j, {"block", "trial_index", "stimulus_id", "reaction_time_ms", "correct"});
  iat::Trial t;
  t.session_id = sid;
  try {
    t.block = iat::parse_pairing(detail::field<std::string>(j, "block"));
  } catch (const Error& e) {
    fail(Errc::validation, e.what());
  }
  t.trial_index = detail::field<int>(j, "trial_index");
  t.stimulus_id = detail::field<std::string>(j, "stimulus_id");
  t.reaction_time_ms = detail::field<std::int64_t>(j, "reaction_time_ms");
  t.correct = detail::field<bool>(j, "correct");
  return t;
}

inline json to_json(const iat::Trial& t) {
  return {{"block", iat::to_string(t.block)},
          {"trial_index", t.trial_index},
          {"stimulus_id", t.stimulus_id},
          {"reaction_time_ms", t.reaction_time_ms},
          {"correct", t.correct}};
}

inline flow::QuestionnairePage page_from_json(const json& j) {
  detail::only_fields(j, {"page", "answers"});
  flow::QuestionnairePage p;
  p.page = detail::field<int>(j, "page");
  const auto answers = detail::field<json>(j, "answers");
  if (!answers.is_object()) fail(Errc::validation, "answers must be an object");
  for (const auto& [k, v] : answers.items()) {
    if (v.is_string())
      p.answers[k] = v.get<std::string>();
    else if (v.is_number_integer())
      p.answers[k] = std::to_string(v.get<long long>());
    else
      fail(Errc::validation, "answer for '" + k + "' must be a string or integer");
  }
  return p;
}

inline json to_json(const flow::QuestionnairePage& p) {
  json answers = json::object();
  for (const auto& [k, v] : p.answers) answers[k] = v;
  return {{"page", p.page}, {"answers", answers}};
}

// --- engine ------------------------------------------------------------------

struct EngineOptions {
  flow::FlowConfig flow;
  std::uint64_t seed = 0;  // master seed; session i gets derive_seed(seed, i)
  std::function<std::int64_t()> clock = [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
};

// Owns the sessions of one deployment. Every accepted operation is appended
// to the log before the in-memory state changes; a rejected operation leaves
// both untouched. Writes to one session are serialized by its own mutex.
class Engine {
 public:
  explicit Engine(flow::ImagePool pool, std::optional<std::filesystem::path> log_path = {},
                  EngineOptions opt = {})
      : pool_(std::move(pool)), log_path_(std::move(log_path)), opt_(std::move(opt)) {
    flow::validate_pool(pool_);
    if (log_path_ && std::filesystem::exists(*log_path_)) replay_file(*log_path_);
    if (log_path_) log_.open(*log_path_, std::ios::app | std::ios::binary);
  }

  // Rebuilds an engine from a log without writing to it.
  static std::unique_ptr<Engine> replay(flow::ImagePool pool,
                                        const std::vector<EventRecord>& events,
                                        EngineOptions opt = {}) {
    auto e = std::make_unique<Engine>(std::move(pool), std::nullopt, std::move(opt));
    for (const auto& ev : events) e->apply(ev);
    return e;
  }

  const flow::ImagePool& pool() const { return pool_; }
  const flow::FlowConfig& flow_config() const { return opt_.flow; }

  flow::SessionAssignment create_session(std::optional<std::uint64_t> seed = {}) {
    std::lock_guard lock(map_mu_);
    const auto s = seed ? *seed : derive_seed(opt_.seed, entries_.size());
    auto a = flow::create_session(pool_, s);
    if (index_.count(a.session_id))
      fail(Errc::immutability, "session " + a.session_id + " already exists");
    append(a.session_id, EventKind::Assigned, to_json(a));
    add_session(a);
    return a;
  }

  flow::StepDescriptor next(const std::string& sid) const {
    auto& e = entry(sid);
    std::lock_guard lock(e.mu);
    return flow::next_step(e.rec.state, e.rec.assignment, opt_.flow);
  }

  SessionRecord session(const std::string& sid) const {
    auto& e = entry(sid);
    std::lock_guard lock(e.mu);
    return e.rec;
  }

  std::uint64_t acknowledge_framing(const std::string& sid) {
    return mutate(sid, EventKind::FramingAcknowledged, json::object(), [&](auto& s, auto& a) {
      return flow::acknowledge_framing(s, a);
    });
  }

  std::uint64_t rate(const flow::RatingEvent& e) {
    return mutate(e.session_id, EventKind::Rated, to_json(e),
                  [&](auto& s, auto& a) { return flow::record_rating(s, e, a); });
  }

  std::uint64_t comment(const flow::CommentEvent& e) {
    return mutate(e.session_id, EventKind::Commented, to_json(e),
                  [&](auto& s, auto& a) { return flow::record_comment(s, e, a); });
  }

  std::uint64_t iat_trial(const iat::Trial& t) {
    return mutate(t.session_id, EventKind::IatTrial, to_json(t),
                  [&](auto& s, auto& a) { return flow::record_iat_trial(s, t, a, opt_.flow); });
  }

  // Feedback exists only once the IAT is complete in an IAT-first session.
  // The first successful call records that the respondent saw it.
  iat::Feedback feedback(const std::string& sid) {
    auto& e = entry(sid);
    std::lock_guard lock(e.mu);
    const auto& [a, s] = e.rec;
    if (!a.iat_first) fail(Errc::sequencing, "IAT feedback is shown only in IAT-first sessions");
    if (!s.awaiting_feedback && !s.iat_revealed)
      fail(Errc::sequencing, "IAT not complete or no usable score");
    const auto fb = iat::render_feedback(iat::score_trials(s.iat_trials, opt_.flow.iat));
    if (!fb) fail(Errc::sequencing, "no usable IAT score");
    if (!s.iat_revealed) {
      auto next = flow::record_feedback_shown(s, a);
      append(sid, EventKind::IatFeedbackShown, json::object());
      e.rec.state = std::move(next);
    }
    return *fb;
  }

  std::uint64_t questionnaire(const std::string& sid, const flow::QuestionnairePage& page) {
    auto& e = entry(sid);
    std::lock_guard lock(e.mu);
    auto next = flow::record_questionnaire(e.rec.state, page, e.rec.assignment, opt_.flow);
    const auto id = append(sid, EventKind::QuestionnaireAnswered, to_json(page));
    if (flow::is_complete(next)) append(sid, EventKind::Completed, json::object());
    e.rec.state = std::move(next);
    return id;
  }

  std::vector<SessionRecord> sessions() const {
    std::lock_guard lock(map_mu_);
    std::vector<SessionRecord> out;
    for (const auto& e : entries_) {
      std::lock_guard l(e->mu);
      out.push_back(e->rec);
    }
    return out;
  }

  Bundle bundle() const { return bundle_from_sessions(pool_, sessions()); }

  std::vector<ScoreRow> scores(const ScoreOptions& opt = {}) const {
    auto o = opt;
    o.iat = opt_.flow.iat;
    o.scales = opt_.flow.scales;
    return score(bundle(), o);
  }

  std::vector<EventRecord> events() const {
    std::lock_guard lock(log_mu_);
    return events_;
  }

  // Applies a logged event to the in-memory state, checking it against the
  // survey flow exactly as the live operation would.
  void apply(const EventRecord& ev) {
    {
      std::lock_guard lock(log_mu_);
      if (!events_.empty() && ev.event_id <= events_.back().event_id)
        fail(Errc::sequencing, "event ids must increase");
    }
    const auto& p = ev.payload;
    const auto& sid = ev.session_id;
    if (ev.kind == EventKind::Assigned) {
      std::lock_guard lock(map_mu_);
      const auto seed = detail::field<std::uint64_t>(p, "seed");
      auto a = flow::create_session(pool_, seed, sid);
      if (to_json(a) != p) fail(Errc::validation, "assignment does not match its seed");
      if (index_.count(sid)) fail(Errc::immutability, "session " + sid + " assigned twice");
      add_session(a);
    } else {
      auto& e = entry(sid);
      std::lock_guard lock(e.mu);
      auto& [a, s] = e.rec;
      switch (ev.kind) {
        case EventKind::FramingAcknowledged: s = flow::acknowledge_framing(s, a); break;
        case EventKind::Rated: s = flow::record_rating(s, rating_from_json(sid, p), a); break;
        case EventKind::Commented: s = flow::record_comment(s, comment_from_json(sid, p), a); break;
        case EventKind::IatTrial:
          s = flow::record_iat_trial(s, trial_from_json(sid, p), a, opt_.flow);
          break;
        case EventKind::IatFeedbackShown: s = flow::record_feedback_shown(s, a); break;
        case EventKind::QuestionnaireAnswered:
          s = flow::record_questionnaire(s, page_from_json(p), a, opt_.flow);
          break;
        case EventKind::Completed:
          if (!flow::is_complete(s)) fail(Errc::sequencing, "Completed before the last page");
          break;
        case EventKind::Assigned: break;
      }
    }
    std::lock_guard lock(log_mu_);
    events_.push_back(ev);
  }

 private:
  struct Entry {
    SessionRecord rec;
    mutable std::mutex mu;
  };

  Entry& entry(const std::string& sid) const {
    std::lock_guard lock(map_mu_);
    auto it = index_.find(sid);
    if (it == index_.end()) fail(Errc::not_found, "unknown session '" + sid + "'");
    return *entries_[it->second];
  }

  void add_session(const flow::SessionAssignment& a) {
    auto e = std::make_unique<Entry>();
    e->rec.assignment = a;
    e->rec.state = flow::start_session(a);
    index_[a.session_id] = entries_.size();
    entries_.push_back(std::move(e));
  }

  template <class F>
  std::uint64_t mutate(const std::string& sid, EventKind kind, json payload, F&& step) {
    auto& e = entry(sid);
    std::lock_guard lock(e.mu);
    auto next = step(e.rec.state, e.rec.assignment);
    const auto id = append(sid, kind, std::move(payload));
    e.rec.state = std::move(next);
    return id;
  }

  std::uint64_t append(const std::string& sid, EventKind kind, json payload) {
    std::lock_guard lock(log_mu_);
    EventRecord ev;
    ev.event_id = events_.empty() ? 1 : events_.back().event_id + 1;
    ev.session_id = sid;
    ev.kind = kind;
    ev.payload = std::move(payload);
    ev.server_ts = opt_.clock();
    if (log_.is_open()) {
      log_ << to_line(ev) << '\n';
      log_.flush();
      if (!log_) fail(Errc::validation, "event log write failed");
    }
    events_.push_back(std::move(ev));
    return events_.back().event_id;
  }

  void replay_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        apply(parse_line(line));
      } catch (const Error& e) {
        fail(e.code(), path.string() + ":" + std::to_string(n) + ": " + e.what());
      }
    }
  }

  flow::ImagePool pool_;
  std::optional<std::filesystem::path> log_path_;
  EngineOptions opt_;
  std::ofstream log_;
  mutable std::mutex map_mu_;
  mutable std::mutex log_mu_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::unique_ptr<Entry>> entries_;
  std::vector<EventRecord> events_;
};

inline std::vector<EventRecord> read_log(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::not_found, "cannot open " + path.string());
  std::vector<EventRecord> out;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(parse_line(line));
  return out;
}

}  // namespace sit::platform

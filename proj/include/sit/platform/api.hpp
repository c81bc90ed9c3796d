#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>

#include <nlohmann/json.hpp>

#include "sit/error.hpp"
#include "sit/platform/csv.hpp"
#include "sit/platform/engine.hpp"
#include "sit/platform/pipeline.hpp"
#include "sit/platform/tables.hpp"

namespace sit::platform {

inline constexpr const char* kApiSchema = "sit.v1";

struct Request {
  std::string method;
  std::string path;
  std::string body;
  std::map<std::string, std::string> headers;  // lower-case names
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  bool operator==(const Response&) const = default;
};

inline int http_status(Errc c) {
  switch (c) {
    case Errc::validation: return 422;
    case Errc::parse: return 400;
    case Errc::not_found: return 404;
    case Errc::sequencing:
    case Errc::immutability:
    case Errc::insufficient_data:
    case Errc::degenerate: return 409;
    default: return 500;
  }
}

// Transport-free request router. POSTs carrying an Idempotency-Key are
// answered once; retries with the same key get the stored response. The key
// store is appended to `idempotency_path` when given, so retries survive a
// restart.
class Api {
 public:
  explicit Api(Engine& engine, std::optional<std::filesystem::path> idempotency_path = {})
      : engine_(engine), idem_path_(std::move(idempotency_path)) {
    if (idem_path_ && std::filesystem::exists(*idem_path_)) {
      std::ifstream is(*idem_path_, std::ios::binary);
      std::string line;
      while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = json::parse(line);
        idem_[j.at("key").get<std::string>()] = {
            j.at("body_hash").get<std::string>(),
            {j.at("status").get<int>(), j.at("body").get<std::string>(),
             j.at("content_type").get<std::string>()}};
      }
    }
    if (idem_path_) idem_log_.open(*idem_path_, std::ios::app | std::ios::binary);
  }

  Response handle(const Request& req) {
    auto key_it = req.headers.find("idempotency-key");
    if (req.method != "POST" || key_it == req.headers.end() || key_it->second.empty())
      return dispatch(req);

    std::lock_guard lock(idem_mu_);
    const auto key = req.method + " " + req.path + " " + key_it->second;
    const auto hash = std::to_string(std::hash<std::string>{}(req.body));
    if (auto it = idem_.find(key); it != idem_.end()) {
      if (it->second.first != hash)
        return error(422, "idempotency_conflict", "key reused with a different body");
      return it->second.second;
    }
    auto resp = dispatch(req);
    if (resp.status < 500) {
      idem_[key] = {hash, resp};
      if (idem_log_.is_open()) {
        json j = {{"key", key},
                  {"body_hash", hash},
                  {"status", resp.status},
                  {"body", resp.body},
                  {"content_type", resp.content_type}};
        idem_log_ << j.dump() << '\n';
        idem_log_.flush();
      }
    }
    return resp;
  }

 private:
  static Response ok(json body, int status = 200) {
    json out = {{"schema", kApiSchema}};
    for (auto& [k, v] : body.items()) out[k] = v;
    return {status, out.dump(), "application/json"};
  }

  static Response error(int status, const std::string& code, const std::string& msg) {
    json out = {{"schema", kApiSchema}, {"error", code}, {"message", msg}};
    return {status, out.dump(), "application/json"};
  }

  static json parse_body(const Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::exception& e) {
      fail(Errc::parse, std::string("malformed JSON: ") + e.what());
    }
  }

  Response dispatch(const Request& req) {
    try {
      return route(req);
    } catch (const Error& e) {
      return error(http_status(e.code()), to_string(e.code()), e.what());
    } catch (const std::exception& e) {
      return error(500, "internal", e.what());
    }
  }

  Response route(const Request& req) {
    static const std::regex session_re(R"(^/sessions/([A-Za-z0-9_-]+)(/.*)?$)");
    static const std::regex export_re(R"(^/export/([a-z_]+)\.csv$)");
    const auto& m = req.method;
    std::smatch match;

    if (req.path == "/sessions") {
      if (m != "POST") return error(405, "method_not_allowed", m + " /sessions");
      const auto body = parse_body(req);
      detail::only_fields(body, {"seed"});
      std::optional<std::uint64_t> seed;
      if (body.contains("seed")) seed = detail::field<std::uint64_t>(body, "seed");
      const auto a = engine_.create_session(seed);
      return ok({{"assignment", to_json(a)}, {"next", to_json(engine_.next(a.session_id))}}, 201);
    }
    if (std::regex_match(req.path, match, export_re)) {
      if (m != "GET") return error(405, "method_not_allowed", m + " " + req.path);
      return {200, export_table(match[1]), "text/csv; charset=utf-8"};
    }
    if (!std::regex_match(req.path, match, session_re))
      return error(404, "not_found", "no route for " + req.path);
    const std::string sid = match[1];
    const std::string rest = match[2];

    auto step_after = [&](std::uint64_t id) {
      return ok({{"event_id", id}, {"next", to_json(engine_.next(sid))}});
    };
    if (m == "GET" && rest.empty()) {
      const auto rec = engine_.session(sid);
      return ok({{"assignment", to_json(rec.assignment)},
                 {"phase", flow::to_string(rec.state.phase)},
                 {"complete", flow::is_complete(rec.state)}});
    }
    if (m == "GET" && rest == "/next") return ok({{"next", to_json(engine_.next(sid))}});
    if (m == "POST" && rest == "/framing") {
      detail::only_fields(parse_body(req), {});
      return step_after(engine_.acknowledge_framing(sid));
    }
    if (m == "POST" && rest == "/ratings")
      return step_after(engine_.rate(rating_from_json(sid, parse_body(req))));
    if (m == "POST" && rest == "/comments")
      return step_after(engine_.comment(comment_from_json(sid, parse_body(req))));
    if (m == "POST" && rest == "/iat/trials")
      return step_after(engine_.iat_trial(trial_from_json(sid, parse_body(req))));
    if (m == "GET" && rest == "/iat/feedback") {
      const auto fb = engine_.feedback(sid);
      return ok({{"feedback", to_json(fb)}, {"next", to_json(engine_.next(sid))}});
    }
    if (m == "POST" && rest == "/questionnaire")
      return step_after(engine_.questionnaire(sid, page_from_json(parse_body(req))));
    return error(404, "not_found", "no route for " + m + " " + req.path);
  }

  std::string export_table(const std::string& name) {
    const auto b = engine_.bundle();
    if (name == "ratings") return csv::to_string(ratings_table(b.ratings));
    if (name == "comments") return csv::to_string(comments_table(b.comments));
    if (name == "iat_trials") return csv::to_string(iat_trials_table(b.iat_trials));
    if (name == "questionnaire") return csv::to_string(questionnaire_table(b.questionnaire));
    if (name == "sessions") return csv::to_string(sessions_table(b.sessions));
    if (name == "pool") return csv::to_string(pool_table(b.pool));
    if (name == "scores") return csv::to_string(scores_table(engine_.scores()));
    fail(Errc::not_found, "unknown export table '" + name + "'");
  }

  Engine& engine_;
  std::optional<std::filesystem::path> idem_path_;
  std::ofstream idem_log_;
  std::mutex idem_mu_;
  std::map<std::string, std::pair<std::string, Response>> idem_;
};

}  // namespace sit::platform

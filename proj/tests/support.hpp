#pragma once

#include <Eigen/Dense>

#include <cstdio>
#include <string>
#include <vector>

#include "sit/platform/api.hpp"
#include "sit/platform/engine.hpp"
#include "sit/rng.hpp"
#include "sit/survey_flow.hpp"

namespace sit::testing {

inline flow::ImagePool make_pool(std::size_t n = 100, std::size_t gender = 6) {
  flow::ImagePool pool;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "img%03zu", i + 1);
    pool.push_back({id, i < gender, {"tag" + std::to_string(i % 7), "shared"}, ""});
  }
  return pool;
}

// n x k items from x = loading * f + sqrt(1 - loading^2) * e.
inline Eigen::MatrixXd one_factor_items(std::size_t n, std::size_t k, double loading,
                                        std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  const double u = std::sqrt(1.0 - loading * loading);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double f = rng.normal();
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = loading * f + u * rng.normal();
  }
  return x;
}

inline platform::Request req(std::string method, std::string path, std::string body = {},
                             std::map<std::string, std::string> headers = {}) {
  return {std::move(method), std::move(path), std::move(body), std::move(headers)};
}

// Plays one respondent through the HTTP surface until the session is done,
// choosing answers from `rng`. Returns the session id.
inline std::string drive_session(platform::Api& api, Rng& rng,
                                 std::optional<std::uint64_t> seed = {}) {
  using platform::json;
  const std::string create_body = seed ? json{{"seed", *seed}}.dump() : "";
  auto resp = api.handle(req("POST", "/sessions", create_body));
  if (resp.status != 201) throw std::runtime_error("create failed: " + resp.body);
  auto j = json::parse(resp.body);
  const std::string sid = j["assignment"]["session_id"];
  const std::string base = "/sessions/" + sid;
  json next = j["next"];
  int guard = 0;
  while (next["kind"] != "done") {
    if (++guard > 500) throw std::runtime_error("session did not finish");
    const std::string kind = next["kind"];
    platform::Response r;
    if (kind == "framing") {
      r = api.handle(req("POST", base + "/framing", "{}"));
    } else if (kind == "rate_image") {
      r = api.handle(req("POST", base + "/ratings",
                         json{{"image_id", next["image_id"]},
                              {"rating", 1 + static_cast<int>(rng.below(5))},
                              {"rating_time_ms", 2000 + static_cast<int>(rng.below(8000))}}
                             .dump()));
    } else if (kind == "comment_image") {
      r = api.handle(req("POST", base + "/comments",
                         json{{"image_id", next["image_id"]},
                              {"text", rng.bernoulli(0.2) ? "" : "una bambina con un libro"},
                              {"comment_time_ms", 3000}}
                             .dump()));
    } else if (kind == "iat_block") {
      const bool congruent = next["iat_block"]["pairing"] == "congruent";
      const double base_rt = congruent ? 700.0 : 820.0;
      r = api.handle(req("POST", base + "/iat/trials",
                         json{{"block", next["iat_block"]["pairing"]},
                              {"trial_index", next["index"]},
                              {"stimulus_id", "w" + std::to_string(next["index"].get<int>())},
                              {"reaction_time_ms",
                               static_cast<std::int64_t>(base_rt + rng.normal(0.0, 120.0))},
                              {"correct", true}}
                             .dump()));
    } else if (kind == "iat_feedback") {
      r = api.handle(req("GET", base + "/iat/feedback"));
    } else if (kind == "questionnaire_page") {
      json answers = json::object();
      for (const auto& item : next["page_items"]) {
        const std::string id = item;
        if (next["index"] == 0) {
          if (id == "age")
            answers[id] = "45";
          else if (id == "like_teaching")
            answers[id] = "6";
          else if (id == "birth_area")
            answers[id] = birth_areas()[rng.below(5)];
          else
            answers[id] = std::to_string(rng.below(2));
        } else {
          answers[id] = std::to_string(1 + rng.below(5));
        }
      }
      r = api.handle(req("POST", base + "/questionnaire",
                         json{{"page", next["index"]}, {"answers", answers}}.dump()));
    } else {
      throw std::runtime_error("unexpected step " + kind);
    }
    if (r.status != 200) throw std::runtime_error(kind + " failed: " + r.body);
    next = json::parse(r.body)["next"];
  }
  return sid;
}

}  // namespace sit::testing

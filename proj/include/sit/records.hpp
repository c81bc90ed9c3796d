#pragma once

#include <string>

#include "sit/survey_flow.hpp"
#include "sit/text.hpp"

namespace sit {

// A session as the platform sees it: the assignment and everything recorded.
struct SessionRecord {
  flow::SessionAssignment assignment;
  flow::SessionState state;

  bool operator==(const SessionRecord&) const = default;
};

struct QuestionnaireAnswer {
  std::string session_id;
  std::string question_id;
  std::string value;

  bool operator==(const QuestionnaireAnswer&) const = default;
};

// One POS-annotated token of a comment; comment ids are "<session_id>:<image_id>".
struct TokenRow {
  std::string comment_id;
  int token_index = 0;
  text::AnnotatedToken token;

  bool operator==(const TokenRow&) const = default;
};

struct StanceRow {
  std::string comment_id;
  std::string annotator_id;
  bool subjective = true;
  text::Stance stance = text::Stance::Neutral;

  bool operator==(const StanceRow&) const = default;
};

inline std::string comment_id(const std::string& session_id, const std::string& image_id) {
  return session_id + ":" + image_id;
}

}  // namespace sit

#pragma once

#include <stdexcept>
#include <string>

namespace sit {

enum class Errc {
  validation,
  sequencing,
  immutability,
  insufficient_data,
  degenerate,
  rank_deficient,
  calibration,
  not_found,
  parse,
};

inline const char* to_string(Errc e) {
  switch (e) {
    case Errc::validation: return "validation";
    case Errc::sequencing: return "sequencing";
    case Errc::immutability: return "immutability";
    case Errc::insufficient_data: return "insufficient_data";
    case Errc::degenerate: return "degenerate";
    case Errc::rank_deficient: return "rank_deficient";
    case Errc::calibration: return "calibration";
    case Errc::not_found: return "not_found";
    case Errc::parse: return "parse";
  }
  return "unknown";
}

// Every failure in the library surfaces as sit::Error carrying a category,
// so callers (CLI, HTTP layer) can map it to exit codes / status codes.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace sit

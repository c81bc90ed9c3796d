#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sit/basic_stats.hpp"
#include "sit/error.hpp"
#include "sit/survey_flow.hpp"

namespace sit::text {

// Universal Dependencies coarse tags; anything unrecognised maps to OTHER.
enum class Pos { NOUN, VERB, ADJ, ADV, PROPN, PRON, DET, ADP, AUX, CCONJ, SCONJ, NUM, PART,
                 INTJ, PUNCT, SYM, X, OTHER };

inline Pos parse_pos(const std::string& s) {
  static const std::map<std::string, Pos> table = {
      {"NOUN", Pos::NOUN}, {"VERB", Pos::VERB},   {"ADJ", Pos::ADJ},     {"ADV", Pos::ADV},
      {"PROPN", Pos::PROPN}, {"PRON", Pos::PRON}, {"DET", Pos::DET},     {"ADP", Pos::ADP},
      {"AUX", Pos::AUX},   {"CCONJ", Pos::CCONJ}, {"SCONJ", Pos::SCONJ}, {"NUM", Pos::NUM},
      {"PART", Pos::PART}, {"INTJ", Pos::INTJ},   {"PUNCT", Pos::PUNCT}, {"SYM", Pos::SYM},
      {"X", Pos::X}};
  auto it = table.find(s);
  return it == table.end() ? Pos::OTHER : it->second;
}

inline const char* to_string(Pos p) {
  static constexpr std::array<const char*, 18> names = {
      "NOUN", "VERB",  "ADJ", "ADV",  "PROPN", "PRON",  "DET", "ADP", "AUX",
      "CCONJ", "SCONJ", "NUM", "PART", "INTJ", "PUNCT", "SYM", "X",   "OTHER"};
  return names[static_cast<std::size_t>(p)];
}

inline bool is_content_word(Pos p) {
  return p == Pos::NOUN || p == Pos::VERB || p == Pos::ADJ || p == Pos::ADV;
}

struct AnnotatedToken {
  std::string surface;
  std::optional<std::string> lemma;
  Pos pos = Pos::OTHER;

  bool operator==(const AnnotatedToken&) const = default;
};

// ASCII lower-casing plus the Latin-1 uppercase block in UTF-8 (U+00C0..U+00DE
// except U+00D7), which covers accented Italian capitals.
inline std::string case_fold(std::string s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      s[i] = static_cast<char>(std::tolower(c));
    } else if (c == 0xC3 && i + 1 < s.size()) {
      const auto d = static_cast<unsigned char>(s[i + 1]);
      if (d >= 0x80 && d <= 0x9E && d != 0x97) s[i + 1] = static_cast<char>(d + 0x20);
      ++i;
    }
  }
  return s;
}

// Whitespace split, ASCII punctuation removed, case-folded, empties dropped.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(case_fold(std::move(cur)));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return out;
}

inline std::size_t utf8_length(const std::string& s) {
  std::size_t n = 0;
  for (char ch : s)
    if ((static_cast<unsigned char>(ch) & 0xC0) != 0x80) ++n;
  return n;
}

// Comments made of a single character (after trimming) are left out of the
// lexical metrics.
inline bool is_single_character(const std::string& text) {
  const auto b = text.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return false;
  const auto e = text.find_last_not_of(" \t\r\n");
  return utf8_length(text.substr(b, e - b + 1)) == 1;
}

inline double type_token_ratio(std::span<const AnnotatedToken> tokens) {
  if (tokens.empty()) fail(Errc::insufficient_data, "type/token ratio of an empty text");
  std::set<std::string> types;
  for (const auto& t : tokens) {
    if (t.surface.empty()) fail(Errc::validation, "token with empty surface");
    types.insert(case_fold(t.surface));
  }
  return static_cast<double>(types.size()) / static_cast<double>(tokens.size());
}

inline double lexical_density(std::span<const AnnotatedToken> tokens) {
  if (tokens.empty()) fail(Errc::insufficient_data, "lexical density of an empty text");
  const auto content = std::count_if(tokens.begin(), tokens.end(),
                                     [](const auto& t) { return is_content_word(t.pos); });
  return static_cast<double>(content) / static_cast<double>(tokens.size());
}

// Counts over case-folded words, highest first, ties in lexicographic order.
// top_k = 0 returns every word.
inline std::vector<std::pair<std::string, std::size_t>> word_frequencies(
    const std::vector<std::vector<std::string>>& corpus, std::size_t top_k = 0) {
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus)
    for (const auto& w : doc) ++counts[case_fold(w)];
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (top_k > 0 && out.size() > top_k) out.resize(top_k);
  return out;
}

enum class Stance { Against, Neutral, Pro };

inline int stance_value(Stance s) {
  switch (s) {
    case Stance::Against: return 1;
    case Stance::Neutral: return 3;
    case Stance::Pro: return 5;
  }
  return 0;
}

inline const char* to_string(Stance s) {
  switch (s) {
    case Stance::Against: return "against";
    case Stance::Neutral: return "neutral";
    case Stance::Pro: return "pro";
  }
  return "";
}

inline Stance parse_stance(const std::string& s) {
  const auto f = case_fold(s);
  if (f == "against") return Stance::Against;
  if (f == "neutral") return Stance::Neutral;
  if (f == "pro") return Stance::Pro;
  fail(Errc::parse, "unknown stance '" + s + "'");
}

struct StanceAnnotation {
  std::string comment_id;
  bool subjective = true;
  Stance stance = Stance::Neutral;
  std::string annotator_id;
};

// One annotated comment matched with the rating it explains.
struct StanceObservation {
  std::string respondent_id;
  Stance stance = Stance::Neutral;
  int rating = 0;
};

struct RespondentStance {
  std::string respondent_id;
  double mean_stance = 0.0;
  double mean_rating = 0.0;
  std::size_t n = 0;
};

struct StanceSummary {
  std::vector<RespondentStance> respondents;  // first-appearance order
  double correlation = kNaN;                  // mean stance vs mean rating
  std::map<Stance, double> mean_rating_by_stance;
};

inline StanceSummary stance_aggregate(std::span<const StanceObservation> obs) {
  if (obs.empty()) fail(Errc::insufficient_data, "no stance observations");
  StanceSummary out;
  std::map<std::string, std::size_t> index;
  std::map<Stance, std::pair<double, std::size_t>> by_stance;
  for (const auto& o : obs) {
    if (o.rating < 1 || o.rating > 5) fail(Errc::validation, "rating must be in 1..5");
    auto [it, inserted] = index.emplace(o.respondent_id, out.respondents.size());
    if (inserted) out.respondents.push_back({o.respondent_id, 0.0, 0.0, 0});
    auto& r = out.respondents[it->second];
    r.mean_stance += stance_value(o.stance);
    r.mean_rating += o.rating;
    ++r.n;
    by_stance[o.stance].first += o.rating;
    ++by_stance[o.stance].second;
  }
  std::vector<double> s, rt;
  for (auto& r : out.respondents) {
    r.mean_stance /= static_cast<double>(r.n);
    r.mean_rating /= static_cast<double>(r.n);
    s.push_back(r.mean_stance);
    rt.push_back(r.mean_rating);
  }
  for (const auto& [st, acc] : by_stance)
    out.mean_rating_by_stance[st] = acc.first / static_cast<double>(acc.second);
  out.correlation = pearson(s, rt);
  return out;
}

enum class Characteristic { Gender, Race, SocialOrigin, Religion, Disability, Age };

inline constexpr std::array<Characteristic, 6> kCharacteristics = {
    Characteristic::Gender,   Characteristic::Race,       Characteristic::SocialOrigin,
    Characteristic::Religion, Characteristic::Disability, Characteristic::Age};

inline const char* to_string(Characteristic c) {
  switch (c) {
    case Characteristic::Gender: return "gender";
    case Characteristic::Race: return "race";
    case Characteristic::SocialOrigin: return "social origin";
    case Characteristic::Religion: return "religion";
    case Characteristic::Disability: return "disability";
    case Characteristic::Age: return "age";
  }
  return "";
}

inline Characteristic parse_characteristic(const std::string& s) {
  const auto f = case_fold(s);
  for (auto c : kCharacteristics)
    if (f == to_string(c)) return c;
  if (f == "social_origin") return Characteristic::SocialOrigin;
  fail(Errc::parse, "unknown protected characteristic '" + s + "'");
}

struct TagCategoryProbs {
  std::string tag;
  std::map<Characteristic, double> probs;
};

using TagClassification = std::map<std::string, std::optional<Characteristic>>;

// A tag belongs to the category whose probability strictly exceeds the
// threshold; otherwise it is unclassified. Overrides (manual review) replace
// the automatic verdict for the listed tags.
inline TagClassification classify_tags(std::span<const TagCategoryProbs> probs,
                                       double threshold = 0.5,
                                       const TagClassification& overrides = {}) {
  if (threshold < 0.5)
    fail(Errc::validation, "threshold below 0.5 does not guarantee a unique category");
  TagClassification out;
  for (const auto& t : probs) {
    std::optional<Characteristic> pick;
    for (const auto& [c, p] : t.probs) {
      if (!(p >= 0.0 && p <= 1.0))
        fail(Errc::validation, "probability outside [0,1] for tag '" + t.tag + "'");
      if (p > threshold) pick = c;
    }
    out[case_fold(t.tag)] = pick;
  }
  for (const auto& [tag, verdict] : overrides) out[case_fold(tag)] = verdict;
  return out;
}

struct ImageTagStats {
  std::string image_id;
  std::size_t n_tags = 0;
  std::size_t n_protected = 0;
  std::size_t n_characteristics = 0;
  std::set<Characteristic> characteristics;
  double proportion = 0.0;  // n_protected / n_tags; 0 for untagged images
  bool no_tags = false;
};

struct Range {
  double mean = kNaN, min = kNaN, max = kNaN;
};

struct PoolTagStats {
  std::vector<ImageTagStats> images;
  std::vector<std::string> untagged;          // images with no tags at all
  std::vector<std::string> without_protected;  // includes untagged images
  Range tags_per_image;                        // over tagged images
  // over images with at least one protected-characteristic tag:
  Range protected_per_image;
  Range characteristics_per_image;
  Range proportion;
  std::map<Characteristic, std::size_t> images_per_characteristic;
};

namespace detail {
inline Range range_of(const std::vector<double>& v) {
  if (v.empty()) return {};
  return {mean(v), *std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
}
}  // namespace detail

inline PoolTagStats image_tag_stats(const flow::ImagePool& pool, const TagClassification& tags) {
  PoolTagStats out;
  std::vector<double> n_tags, n_prot, n_char, prop;
  for (const auto& card : pool) {
    ImageTagStats s;
    s.image_id = card.image_id;
    s.n_tags = card.tags.size();
    s.no_tags = card.tags.empty();
    for (const auto& tag : card.tags) {
      auto it = tags.find(case_fold(tag));
      if (it == tags.end() || !it->second) continue;
      ++s.n_protected;
      s.characteristics.insert(*it->second);
    }
    s.n_characteristics = s.characteristics.size();
    s.proportion = s.n_tags ? static_cast<double>(s.n_protected) / s.n_tags : 0.0;
    if (s.no_tags) {
      out.untagged.push_back(s.image_id);
    } else {
      n_tags.push_back(static_cast<double>(s.n_tags));
    }
    if (s.n_protected == 0) {
      out.without_protected.push_back(s.image_id);
    } else {
      n_prot.push_back(static_cast<double>(s.n_protected));
      n_char.push_back(static_cast<double>(s.n_characteristics));
      prop.push_back(s.proportion);
    }
    for (auto c : s.characteristics) ++out.images_per_characteristic[c];
    out.images.push_back(std::move(s));
  }
  out.tags_per_image = detail::range_of(n_tags);
  out.protected_per_image = detail::range_of(n_prot);
  out.characteristics_per_image = detail::range_of(n_char);
  out.proportion = detail::range_of(prop);
  return out;
}

}  // namespace sit::text

#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sit/error.hpp"

namespace sit {

enum class Scale {
  GrowthMindset,
  ImplicitBiasAwareness,
  GenderStemStereotypes,
  LocusOfControl,
  SocialValues,
  InclusiveTeaching,
};

inline constexpr std::array<Scale, 6> kAllScales = {
    Scale::GrowthMindset,  Scale::ImplicitBiasAwareness, Scale::GenderStemStereotypes,
    Scale::LocusOfControl, Scale::SocialValues,          Scale::InclusiveTeaching,
};

// Item answers are keyed "<key>_<1-based item number>" in questionnaire files.
struct ScaleDefinition {
  Scale scale;
  std::string key;
  std::string label;
  std::vector<std::string> item_prompts;
  std::set<int> reverse_keyed;  // 0-based item indices, scored as 6 - x

  std::string item_id(std::size_t i) const { return key + "_" + std::to_string(i + 1); }
  std::size_t size() const { return item_prompts.size(); }
};

// Reverse keying is configuration. The shipped defaults orient every index so
// that higher values mean more of the named trait: growth (not fixed)
// mindset, more awareness, more stereotyped gender-STEM beliefs, more
// internal locus of control, more progressive values, more inclusive practice.
inline std::vector<ScaleDefinition> default_scales() {
  return {
      {Scale::GrowthMindset,
       "growth_mindset",
       "Growth Mindset",
       {"Everyone has a certain level of intelligence and cannot do much to change it.",
        "I like challenging training courses so I can learn new things.",
        "Intelligence is a personal trait that cannot be changed much.",
        "I like using what I learn in training courses in my classroom lessons.",
        "You can learn new things, but you cannot change your intelligence."},
       {0, 2, 4}},
      {Scale::ImplicitBiasAwareness,
       "implicit_bias_awareness",
       "Implicit Bias Awareness",
       {"The way teaching is shaped in schools can contribute to reinforcing conscious or "
        "unconscious biases.",
        "It is important to address the issue of biases and inequalities in daily teaching "
        "activities.",
        "In my daily teaching activities, I often address issues related to inequality.",
        "I feel that I have the necessary tools to address the issue of biases and "
        "inequalities in my teaching practice."},
       {}},
      {Scale::GenderStemStereotypes,
       "gender_stem_stereotypes",
       "Gender-STEM Stereotypes",
       {"Girls are naturally better than male students in humanities subjects.",
        "Male students are naturally better than female students in scientific and "
        "mathematical subjects.",
        "Propensity for foreign language communication is typical of girls.",
        "Boys need more time than girls to understand complex or abstract concepts.",
        "More needs to be done to encourage female students to engage in STEM disciplines.",
        "Male students are more undisciplined than female students."},
       {4}},
      {Scale::LocusOfControl,
       "locus_of_control",
       "Locus of Control",
       {"If I put enough effort and time into it, I can implement a new teaching strategy "
        "even with students who are disinclined to learn new things.",
        "When a student gets a better grade than usual generally it is because they have "
        "studied more, not because I have tried to explain the lesson better.",
        "If one day I find myself scolding a student more often than usual, it is probably "
        "because I was a little less tolerant that day, not because that student was "
        "behaving worse than usual.",
        "When a student is able to learn a new concept quickly, it is probably because the "
        "student was able to understand it, not because I was able to explain it better.",
        "When a new student fails to make friends with his classmates, it is probably "
        "because I have not encouraged other students enough to be nicer to the newcomer."},
       {1, 3}},
      {Scale::SocialValues,
       "social_values",
       "Social Values",
       {"When jobs are scarce, men have more right than women to have jobs.",
        "When work is scarce, employees should give priority to locals over immigrants.",
        "That a woman earns more than her husband can cause problems.",
        "Homosexual parents are just as good as heterosexual parents.",
        "It is a duty to society to have children.",
        "Children in adulthood have an obligation to ensure long-term support for their "
        "parents.",
        "People who do not work are lazy.",
        "Work is a duty towards society.",
        "Work should always be a priority, even if it means having less free time."},
       {0, 1, 2, 4, 5, 6, 7, 8}},
      {Scale::InclusiveTeaching,
       "inclusive_teaching",
       "Inclusive Teaching",
       {"Critical thinking development activities.", "Oral exam.",
        "Cooperative / Collaborative teaching.",
        "Sharing learning objectives before the lesson begins.", "Summative assessment tests."},
       {}},
  };
}

inline const ScaleDefinition& scale_definition(const std::vector<ScaleDefinition>& defs,
                                               Scale s) {
  for (const auto& d : defs)
    if (d.scale == s) return d;
  fail(Errc::not_found, "scale not configured");
}

enum class AnswerKind { Binary, Integer, Likert5, Likert7, Category };

struct DemographicQuestion {
  std::string id;
  AnswerKind kind;
  int lo = 0;
  int hi = 0;
  std::vector<std::string> categories;
};

inline const std::vector<std::string>& birth_areas() {
  static const std::vector<std::string> areas = {"Center",    "NorthEast", "NorthWest",
                                                 "South",     "Island",    "Missing"};
  return areas;
}

inline const std::vector<DemographicQuestion>& demographic_questions() {
  static const std::vector<DemographicQuestion> qs = {
      {"gender", AnswerKind::Binary, 0, 1, {}},
      {"age", AnswerKind::Integer, 18, 99, {}},
      {"like_teaching", AnswerKind::Likert7, 1, 7, {}},
      {"master", AnswerKind::Binary, 0, 1, {}},
      {"disability_training", AnswerKind::Binary, 0, 1, {}},
      {"married", AnswerKind::Binary, 0, 1, {}},
      {"teaching_italian", AnswerKind::Binary, 0, 1, {}},
      {"teaching_maths", AnswerKind::Binary, 0, 1, {}},
      {"birth_area", AnswerKind::Category, 0, 0, birth_areas()},
  };
  return qs;
}

}  // namespace sit

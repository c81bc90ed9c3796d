#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "sit/error.hpp"
#include "sit/iat.hpp"
#include "sit/parallel.hpp"
#include "sit/records.hpp"
#include "sit/rng.hpp"
#include "sit/scales.hpp"
#include "sit/survey_flow.hpp"
#include "sit/text.hpp"

namespace sit::synth {

struct DemographicsModel {
  double female_share = 0.845;
  double age_mu = 52.6;  // parameters of the normal that is clipped to [age_min, age_max]
  double age_sigma = 10.2;
  int age_min = 25;
  int age_max = 69;
  // like-teaching answers 1..7
  std::array<double, 7> like_teaching_probs = {0.005, 0.005, 0.01, 0.045, 0.08, 0.28, 0.575};
  double master_share = 0.813;
  double disability_training_share = 0.235;
  double married_share = 0.666;
  double teaching_italian_share = 0.427;
  double teaching_maths_share = 0.176;
  // Center, NorthEast, NorthWest, South, Island, Missing (birth_areas() order)
  std::array<double, 6> birth_area_probs = {0.143, 0.179, 0.301, 0.199, 0.099, 0.079};
};

// Latent rating model: y_ij = b_j + loading * theta_i + noise_sd * e_ij,
// discretized at `thresholds` to 1..5. theta_i combines trait effects, an
// independent part, the framing effect of the respondent's arm and, for
// respondents who saw their IAT feedback before the SIT, `iat_effect`.
struct CohortSpec {
  std::size_t n_respondents = 614;
  double latent_sensitivity_loading = 0.6;
  double noise_sd = 0.4;
  double image_effect_sd = 1.0;
  std::array<double, 4> thresholds = {-0.9795, -0.4499, 0.0817, 0.6190};  // ~23% ones, ~33% fives
  double iat_effect = 0.25;
  std::array<double, 3> framing_effects = {0.0, 0.0, 0.0};  // info, info_guilt, no_frame
  // theta loadings on the six trait latents, kAllScales order
  std::array<double, 6> trait_effects = {0.03, 0.25, -0.05, 0.10, 0.15, 0.11};
  double iat_bias_effect = 0.05;
  double lexical_effect = 0.7;  // per unit of lexical density

  // IAT reaction times (ms): lognormal congruent RTs, incongruent shifted by
  // rt_bias_shift_ms * bias_i with bias_i ~ N(bias_mean, 1).
  double rt_base_ms = 750.0;
  double rt_log_sd = 0.25;
  double rt_bias_shift_ms = 120.0;
  double bias_mean = 0.6;
  double careless_share = 0.035;  // respondents who press through many trials
  double slow_trial_prob = 0.002;

  // questionnaire items: loading of each item on its trait latent
  double questionnaire_loading = 0.7;
  std::array<double, 4> likert_thresholds = {-2.0, -1.2, -0.4, 0.6};

  // rating time falls with the rating given (stylized)
  double rating_time_base_ms = 9000.0;
  double rating_time_slope_ms = 900.0;
  double comment_prob = 0.84;

  DemographicsModel demographics;
  flow::PoolRules pool_rules;
  iat::Config iat;
  std::uint64_t seed = 1;
};

inline void validate_spec(const CohortSpec& s) {
  if (s.n_respondents < 3) fail(Errc::validation, "cohort needs at least 3 respondents");
  if (!(s.latent_sensitivity_loading >= 0.0 && s.latent_sensitivity_loading <= 1.0))
    fail(Errc::validation, "loading must lie in [0, 1]");
  if (!(s.noise_sd > 0.0)) fail(Errc::validation, "noise_sd must be positive");
  double te = 0.0;
  for (double t : s.trait_effects) te += t * t;
  te += s.iat_bias_effect * s.iat_bias_effect;
  if (te >= 1.0) fail(Errc::validation, "trait effects explain all latent variance");
}

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline int discretize(double y, const std::array<double, 4>& cuts) {
  int k = 1;
  for (double c : cuts)
    if (y > c) ++k;
  return k;
}

}  // namespace detail

namespace detail {

// Image effects are evenly spaced over [-a, a] with a = sqrt(3) * image_effect_sd
// (a uniform with that SD), then shuffled onto images. Bounded effects keep
// every image's ratings from collapsing onto a single value.
inline double latent_cdf(const CohortSpec& s, double y) {
  const double a = std::sqrt(3.0) * s.image_effect_sd;
  const double sd = std::sqrt(s.latent_sensitivity_loading * s.latent_sensitivity_loading +
                              s.noise_sd * s.noise_sd);
  constexpr int kGrid = 2000;
  double acc = 0.0;
  for (int g = 0; g < kGrid; ++g) {
    const double b = a == 0.0 ? 0.0 : -a + 2.0 * a * (g + 0.5) / kGrid;
    acc += normal_cdf((y - b) / sd);
  }
  return acc / kGrid;
}

}  // namespace detail

// Category probabilities of the marginal latent rating distribution.
inline std::array<double, 5> rating_distribution(const CohortSpec& s) {
  std::array<double, 5> p{};
  double prev = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double c = detail::latent_cdf(s, s.thresholds[k]);
    p[k] = c - prev;
    prev = c;
  }
  p[4] = 1.0 - prev;
  return p;
}

// Thresholds that give the requested rating shares (summing to 1) under the
// spec's latent model.
inline std::array<double, 4> fit_thresholds(const CohortSpec& s, const std::array<double, 5>& shares) {
  double total = 0.0;
  for (double x : shares) {
    if (!(x > 0.0)) fail(Errc::calibration, "rating shares must be positive");
    total += x;
  }
  if (std::fabs(total - 1.0) > 1e-9) fail(Errc::calibration, "rating shares must sum to 1");
  std::array<double, 4> cuts{};
  double cum = 0.0;
  for (int k = 0; k < 4; ++k) {
    cum += shares[k];
    double lo = -50.0, hi = 50.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (detail::latent_cdf(s, mid) < cum ? lo : hi) = mid;
    }
    cuts[k] = 0.5 * (lo + hi);
  }
  return cuts;
}

inline void check_discretization(const CohortSpec& s) {
  for (int k = 1; k < 4; ++k)
    if (!(s.thresholds[k] > s.thresholds[k - 1]))
      fail(Errc::calibration, "rating thresholds must be strictly increasing");
  for (double p : rating_distribution(s))
    if (p > 0.999) fail(Errc::calibration, "discretization puts all mass on one rating");
}

struct Dataset {
  flow::ImagePool pool;
  std::vector<SessionRecord> sessions;
  std::vector<TokenRow> tokens;
  std::vector<StanceRow> stance;
  std::vector<text::TagCategoryProbs> tag_probs;
  // generating truth, for recovery checks
  std::vector<double> latent_sensitivity;
  std::vector<std::array<double, 6>> latent_traits;
};

namespace detail {

struct Word {
  const char* surface;
  text::Pos pos;
};

inline const std::vector<Word>& content_words() {
  using text::Pos;
  static const std::vector<Word> w = {
      {"woman", Pos::NOUN},        {"man", Pos::NOUN},          {"male", Pos::ADJ},
      {"female", Pos::ADJ},        {"mathematics", Pos::NOUN},  {"dance", Pos::NOUN},
      {"science", Pos::NOUN},      {"construction", Pos::NOUN}, {"site", Pos::NOUN},
      {"girl", Pos::NOUN},         {"boy", Pos::NOUN},          {"stereotype", Pos::NOUN},
      {"image", Pos::NOUN},        {"job", Pos::NOUN},          {"role", Pos::NOUN},
      {"teacher", Pos::NOUN},      {"engineer", Pos::NOUN},     {"nurse", Pos::NOUN},
      {"family", Pos::NOUN},       {"child", Pos::NOUN},        {"picture", Pos::NOUN},
      {"work", Pos::NOUN},         {"gender", Pos::NOUN},       {"profession", Pos::NOUN},
      {"shows", Pos::VERB},        {"represents", Pos::VERB},   {"think", Pos::VERB},
      {"see", Pos::VERB},          {"seems", Pos::VERB},        {"plays", Pos::VERB},
      {"works", Pos::VERB},        {"suggests", Pos::VERB},     {"reinforces", Pos::VERB},
      {"depicts", Pos::VERB},      {"stereotypical", Pos::ADJ}, {"typical", Pos::ADJ},
      {"traditional", Pos::ADJ},   {"normal", Pos::ADJ},        {"classic", Pos::ADJ},
      {"obvious", Pos::ADJ},       {"scientific", Pos::ADJ},    {"neutral", Pos::ADJ},
      {"clearly", Pos::ADV},       {"always", Pos::ADV},        {"often", Pos::ADV},
      {"only", Pos::ADV},          {"too", Pos::ADV},           {"again", Pos::ADV},
      {"very", Pos::ADV},          {"still", Pos::ADV}};
  return w;
}

inline const std::vector<Word>& function_words() {
  using text::Pos;
  static const std::vector<Word> w = {
      {"the", Pos::DET},  {"a", Pos::DET},      {"and", Pos::CCONJ}, {"of", Pos::ADP},
      {"in", Pos::ADP},   {"with", Pos::ADP},   {"to", Pos::ADP},    {"this", Pos::DET},
      {"that", Pos::SCONJ}, {"it", Pos::PRON},  {"not", Pos::PART},  {"for", Pos::ADP},
      {"but", Pos::CCONJ}, {"she", Pos::PRON},  {"he", Pos::PRON},   {"is", Pos::AUX},
      {"are", Pos::AUX},  {"there", Pos::PRON}};
  return w;
}

// Zipf-like index into a list of size n.
inline std::size_t zipf(Rng& rng, std::size_t n, double s = 1.1) {
  static thread_local std::vector<double> cdf;
  static thread_local std::size_t cached_n = 0;
  if (cached_n != n) {
    cdf.assign(n, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) cdf[i] = (acc += 1.0 / std::pow(i + 1.0, s));
    for (auto& c : cdf) c /= acc;
    cached_n = n;
  }
  const double u = rng.uniform();
  return static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

inline std::string image_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "img%03zu", i + 1);
  return buf;
}

inline std::string session_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "r%04zu", i + 1);
  return buf;
}

}  // namespace detail

// 100 images (6 gender-STEM), 2 of them untagged, the rest with 18..52 tags
// from a shared vocabulary; plus per-tag category probabilities where one
// in six tags leans clearly to one protected characteristic.
inline void generate_pool(Dataset& ds, const CohortSpec& spec) {
  Rng rng(derive_seed(spec.seed, 0xF00D));
  const std::size_t n_tags_vocab = 600;
  std::vector<std::string> vocab;
  for (std::size_t t = 0; t < n_tags_vocab; ++t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "tag%03zu", t);
    vocab.emplace_back(buf);
  }
  for (std::size_t t = 0; t < n_tags_vocab; ++t) {
    text::TagCategoryProbs tp;
    tp.tag = vocab[t];
    std::array<double, 6> w{};
    double sum = 0.0;
    for (auto& x : w) sum += (x = rng.uniform(0.0, 1.0));
    if (t % 6 == 0) {
      const auto c = static_cast<std::size_t>(rng.below(6));
      w[c] += 8.0 * sum;
      sum *= 9.0;
    }
    for (std::size_t c = 0; c < 6; ++c) tp.probs[text::kCharacteristics[c]] = w[c] / sum;
    ds.tag_probs.push_back(std::move(tp));
  }
  const auto& rules = spec.pool_rules;
  for (std::size_t i = 0; i < rules.pool_size; ++i) {
    flow::ImageCard card;
    card.image_id = detail::image_id(i);
    card.is_gender_stem = i < rules.gender_stem;
    card.path = "images/" + card.image_id + ".jpg";
    if (i != rules.pool_size - 1 && i != rules.pool_size - 2) {
      const auto n = 18 + static_cast<std::size_t>(rng.below(35));
      std::vector<std::size_t> idx(n_tags_vocab);
      for (std::size_t t = 0; t < idx.size(); ++t) idx[t] = t;
      for (std::size_t t = 0; t < n; ++t) {
        const auto j = t + static_cast<std::size_t>(rng.below(idx.size() - t));
        std::swap(idx[t], idx[j]);
        card.tags.push_back(vocab[idx[t]]);
      }
    }
    ds.pool.push_back(std::move(card));
  }
}

inline Dataset generate_cohort(const CohortSpec& spec) {
  validate_spec(spec);
  check_discretization(spec);
  Dataset ds;
  generate_pool(ds, spec);

  // Image effects on the latent rating scale, evenly spaced over
  // [-a, a]. The gender-STEM images take every k-th grid point so the shared
  // subset spans the same range as the pool; the rest are shuffled.
  std::map<std::string, double> image_effect;
  {
    Rng rng(derive_seed(spec.seed, 0xB0B));
    const double a = std::sqrt(3.0) * spec.image_effect_sd;
    const auto n_img = ds.pool.size();
    std::vector<double> grid(n_img);
    for (std::size_t j = 0; j < n_img; ++j)
      grid[j] = n_img > 1 ? -a + 2.0 * a * static_cast<double>(j) / (n_img - 1) : 0.0;
    std::size_t n_gender = 0;
    for (const auto& c : ds.pool) n_gender += c.is_gender_stem;
    std::vector<double> gender_effects, other_effects;
    std::vector<bool> taken(n_img, false);
    for (std::size_t g = 0; g < n_gender; ++g) {
      const auto j = static_cast<std::size_t>((g + 0.5) * static_cast<double>(n_img) /
                                              static_cast<double>(n_gender));
      taken[j] = true;
      gender_effects.push_back(grid[j]);
    }
    for (std::size_t j = 0; j < n_img; ++j)
      if (!taken[j]) other_effects.push_back(grid[j]);
    rng.shuffle(std::span<double>(gender_effects));
    rng.shuffle(std::span<double>(other_effects));
    std::size_t gi = 0, oi = 0;
    for (const auto& c : ds.pool)
      image_effect[c.image_id] = c.is_gender_stem ? gender_effects[gi++] : other_effects[oi++];
  }
  const auto scales = default_scales();
  flow::FlowConfig flow_cfg;
  flow_cfg.iat = spec.iat;
  flow_cfg.scales = scales;

  double trait_var = spec.iat_bias_effect * spec.iat_bias_effect;
  for (double t : spec.trait_effects) trait_var += t * t;
  const double unique_sd = std::sqrt(1.0 - trait_var);

  const std::size_t n = spec.n_respondents;
  ds.sessions.resize(n);
  ds.latent_sensitivity.resize(n);
  ds.latent_traits.resize(n);
  std::vector<std::vector<TokenRow>> tokens(n);
  std::vector<std::vector<StanceRow>> stance(n);

  sit::detail::parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(spec.seed, i + 1));
    const auto sid = detail::session_id(i);
    auto a = flow::create_session(ds.pool, rng.next(), sid, spec.pool_rules);
    auto s = flow::start_session(a);
    const auto& demo = spec.demographics;

    std::array<double, 6> traits{};
    for (auto& t : traits) t = rng.normal();
    const double bias = spec.bias_mean + rng.normal();
    const bool careless = rng.bernoulli(spec.careless_share);
    const double density = std::clamp(rng.normal(0.58, 0.08), 0.2, 0.95);

    // IAT trials in schedule order
    std::vector<iat::Trial> trials;
    {
      const auto sched = iat::scored_blocks(iat::schedule_blocks(a.seed, spec.iat));
      for (const auto& b : sched)
        for (int t = 0; t < b.n_trials; ++t) {
          double rt = std::exp(std::log(spec.rt_base_ms) + spec.rt_log_sd * rng.normal());
          if (b.pairing == iat::Pairing::Incongruent) rt += spec.rt_bias_shift_ms * bias;
          if (careless && rng.bernoulli(0.35)) rt = rng.uniform(120.0, 290.0);
          if (rng.bernoulli(spec.slow_trial_prob)) rt = rng.uniform(10'500.0, 30'000.0);
          iat::Trial tr;
          tr.session_id = sid;
          tr.block = b.pairing;
          tr.trial_index = t;
          tr.stimulus_id = std::string(b.pairing == iat::Pairing::Congruent ? "c" : "i") +
                           std::to_string(rng.below(16));
          tr.reaction_time_ms = std::max<std::int64_t>(1, std::llround(rt));
          tr.correct = !rng.bernoulli(0.06);
          trials.push_back(std::move(tr));
        }
    }
    const auto iat_score = iat::score_trials(trials, spec.iat);
    const bool revealed = a.iat_first && iat::render_feedback(iat_score).has_value();

    double theta = unique_sd * rng.normal() + spec.iat_bias_effect * (bias - spec.bias_mean);
    for (std::size_t k = 0; k < 6; ++k) theta += spec.trait_effects[k] * traits[k];
    theta += spec.framing_effects[static_cast<std::size_t>(a.framing.arm)];
    theta += spec.lexical_effect * (density - 0.58);
    if (revealed) theta += spec.iat_effect;
    ds.latent_sensitivity[i] = theta;
    ds.latent_traits[i] = traits;

    auto run_sit = [&] {
      for (const auto& img : a.image_sequence) {
        const double y = image_effect.at(img) + spec.latent_sensitivity_loading * theta +
                         spec.noise_sd * rng.normal();
        const int rating = detail::discretize(y, spec.thresholds);
        const double rt_mean =
            std::max(500.0, spec.rating_time_base_ms - spec.rating_time_slope_ms * (rating - 1));
        const auto rt = std::llround(rt_mean * std::exp(0.35 * rng.normal() - 0.06125));
        s = flow::record_rating(std::move(s), {sid, img, rating, rt}, a);

        std::string comment;
        const bool gender_img = std::any_of(ds.pool.begin(), ds.pool.end(), [&](const auto& c) {
          return c.is_gender_stem && c.image_id == img;
        });
        if (rng.bernoulli(spec.comment_prob)) {
          const auto cid = comment_id(sid, img);
          if (rng.bernoulli(0.03)) {
            comment = "x";
          } else {
            const auto len = 4 + static_cast<std::size_t>(rng.below(12));
            for (std::size_t t = 0; t < len; ++t) {
              const bool content = rng.bernoulli(density);
              const auto& list = content ? detail::content_words() : detail::function_words();
              const auto& w = list[detail::zipf(rng, list.size(), content ? 0.9 : 1.2)];
              if (!comment.empty()) comment += ' ';
              comment += w.surface;
              if (gender_img)
                tokens[i].push_back({cid, static_cast<int>(t), {w.surface, std::string(w.surface), w.pos}});
            }
          }
          if (gender_img && comment != "x") {
            // stance tracks the rating; the second annotator sometimes disagrees
            const double latent = rating + 0.9 * rng.normal();
            const auto st = latent < 2.3   ? text::Stance::Against
                            : latent < 3.7 ? text::Stance::Neutral
                                           : text::Stance::Pro;
            const bool subj = rng.bernoulli(0.96);
            stance[i].push_back({cid, "A", subj, st});
            auto st_b = st;
            if (rng.bernoulli(0.22)) st_b = static_cast<text::Stance>(rng.below(3));
            stance[i].push_back({cid, "B", rng.bernoulli(0.9) ? subj : !subj, st_b});
          }
        }
        const auto ct = comment.empty() ? std::llround(1500 + 500 * rng.uniform())
                                        : std::llround(4000 + 350.0 * comment.size() *
                                                                  std::exp(0.3 * rng.normal()));
        s = flow::record_comment(std::move(s), {sid, img, comment, ct}, a);
      }
    };
    auto run_iat = [&] {
      for (const auto& t : trials) s = flow::record_iat_trial(std::move(s), t, a, flow_cfg);
      if (s.awaiting_feedback) s = flow::record_feedback_shown(std::move(s), a);
    };

    if (s.phase == flow::Phase::Framing) s = flow::acknowledge_framing(std::move(s), a);
    if (a.iat_first) {
      run_iat();
      run_sit();
    } else {
      run_sit();
      run_iat();
    }

    // questionnaire
    flow::QuestionnairePage demo_page{0, {}};
    {
      auto& ans = demo_page.answers;
      ans["gender"] = rng.bernoulli(demo.female_share) ? "1" : "0";
      const double age = std::clamp(rng.normal(demo.age_mu, demo.age_sigma),
                                    static_cast<double>(demo.age_min),
                                    static_cast<double>(demo.age_max));
      ans["age"] = std::to_string(std::lround(age));
      double u = rng.uniform(), acc = 0.0;
      int like = 7;
      for (int k = 0; k < 7; ++k)
        if (u < (acc += demo.like_teaching_probs[k])) {
          like = k + 1;
          break;
        }
      ans["like_teaching"] = std::to_string(like);
      ans["master"] = rng.bernoulli(demo.master_share) ? "1" : "0";
      ans["disability_training"] = rng.bernoulli(demo.disability_training_share) ? "1" : "0";
      ans["married"] = rng.bernoulli(demo.married_share) ? "1" : "0";
      ans["teaching_italian"] = rng.bernoulli(demo.teaching_italian_share) ? "1" : "0";
      ans["teaching_maths"] = rng.bernoulli(demo.teaching_maths_share) ? "1" : "0";
      u = rng.uniform();
      acc = 0.0;
      std::string area = birth_areas().back();
      for (std::size_t k = 0; k < 6; ++k)
        if (u < (acc += demo.birth_area_probs[k])) {
          area = birth_areas()[k];
          break;
        }
      ans["birth_area"] = area;
    }
    s = flow::record_questionnaire(std::move(s), demo_page, a, flow_cfg);
    const double l = spec.questionnaire_loading;
    for (std::size_t k = 0; k < scales.size(); ++k) {
      flow::QuestionnairePage page{static_cast<int>(k + 1), {}};
      for (std::size_t item = 0; item < scales[k].size(); ++item) {
        const double y = l * traits[k] + std::sqrt(1.0 - l * l) * rng.normal();
        int x = detail::discretize(y, spec.likert_thresholds);
        if (scales[k].reverse_keyed.count(static_cast<int>(item))) x = 6 - x;
        page.answers[scales[k].item_id(item)] = std::to_string(x);
      }
      s = flow::record_questionnaire(std::move(s), page, a, flow_cfg);
    }
    ds.sessions[i] = {std::move(a), std::move(s)};
  });

  for (auto& t : tokens) ds.tokens.insert(ds.tokens.end(), t.begin(), t.end());
  for (auto& s : stance) ds.stance.insert(ds.stance.end(), s.begin(), s.end());
  return ds;
}

// --- calibration -----------------------------------------------------------

struct CalibrationTargets {
  double female_share = 0.845;
  double age_mean = 51.831;
  double age_sd = 9.536;
  int age_min = 25;
  int age_max = 69;
};

struct ClippedMoments {
  double mean = 0.0;
  double sd = 0.0;
};

// Mean and SD of clip(N(mu, sigma), lo, hi).
inline ClippedMoments clipped_normal_moments(double mu, double sigma, double lo, double hi) {
  const double a = (lo - mu) / sigma, b = (hi - mu) / sigma;
  const double pa = detail::normal_cdf(a), pb = detail::normal_cdf(b);
  const double fa = detail::normal_pdf(a), fb = detail::normal_pdf(b);
  const double mid = pb - pa;
  const double m1 = lo * pa + hi * (1.0 - pb) + mu * mid + sigma * (fa - fb);
  const double m2 = lo * lo * pa + hi * hi * (1.0 - pb) + mu * mu * mid +
                    2.0 * mu * sigma * (fa - fb) + sigma * sigma * (mid + a * fa - b * fb);
  return {m1, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

// Spec whose demographic draws reproduce the requested moments.
inline CohortSpec calibrate_to_paper(const CalibrationTargets& t, CohortSpec base = {}) {
  std::vector<std::string> bad;
  if (!(t.female_share > 0.0 && t.female_share < 1.0)) bad.push_back("female_share");
  if (!(t.age_sd > 0.0)) bad.push_back("age_sd");
  if (!(t.age_mean > t.age_min && t.age_mean < t.age_max)) bad.push_back("age_mean");
  if (!(t.age_max > t.age_min)) bad.push_back("age range");
  if (bad.empty() && t.age_sd >= 0.5 * (t.age_max - t.age_min)) bad.push_back("age_sd");
  auto report = [&] {
    std::string s;
    for (const auto& b : bad) s += (s.empty() ? "" : ", ") + b;
    fail(Errc::calibration, "unreachable calibration targets: " + s);
  };
  if (!bad.empty()) report();

  double mu = t.age_mean, sigma = t.age_sd;
  bool ok = false;
  for (int it = 0; it < 500; ++it) {
    const auto m = clipped_normal_moments(mu, sigma, t.age_min, t.age_max);
    const double dm = t.age_mean - m.mean;
    const double ratio = t.age_sd / std::max(m.sd, 1e-9);
    if (std::fabs(dm) < 1e-9 && std::fabs(ratio - 1.0) < 1e-9) {
      ok = true;
      break;
    }
    mu += dm;
    sigma = std::min(sigma * ratio, 1e3);
  }
  if (!ok) {
    bad = {"age_mean/age_sd"};
    report();
  }
  base.demographics.female_share = t.female_share;
  base.demographics.age_mu = mu;
  base.demographics.age_sigma = sigma;
  base.demographics.age_min = t.age_min;
  base.demographics.age_max = t.age_max;
  return base;
}

}  // namespace sit::synth

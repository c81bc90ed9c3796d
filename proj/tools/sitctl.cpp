// sitctl: operator CLI for simulation, scoring, psychometrics, regression,
// text/tag analytics, reports and the survey API server.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "sit/agreement.hpp"
#include "sit/factor.hpp"
#include "sit/platform/api.hpp"
#include "sit/platform/csv.hpp"
#include "sit/platform/engine.hpp"
#include "sit/platform/model_spec.hpp"
#include "sit/platform/pipeline.hpp"
#include "sit/platform/report.hpp"
#include "sit/platform/tables.hpp"
#include "sit/reliability.hpp"
#include "sit/synth.hpp"
#include "sit/text.hpp"
#include "sit/traits.hpp"

#include <CLI11.hpp>
// httplib pulls in <resolv.h>, whose _res macro collides with Eigen internals
#include "sit/platform/server.hpp"

namespace fs = std::filesystem;
using namespace sit;
using namespace sit::platform;

namespace {

csv::Table read_table(const std::string& path) {
  if (path == "-") return csv::parse(std::cin);
  return csv::read_file(path);
}

void emit(const csv::Table& t, const std::string& out) {
  if (out.empty() || out == "-")
    csv::write(std::cout, t);
  else
    csv::write_file(out, t);
}

void emit_text(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(out, std::ios::binary);
  if (!os) fail(Errc::validation, "cannot write " + out);
  os << text;
}

// Either a data directory or a single ratings file (optionally with a pool).
struct Input {
  std::string data;
  std::string ratings;
  std::string pool;

  void add(CLI::App* app) {
    app->add_option("--data", data, "data directory written by 'simulate --out'");
    app->add_option("--ratings", ratings, "ratings CSV ('-' for stdin)");
    app->add_option("--pool", pool, "pool manifest CSV");
  }

  Bundle load() const {
    Bundle b;
    if (!data.empty()) {
      b = read_bundle(data);
    } else {
      b.ratings = parse_ratings(read_table(ratings.empty() ? "-" : ratings));
    }
    if (!pool.empty()) b.pool = parse_pool(read_table(pool));
    return b;
  }
};

ImageSubset parse_subset(const std::string& s) {
  if (s == "all") return ImageSubset::All;
  if (s == "gender") return ImageSubset::GenderStemOnly;
  fail(Errc::validation, "subset must be 'all' or 'gender'");
}

RatingMatrix load_matrix(const Input& in) {
  const auto b = in.load();
  return rating_matrix(b, scored_sessions(b));
}

Eigen::MatrixXd numeric_matrix(const csv::Table& t, std::size_t skip_cols) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(t.rows.size()),
                    static_cast<Eigen::Index>(t.header.size() - skip_cols));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = skip_cols; c < t.header.size(); ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - skip_cols)) =
          csv::parse_double(t.rows[r][c], "item value");
  return x;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereotype Identification Test toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic cohort");
  synth::CohortSpec spec;
  std::string sim_out;
  std::vector<double> framing_effects;
  sim->add_option("--n", spec.n_respondents, "respondents")->default_val(614);
  sim->add_option("--seed", spec.seed, "seed")->default_val(1);
  sim->add_option("--iat-effect", spec.iat_effect, "revelation effect (latent SD units)")
      ->default_val(0.25);
  sim->add_option("--loading", spec.latent_sensitivity_loading, "latent rating loading")
      ->default_val(0.6);
  sim->add_option("--noise-sd", spec.noise_sd, "rating noise SD")->default_val(0.4);
  sim->add_option("--framing-effects", framing_effects, "info,info_guilt,no_frame")
      ->expected(3)
      ->delimiter(',');
  sim->add_option("--out", sim_out, "write all tables to this directory (default: ratings CSV to stdout)");

  // score-sit
  auto* ssit = app.add_subcommand("score-sit", "SIT, Gender-SIT and, given a data directory, all scores");
  Input ssit_in;
  std::string ssit_out;
  ssit_in.add(ssit);
  ssit->add_option("--out", ssit_out, "scores CSV (default stdout)");

  // score-iat
  auto* siat = app.add_subcommand("score-iat", "IAT D-scores per session");
  std::string siat_trials = "-", siat_out;
  siat->add_option("--trials", siat_trials, "iat_trials CSV ('-' for stdin)");
  siat->add_option("--out", siat_out, "output CSV");

  // indices
  auto* idx = app.add_subcommand("indices", "questionnaire trait indices");
  std::string idx_q = "-", idx_out, idx_loadings;
  bool idx_raw = false;
  idx->add_option("--questionnaire", idx_q, "questionnaire CSV ('-' for stdin)");
  idx->add_flag("--raw", idx_raw, "keep raw regression scores (no restandardization)");
  idx->add_option("--out", idx_out, "indices CSV");
  idx->add_option("--loadings", idx_loadings, "write per-item loadings CSV here");

  // reliability
  auto* rel = app.add_subcommand("reliability", "split-half or test-retest resampling");
  Input rel_in;
  std::string rel_mode = "split-half", rel_subset = "all", rel_demean = "within-half", rel_out;
  ReliabilityOptions rel_opt;
  rel_in.add(rel);
  rel->add_option("--mode", rel_mode, "split-half | test-retest")
      ->check(CLI::IsMember({"split-half", "test-retest"}));
  rel->add_option("--draws", rel_opt.n_draws, "resampling draws")->default_val(9999);
  rel->add_option("--seed", rel_opt.seed, "seed")->default_val(1);
  rel->add_option("--subset", rel_subset, "all | gender")->check(CLI::IsMember({"all", "gender"}));
  rel->add_option("--demeaning", rel_demean, "within-half | full-sample")
      ->check(CLI::IsMember({"within-half", "full-sample"}));
  rel->add_option("--out", rel_out, "prefix for <prefix>_draws.csv and <prefix>_summary.csv");

  // alpha
  auto* alp = app.add_subcommand("alpha", "Cronbach's alpha");
  Input alp_in;
  std::string alp_items, alp_subset = "all";
  bool alp_missing = false;
  alp_in.add(alp);
  alp->add_option("--items", alp_items, "numeric item CSV (first column = id)");
  alp->add_option("--subset", alp_subset, "all | gender")->check(CLI::IsMember({"all", "gender"}));
  alp->add_flag("--allow-missing", alp_missing, "pairwise-complete covariances");

  // factor
  auto* fac = app.add_subcommand("factor", "one-factor principal-axis solution");
  Input fac_in;
  std::string fac_items, fac_out;
  fac_in.add(fac);
  fac->add_option("--items", fac_items, "numeric item CSV (first column = id)");
  fac->add_option("--out", fac_out, "loadings CSV");

  // regress
  auto* reg = app.add_subcommand("regress", "OLS model tables");
  std::string reg_data, reg_csv, reg_out;
  std::vector<std::string> reg_specs;
  reg->add_option("--data", reg_data, "data directory")->required();
  reg->add_option("--spec", reg_specs, "built-in spec name or spec file (repeatable)")->required();
  reg->add_option("--csv", reg_csv, "also write coefficients as CSV");
  reg->add_option("--out", reg_out, "text table (default stdout)");

  // textmetrics
  auto* txt = app.add_subcommand("textmetrics", "lexical density, TTR and stance agreement");
  std::string txt_tokens, txt_pool, txt_stance, txt_out, txt_ratings;
  txt->add_option("--tokens", txt_tokens, "tokens CSV")->required();
  txt->add_option("--pool", txt_pool, "pool manifest (restricts to gender-STEM comments)");
  txt->add_option("--stance", txt_stance, "stance annotations CSV");
  txt->add_option("--ratings", txt_ratings, "ratings CSV, for the stance-rating correlation");
  txt->add_option("--out", txt_out, "per-session metrics CSV");

  // tagstats
  auto* tag = app.add_subcommand("tagstats", "protected-characteristic tag coverage");
  std::string tag_pool, tag_probs, tag_overrides, tag_out;
  double tag_threshold = 0.5;
  tag->add_option("--pool", tag_pool, "pool manifest")->required();
  tag->add_option("--tag-probs", tag_probs, "tag category probabilities")->required();
  tag->add_option("--threshold", tag_threshold, "classification threshold")->default_val(0.5);
  tag->add_option("--overrides", tag_overrides, "tag,characteristic verdicts from manual review");
  tag->add_option("--out", tag_out, "per-image CSV");

  // report
  auto* rep = app.add_subcommand("report", "plain-text report of the standard outputs");
  std::string rep_data, rep_out;
  ReportOptions rep_opt;
  rep->add_option("--data", rep_data, "data directory")->required();
  rep->add_option("--draws", rep_opt.draws, "resampling draws")->default_val(999);
  rep->add_option("--seed", rep_opt.seed, "seed")->default_val(1);
  rep->add_option("--out", rep_out, "output file");

  // serve
  auto* srv = app.add_subcommand("serve", "run the survey HTTP API");
  std::string srv_pool, srv_dir, srv_host = "127.0.0.1";
  int srv_port = 8080;
  std::uint64_t srv_seed = 0;
  srv->add_option("--pool", srv_pool, "pool manifest")->required();
  srv->add_option("--data-dir", srv_dir, "event log directory (default $SIT_DATA_DIR)");
  srv->add_option("--host", srv_host, "bind address");
  srv->add_option("--port", srv_port, "port");
  srv->add_option("--seed", srv_seed, "master seed for session assignment");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      if (!framing_effects.empty())
        std::copy(framing_effects.begin(), framing_effects.end(), spec.framing_effects.begin());
      const auto ds = synth::generate_cohort(spec);
      auto b = to_bundle(ds);
      if (sim_out.empty())
        csv::write(std::cout, ratings_table(b.ratings));
      else
        write_bundle(sim_out, b);
    } else if (*ssit) {
      emit(scores_table(score(ssit_in.load())), ssit_out);
    } else if (*siat) {
      emit(iat_scores_table(parse_iat_trials(read_table(siat_trials))), siat_out);
    } else if (*idx) {
      Bundle b;
      b.questionnaire = parse_questionnaire(read_table(idx_q));
      std::vector<std::string> ids;
      std::set<std::string> seen;
      for (const auto& a : b.questionnaire)
        if (seen.insert(a.session_id).second) ids.push_back(a.session_id);
      const auto rows = sit::platform::detail::response_rows(b, ids);
      TraitOptions topt;
      topt.standardize = !idx_raw;
      const auto indices = trait_indices(rows, default_scales(), topt);
      const auto defs = default_scales();
      csv::Table t{{"session_id"}, {}};
      for (const auto& d : defs) t.header.push_back(d.key);
      for (const auto& r : rows) {
        csv::Row row{r.respondent_id};
        for (const auto& ix : indices) {
          const auto v = ix.value_for(r.respondent_id);
          row.push_back(v ? csv::format_double(*v) : "");
        }
        t.rows.push_back(std::move(row));
      }
      emit(t, idx_out);
      if (!idx_loadings.empty()) {
        csv::Table l{{"scale", "item", "loading", "uniqueness"}, {}};
        for (std::size_t k = 0; k < indices.size(); ++k)
          for (Eigen::Index i = 0; i < indices[k].solution.loadings.size(); ++i)
            l.rows.push_back({defs[k].key, defs[k].item_id(static_cast<std::size_t>(i)),
                              csv::format_double(indices[k].solution.loadings(i)),
                              csv::format_double(indices[k].solution.uniquenesses(i))});
        csv::write_file(idx_loadings, l);
      }
    } else if (*rel) {
      const auto m = load_matrix(rel_in);
      rel_opt.subset = parse_subset(rel_subset);
      rel_opt.demeaning =
          rel_demean == "within-half" ? HalfDemeaning::WithinHalf : HalfDemeaning::FullSample;
      const auto r = rel_mode == "split-half" ? split_half_reliability(m, rel_opt)
                                              : test_retest_reliability(m, rel_opt);
      if (rel_out.empty()) {
        csv::write(std::cout, reliability_summary_table(r));
      } else {
        csv::write_file(rel_out + "_draws.csv", reliability_draws_table(r));
        csv::write_file(rel_out + "_summary.csv", reliability_summary_table(r));
      }
    } else if (*alp) {
      double a;
      if (!alp_items.empty()) {
        a = cronbach_alpha(numeric_matrix(read_table(alp_items), 1), alp_missing);
      } else {
        const auto m = load_matrix(alp_in);
        a = cronbach_alpha(slot_matrix(m, loo_demean(m), parse_subset(alp_subset)), alp_missing);
      }
      std::cout << csv::format_double(a) << "\n";
    } else if (*fac) {
      Eigen::MatrixXd x;
      std::vector<std::string> names;
      if (!fac_items.empty()) {
        const auto t = read_table(fac_items);
        x = numeric_matrix(t, 1);
        names.assign(t.header.begin() + 1, t.header.end());
      } else {
        const auto m = load_matrix(fac_in);
        x = slot_matrix(m, loo_demean(m));
        for (Eigen::Index i = 0; i < x.cols(); ++i) names.push_back("slot_" + std::to_string(i + 1));
      }
      const auto sol = factor_single(x);
      csv::Table t{{"item", "loading", "uniqueness"}, {}};
      for (Eigen::Index i = 0; i < sol.loadings.size(); ++i)
        t.rows.push_back({names[static_cast<std::size_t>(i)], csv::format_double(sol.loadings(i)),
                          csv::format_double(sol.uniquenesses(i))});
      emit(t, fac_out);
      if (!sol.converged) std::cerr << "warning: factor iteration did not converge\n";
      if (sol.heywood) std::cerr << "warning: Heywood case, communality clamped to 1\n";
    } else if (*reg) {
      const auto table = analysis_table(read_bundle(reg_data));
      std::vector<FitResult> fits;
      for (const auto& s : reg_specs) fits.push_back(fit(table, load_model_spec(s)));
      emit_text(render_table(fits), reg_out);
      if (!reg_csv.empty()) {
        csv::Table t{{"model", "term", "estimate", "std_error", "t_value", "p_value", "stars"}, {}};
        for (const auto& f : fits)
          for (const auto& term : f.terms)
            t.rows.push_back({f.name, term, csv::format_double(f.coefficients.at(term)),
                              csv::format_double(f.std_errors.at(term)),
                              csv::format_double(f.t_values.at(term)),
                              csv::format_double(f.p_values.at(term)),
                              stars(f.p_values.at(term))});
        csv::write_file(reg_csv, t);
      }
    } else if (*txt) {
      Bundle b;
      b.tokens = parse_tokens(read_table(txt_tokens));
      if (!txt_pool.empty()) b.pool = parse_pool(read_table(txt_pool));
      csv::Table t{{"session_id", "lexical_density", "ttr"}, {}};
      for (const auto& [sid, v] : lexical_metrics(b))
        t.rows.push_back({sid, csv::format_double(v.first), csv::format_double(v.second)});
      emit(t, txt_out);
      if (!txt_stance.empty()) {
        const auto st = parse_stance(read_table(txt_stance));
        std::map<std::string, std::map<std::string, StanceRow>> by;
        for (const auto& s : st) by[s.comment_id][s.annotator_id] = s;
        std::vector<std::string> sa, sb, ua, ub;
        for (const auto& [cid, ann] : by)
          if (ann.size() == 2) {
            const auto& x = ann.begin()->second;
            const auto& y = std::next(ann.begin())->second;
            sa.push_back(text::to_string(x.stance));
            sb.push_back(text::to_string(y.stance));
            ua.push_back(x.subjective ? "1" : "0");
            ub.push_back(y.subjective ? "1" : "0");
          }
        std::cerr << "kappa stance " << csv::format_double(cohens_kappa(sa, sb))
                  << ", subjectivity " << csv::format_double(cohens_kappa(ua, ub)) << "\n";
        if (!txt_ratings.empty()) {
          std::map<std::string, int> rating;
          for (const auto& r : parse_ratings(read_table(txt_ratings)))
            rating[comment_id(r.session_id, r.image_id)] = r.rating;
          std::vector<text::StanceObservation> obs;
          for (const auto& [cid, ann] : by) {
            auto it = rating.find(cid);
            if (it == rating.end()) continue;
            obs.push_back({cid.substr(0, cid.rfind(':')), ann.begin()->second.stance, it->second});
          }
          const auto summary = text::stance_aggregate(obs);
          std::cerr << "stance-rating correlation " << csv::format_double(summary.correlation)
                    << "\n";
        }
      }
    } else if (*tag) {
      const auto pool = parse_pool(read_table(tag_pool));
      const auto probs = parse_tag_probs(read_table(tag_probs));
      text::TagClassification overrides;
      if (!tag_overrides.empty()) overrides = parse_tag_overrides(read_table(tag_overrides));
      const auto stats =
          text::image_tag_stats(pool, text::classify_tags(probs, tag_threshold, overrides));
      csv::Table t{{"image_id", "n_tags", "n_protected", "n_characteristics", "proportion"}, {}};
      for (const auto& s : stats.images)
        t.rows.push_back({s.image_id, std::to_string(s.n_tags), std::to_string(s.n_protected),
                          std::to_string(s.n_characteristics), csv::format_double(s.proportion)});
      emit(t, tag_out);
    } else if (*rep) {
      emit_text(render_report(read_bundle(rep_data), rep_opt), rep_out);
    } else if (*srv) {
      if (srv_dir.empty())
        if (const char* env = std::getenv("SIT_DATA_DIR")) srv_dir = env;
      if (srv_dir.empty()) fail(Errc::validation, "no data directory: pass --data-dir or set SIT_DATA_DIR");
      fs::create_directories(srv_dir);
      EngineOptions eo;
      eo.seed = srv_seed;
      Engine engine(parse_pool(read_table(srv_pool)), fs::path(srv_dir) / "events.ndjson", eo);
      Api api(engine, fs::path(srv_dir) / "idempotency.ndjson");
      httplib::Server server;
      mount(server, api);
      std::cerr << "listening on " << srv_host << ":" << srv_port << "\n";
      if (!server.listen(srv_host, srv_port)) fail(Errc::validation, "cannot bind " + srv_host);
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  }
  return 0;
}

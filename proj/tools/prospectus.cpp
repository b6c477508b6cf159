// prospectus: command-line front end.
//
//   prospectus <command> --config <file> [--out <dir>] [--seed <u64>] ...
//
// Exit codes: 0 success, 1 usage or parse error, 2 property violation,
// 3 numeric failure or non-convergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "prospectus/prospectus.hpp"

namespace fs = std::filesystem;
using namespace prospectus;
using io::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;
constexpr int kExitNumeric = 3;

struct Common {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

RunConfig load(const Common& c) {
  RunConfig cfg = load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void write_file(const Common& c, const std::string& name, const std::string& content) {
  if (c.out_dir.empty()) return;
  fs::create_directories(c.out_dir);
  std::ofstream out(fs::path(c.out_dir) / name, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + (fs::path(c.out_dir) / name).string() + "'");
  out << content;
}

// Summary JSON goes to stdout and, with --out, to <out>/<name>.
void emit(const Common& c, const std::string& name, const Json& j) {
  const std::string text = io::dump(j);
  std::cout << text;
  write_file(c, name, text);
}

Json header(const std::string& command, const RunConfig& cfg) {
  Json j;
  j["schema_version"] = io::kSchemaVersion;
  j["command"] = command;
  j["seed"] = cfg.seed;
  return j;
}

// ---------------------------------------------------------------------------

int cmd_choice_prob(const Common& c, const std::string& options_path) {
  const RunConfig cfg = load(c);
  const auto options = io::read_options(io::read_csv_file(options_path));
  std::vector<double> u;
  for (const auto& o : options) u.push_back(trip_utility(o, cfg.utility));
  const auto p = logit_probabilities(u);
  Json j = header("choice-prob", cfg);
  Json rows = Json::array();
  for (std::size_t i = 0; i < options.size(); ++i) {
    Json r;
    r["mode"] = to_string(options[i].mode);
    r["utility"] = io::number(u[i]);
    r["probability"] = io::number(p[i]);
    rows.push_back(r);
  }
  j["options"] = rows;
  emit(c, "choice-prob.json", j);
  return kExitOk;
}

// Prospect file: {"type": "discrete", "outcomes": [{"utility": u, "probability": p}, ...]}
// or a family: bernoulli {u_lo, u_hi, p_lo}, truncated_poisson {lambda, k, x_hi,
// x_lo, tariff_term}, normal {mu, sigma, lo, hi}, uniform {lo, hi}.
std::variant<DiscreteProspect, ContinuousProspect> read_prospect(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON in prospect file: ") + e.what());
  }
  detail::Section s(doc, "prospect");
  std::string type;
  s.read("type", type);
  auto need = [&](const char* key) {
    if (!s.has(key)) throw ParseError("prospect of type '" + type + "' needs '" + key + "'");
    double v = 0.0;
    s.read(key, v);
    return v;
  };
  auto optional_value = [&](const char* key, double fallback) {
    double v = fallback;
    s.read(key, v);
    return v;
  };
  try {
    if (type == "discrete") {
      if (!s.has("outcomes") || !s.raw("outcomes").is_array()) {
        throw ParseError("discrete prospect needs an 'outcomes' list");
      }
      std::vector<Outcome> outcomes;
      for (const auto& o : s.raw("outcomes")) {
        detail::Section os(o, "prospect.outcomes[]");
        Outcome out{};
        if (!os.has("utility") || !os.has("probability")) {
          throw ParseError("each outcome needs 'utility' and 'probability'");
        }
        os.read("utility", out.utility);
        os.read("probability", out.probability);
        os.finish();
        outcomes.push_back(out);
      }
      s.finish();
      return DiscreteProspect::normalized(std::move(outcomes));
    }
    std::optional<ContinuousProspect> p;
    if (type == "bernoulli") {
      p.emplace(BernoulliTwoPoint{need("u_lo"), need("u_hi"), need("p_lo")});
    } else if (type == "truncated_poisson") {
      int k = 0;
      if (!s.has("k")) throw ParseError("prospect of type 'truncated_poisson' needs 'k'");
      s.read("k", k);
      p.emplace(TruncatedPoisson{need("lambda"), k, need("x_hi"), need("x_lo"),
                                 optional_value("tariff_term", 0.0)});
    } else if (type == "normal") {
      p.emplace(Normal{need("mu"), need("sigma"), need("lo"), need("hi")});
    } else if (type == "uniform") {
      p.emplace(Uniform{need("lo"), need("hi")});
    } else {
      throw ParseError("prospect type must be discrete, bernoulli, truncated_poisson, normal or uniform");
    }
    s.finish();
    return *p;
  } catch (const InvalidProspect& e) {
    throw ParseError(std::string("invalid prospect: ") + e.what());
  }
}

int cmd_cpt_utility(const Common& c, const std::string& prospect_path) {
  const RunConfig cfg = load(c);
  const auto prospect = read_prospect(prospect_path);
  cfg.cpt.validate();
  const double r = resolve(cfg.reference, cfg.tariff_term());
  Json j = header("cpt-utility", cfg);
  double u_s = 0.0;
  double u_o = 0.0;
  if (const auto* d = std::get_if<DiscreteProspect>(&prospect)) {
    j["prospect"] = d->size() == 1 ? "certain" : "discrete";
    u_s = subjective_utility_discrete(*d, r, cfg.cpt);
    u_o = expected_utility(*d);
  } else {
    const auto& cp = std::get<ContinuousProspect>(prospect);
    j["prospect"] = cp.family();
    u_s = subjective_utility_continuous(cp, r, cfg.cpt, cfg.quadrature);
    u_o = cp.mean();
  }
  j["reference"] = io::number(r);
  j["subjective_utility"] = io::number(u_s);
  j["expected_utility"] = io::number(u_o);
  j["certainty_equivalent"] = io::number(certainty_equivalent(u_s, r, cfg.cpt));
  emit(c, "cpt-utility.json", j);
  return kExitOk;
}

// ---------------------------------------------------------------------------

std::string series_csv(const std::vector<const ExperimentSeries*>& all) {
  std::ostringstream out;
  io::write_series_header(out);
  for (const auto* s : all) io::write_series_rows(out, *s);
  return out.str();
}

int run_fourfold(const Common& c, const RunConfig& cfg) {
  const ExperimentSetup setup = cfg.experiment_setup();
  Json j = header("experiment", cfg);
  j["experiment"] = "fourfold";
  j["p_nr"] = io::number(setup.p_nr);
  std::vector<ExperimentSeries> all;
  Json quadrants = Json::array();
  const std::array<int, 4> expected{+1, -1, -1, +1};
  bool pattern_ok = true;
  int general_changes = 0;
  std::optional<double> counterexample;
  std::string pattern;
  for (Variant v : {Variant::DistortionOnly, Variant::GeneralCpt}) {
    for (std::size_t qi = 0; qi < kAllQuadrants.size(); ++qi) {
      const Quadrant q = kAllQuadrants[qi];
      all.push_back(fourfold_experiment(setup, q, v));
      const auto& s = all.back();
      const int sign = ra_sign(s);
      const int changes = ra_sign_changes(s);
      Json o;
      o["variant"] = s.variant;
      o["quadrant"] = s.quadrant;
      o["n_points"] = s.records.size();
      o["gamma_first"] = io::number(s.records.front().gamma);
      o["gamma_last"] = io::number(s.records.back().gamma);
      o["ra_sign"] = sign;
      o["sign_changes"] = changes;
      quadrants.push_back(o);
      if (v == Variant::DistortionOnly) {
        pattern += (pattern.empty() ? "" : ",");
        pattern += sign > 0 ? "+" : sign < 0 ? "-" : "0";
        if (sign != expected[qi]) {
          pattern_ok = false;
          for (const auto& r : s.records) {
            const int sg = (r.ra > 0.0) - (r.ra < 0.0);
            if (sg != expected[qi] && !counterexample) counterexample = r.gamma;
          }
        }
      } else {
        general_changes += changes;
      }
    }
  }
  j["quadrants"] = quadrants;
  Json verdicts = Json::array();
  verdicts.push_back("distortion-only RA signs (" + pattern + ") vs (+,-,-,+): " +
                     (pattern_ok ? "PASS" : "FAIL"));
  verdicts.push_back("general-CPT sign changes in gamma: " + std::to_string(general_changes) + ": " +
                     (general_changes > 0 ? "PASS" : "FAIL"));
  j["verdicts"] = verdicts;
  const bool ok = pattern_ok && general_changes > 0;
  j["pass"] = ok;
  if (counterexample) j["first_counterexample_gamma"] = io::number(*counterexample);
  std::vector<const ExperimentSeries*> ptrs;
  for (const auto& s : all) ptrs.push_back(&s);
  write_file(c, "series.csv", series_csv(ptrs));
  emit(c, "summary.json", j);
  return ok ? kExitOk : kExitViolation;
}

int run_mixed(const Common& c, const RunConfig& cfg) {
  const ExperimentSetup setup = cfg.experiment_setup();
  Json j = header("experiment", cfg);
  j["experiment"] = "mixed";
  Json rows = Json::array();
  std::vector<MixedResult> all;
  std::size_t passed = 0;
  std::optional<double> counterexample;
  for (Family f : kAllFamilies) {
    const ContinuousProspect x = setup.distribution(f);
    all.push_back(mixed_prospect_experiment(setup, f));
    const auto& m = all.back();
    const LambdaStar ls = lambda_star_search(x, setup.cpt);
    Json o;
    o["distribution"] = to_string(f);
    o["gamma_lower"] = io::number(m.bounds.gamma_lower);
    o["gamma_upper"] = io::number(m.bounds.gamma_upper);
    o["u_s_at_mean"] = io::number(m.bounds.u_s_at_mean);
    o["lambda_star"] = io::number(ls.lambda_star);
    o["lambda_bracket"] = {io::number(ls.below), io::number(ls.above)};
    o["u_s_at_bracket"] = {io::number(ls.u_s_below), io::number(ls.u_s_above)};
    o["n_points"] = m.series.records.size();
    o["first_violation_gamma"] = io::optional_number(m.first_violation);
    const bool ok = !m.first_violation;
    o["pass"] = ok;
    rows.push_back(o);
    passed += ok ? 1 : 0;
    if (!ok && !counterexample) counterexample = m.first_violation;
  }
  j["distributions"] = rows;
  const bool ok = passed == all.size();
  j["verdicts"] = Json::array({"p^s_mean < p^o on [gamma_lower, gamma_upper): " +
                               std::string(ok ? "PASS" : "FAIL") + " (" + std::to_string(passed) +
                               "/" + std::to_string(all.size()) + " distributions)"});
  j["pass"] = ok;
  if (counterexample) j["first_counterexample_gamma"] = io::number(*counterexample);
  std::vector<const ExperimentSeries*> ptrs;
  for (const auto& m : all) ptrs.push_back(&m.series);
  write_file(c, "series.csv", series_csv(ptrs));
  emit(c, "summary.json", j);
  return ok ? kExitOk : kExitViolation;
}

int run_selfref(const Common& c, const RunConfig& cfg) {
  const ExperimentSetup setup = cfg.experiment_setup();
  Json j = header("experiment", cfg);
  j["experiment"] = "selfref";
  Json rows = Json::array();
  std::vector<SelfReferenceResult> all;
  std::size_t passed = 0;
  std::optional<double> counterexample;
  for (Family f : kAllFamilies) {
    all.push_back(self_reference_experiment(setup, f));
    const auto& s = all.back();
    const bool equality = s.gap_at_gamma_star <= 1e-8;
    const bool ok = !s.first_violation && equality;
    Json o;
    o["distribution"] = s.distribution;
    o["gamma_star"] = io::number(s.gamma_star);
    o["gap_at_gamma_star"] = io::number(s.gap_at_gamma_star);
    o["worst_gap"] = io::number(s.worst_gap);
    o["first_violation_gamma"] = io::optional_number(s.first_violation);
    o["pass"] = ok;
    rows.push_back(o);
    passed += ok ? 1 : 0;
    if (!ok && !counterexample) counterexample = s.first_violation ? *s.first_violation : s.gamma_star;
  }
  j["distributions"] = rows;
  const bool ok = passed == all.size();
  j["verdicts"] = Json::array({"p^s_mean >= p^s_certain: " + std::string(ok ? "PASS" : "FAIL") + " (" +
                               std::to_string(passed) + "/" + std::to_string(all.size()) +
                               " distributions)"});
  j["pass"] = ok;
  if (counterexample) j["first_counterexample_gamma"] = io::number(*counterexample);
  std::vector<const ExperimentSeries*> ptrs;
  for (const auto& s : all) {
    ptrs.push_back(&s.at_mean);
    ptrs.push_back(&s.at_certain);
  }
  write_file(c, "series.csv", series_csv(ptrs));
  emit(c, "summary.json", j);
  return ok ? kExitOk : kExitViolation;
}

int cmd_experiment(const Common& c, const std::string& which) {
  const RunConfig cfg = load(c);
  if (which == "fourfold") return run_fourfold(c, cfg);
  if (which == "mixed") return run_mixed(c, cfg);
  return run_selfref(c, cfg);
}

// ---------------------------------------------------------------------------

int cmd_estimate(const Common& c, const std::string& data_path, const std::string& which) {
  const RunConfig cfg = load(c);
  const auto table = io::read_csv_file(data_path);
  EstimationResult r;
  if (which == "logit") {
    MixedLogitSpec spec = cfg.logit;
    spec.seed = cfg.seed;
    r = fit_mixed_logit_msl(io::read_choices(table), spec);
  } else {
    r = fit_cpt_nls(io::read_certainty_equivalents(table), cfg.cpt_init, cfg.cpt_bounds, cfg.cpt_fit);
    r.seed = cfg.seed;
  }
  Json j = io::to_json(r);
  j["command"] = "estimate";
  emit(c, "estimate-" + which + ".json", j);
  if (!r.converged) {
    std::cerr << "estimation did not converge: " << r.message << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_detect_effects(const Common& c, const std::string& lottery_path) {
  const RunConfig cfg = load(c);
  const auto rows = io::read_lotteries(io::read_csv_file(lottery_path));
  Json j = io::to_json(detect_effects(rows, cfg.detectors));
  j["command"] = "detect-effects";
  emit(c, "effects.json", j);
  return kExitOk;
}

int cmd_simulate(const Common& c, const std::string& which) {
  if (c.out_dir.empty()) throw ParseError("simulate needs --out");
  const RunConfig cfg = load(c);
  const auto& sim = cfg.simulation;
  Json j = header("simulate", cfg);
  Json files = Json::array();
  if (which == "all" || which == "choice") {
    const auto obs = simulate::simulate_choices(sim.choice, cfg.seed);
    std::ostringstream out;
    io::write_choices(out, obs);
    write_file(c, "choice.csv", out.str());
    files.push_back("choice.csv");
  }
  if (which == "all" || which == "ce") {
    const auto obs = simulate::simulate_certainty_equivalents(sim.ce, cfg.cpt, cfg.seed);
    std::ostringstream out;
    io::write_certainty_equivalents(out, obs);
    write_file(c, "ce.csv", out.str());
    files.push_back("ce.csv");
  }
  if (which == "all" || which == "lottery") {
    std::vector<CptParams> agents;
    simulate::LotteryDesign design = sim.lottery;
    if (sim.population == PopulationKind::Rational) {
      agents.assign(sim.lottery_respondents, CptParams::neutral());
      design.noise = 0.0;
    } else {
      simulate::CptPopulation pop = sim.spread;
      pop.mean = cfg.cpt;
      agents = simulate::draw_agents(pop, sim.lottery_respondents, cfg.seed);
    }
    const auto rows = simulate::simulate_lotteries(agents, design, cfg.seed);
    std::ostringstream out;
    io::write_lotteries(out, rows);
    write_file(c, "lottery.csv", out.str());
    files.push_back("lottery.csv");
  }
  j["files"] = files;
  emit(c, "simulate.json", j);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Utility theory and cumulative prospect theory models of mode choice"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON run configuration")->required();
    sub->add_option("--out", common.out_dir, "directory for output files");
    sub->add_option("--seed", common.seed, "override the configured seed");
  };

  std::string options_path, prospect_path, data_path, lottery_path;
  std::string which_experiment, which_estimate, which_simulate = "all";

  auto* choice = app.add_subcommand("choice-prob", "logit probabilities of trip options");
  add_common(choice);
  choice->add_option("--options", options_path, "options CSV")->required();

  auto* cpt = app.add_subcommand("cpt-utility", "subjective utility of a prospect");
  add_common(cpt);
  cpt->add_option("--prospect", prospect_path, "prospect JSON")->required();

  auto* exp = app.add_subcommand("experiment", "tariff sweeps with property verdicts");
  add_common(exp);
  exp->add_option("--which", which_experiment, "fourfold | mixed | selfref")
      ->required()
      ->check(CLI::IsMember({"fourfold", "mixed", "selfref"}));

  auto* est = app.add_subcommand("estimate", "fit a model to data");
  add_common(est);
  est->add_option("--data", data_path, "choice.csv (logit) or ce.csv (cpt)")->required();
  est->add_option("--which", which_estimate, "logit | cpt")
      ->required()
      ->check(CLI::IsMember({"logit", "cpt"}));

  auto* det = app.add_subcommand("detect-effects", "reflection, weighting and loss-aversion rates");
  add_common(det);
  det->add_option("--lotteries", lottery_path, "lottery CSV")->required();

  auto* sim = app.add_subcommand("simulate", "write synthetic data sets");
  add_common(sim);
  sim->add_option("--which", which_simulate, "choice | ce | lottery | all")
      ->check(CLI::IsMember({"choice", "ce", "lottery", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*choice) return cmd_choice_prob(common, options_path);
    if (*cpt) return cmd_cpt_utility(common, prospect_path);
    if (*exp) return cmd_experiment(common, which_experiment);
    if (*est) return cmd_estimate(common, data_path, which_estimate);
    if (*det) return cmd_detect_effects(common, lottery_path);
    if (*sim) return cmd_simulate(common, which_simulate);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    if (!e.diagnostics().empty()) std::cerr << "  " << e.diagnostics() << "\n";
    return kExitNumeric;
  } catch (const EstimationError& e) {
    std::cerr << "estimation failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

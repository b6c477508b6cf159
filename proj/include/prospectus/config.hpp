#pragma once

// Run configuration read from a JSON file. Every section is optional and falls
// back to the defaults below; unknown keys anywhere are rejected.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "prospectus/cpt.hpp"
#include "prospectus/detectors.hpp"
#include "prospectus/error.hpp"
#include "prospectus/estimation.hpp"
#include "prospectus/experiments.hpp"
#include "prospectus/simulate.hpp"

namespace prospectus {

enum class PopulationKind { Cpt, Rational };

struct SimulationConfig {
  simulate::ChoiceDesign choice;
  simulate::CeDesign ce{12, {0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95}, {10.0, 50.0}, 0.0, 0.05};
  simulate::LotteryDesign lottery;
  std::size_t lottery_respondents = 1000;
  PopulationKind population = PopulationKind::Cpt;
  simulate::CptPopulation spread;
};

struct RunConfig {
  std::uint64_t seed = 20240601;
  UtilityCoefficients utility = UtilityCoefficients::survey_means();
  CptParams cpt = CptParams::survey_means();
  Reference reference = StaticReference{0.0};
  std::optional<double> gamma;  // tariff that resolves a tariff-linked reference
  QuadratureOptions quadrature;
  bool single_alpha = true;     // experiments use alpha_gain in both regimes
  ExperimentSetup experiment;
  MixedLogitSpec logit = MixedLogitSpec::all_random();
  CptParams cpt_init{0.5, 0.5, 0.5, 0.5, 1.0};
  CptBounds cpt_bounds;
  CptFitOptions cpt_fit;
  DetectorOptions detectors;
  SimulationConfig simulation;

  // Experiment setup with the shared utility and CPT sections applied.
  ExperimentSetup experiment_setup() const {
    ExperimentSetup s = experiment;
    s.b = utility.b;
    s.cpt = single_alpha ? cpt.with_single_alpha(cpt.alpha_gain) : cpt;
    return s;
  }

  std::optional<double> tariff_term() const {
    if (!gamma) return std::nullopt;
    return utility.b * *gamma;
  }
};

namespace detail {

using ConfigJson = nlohmann::json;

// Reads the keys of one JSON object and rejects any it was not asked for.
class Section {
 public:
  Section(const ConfigJson& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError("'" + path_ + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ParseError("");
        out = v.get<bool>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ParseError("");
        out = v.get<std::string>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0 &&
                                       !v.is_number_unsigned())) {
          throw ParseError("");
        }
        out = v.get<T>();
      } else {
        if (!v.is_number()) throw ParseError("");
        out = v.get<T>();
      }
    } catch (const std::exception&) {
      throw ParseError("'" + path_ + "." + key + "' has the wrong type");
    }
  }

  template <class T>
  void read(const std::string& key, std::optional<T>& out) {
    if (!j_.contains(key)) {
      seen_.insert(key);
      return;
    }
    T v{};
    read(key, v);
    out = v;
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), path_ + "." + key);
  }

  const ConfigJson& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ParseError("unknown key '" + path_ + "." + it.key() + "'");
    }
  }

 private:
  const ConfigJson& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_cpt(Section s, CptParams& p) {
  s.read("alpha_gain", p.alpha_gain);
  s.read("alpha_loss", p.alpha_loss);
  s.read("beta_gain", p.beta_gain);
  s.read("beta_loss", p.beta_loss);
  s.read("lambda", p.lambda);
  s.finish();
}

inline void read_per_mode(Section s, std::array<double, 3>& v) {
  s.read("transit", v[0]);
  s.read("uberx", v[1]);
  s.read("srs", v[2]);
  s.finish();
}

}  // namespace detail

/// Parses and validates a configuration document.
inline RunConfig parse_config(const std::string& text) {
  detail::ConfigJson doc;
  try {
    doc = detail::ConfigJson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string msg = e.what();
    if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ParseError("invalid JSON: " + msg, line, column);
  }

  RunConfig c;
  detail::Section root(doc, "config");
  int version = 1;
  root.read("schema_version", version);
  if (version != 1) throw ParseError("unsupported schema_version " + std::to_string(version));
  root.read("seed", c.seed);

  if (root.has("utility")) {
    auto s = root.sub("utility");
    s.read("a_walk", c.utility.a_walk);
    s.read("a_wait", c.utility.a_wait);
    if (s.has("a_ride")) detail::read_per_mode(s.sub("a_ride"), c.utility.a_ride);
    s.read("b", c.utility.b);
    if (s.has("c")) detail::read_per_mode(s.sub("c"), c.utility.c);
    s.finish();
  }
  if (root.has("cpt")) detail::read_cpt(root.sub("cpt"), c.cpt);

  if (root.has("reference")) {
    auto s = root.sub("reference");
    std::string mode = "static";
    double value = 0.0;
    double x_tilde = 0.0;
    s.read("mode", mode);
    s.read("value", value);
    s.read("x_tilde", x_tilde);
    s.read("gamma", c.gamma);
    s.finish();
    if (mode == "static") {
      c.reference = StaticReference{value};
    } else if (mode == "tariff_linked") {
      c.reference = TariffLinkedReference{x_tilde};
    } else {
      throw ParseError("'config.reference.mode' must be static or tariff_linked");
    }
  }

  if (root.has("quadrature")) {
    auto s = root.sub("quadrature");
    s.read("abs_tol", c.quadrature.abs_tol);
    s.read("rel_tol", c.quadrature.rel_tol);
    s.read("max_refinements", c.quadrature.max_refinements);
    s.finish();
  }

  if (root.has("experiment")) {
    auto s = root.sub("experiment");
    auto& e = c.experiment;
    s.read("single_alpha", c.single_alpha);
    s.read("x_hi", e.x_hi);
    s.read("x_lo", e.x_lo);
    s.read("a_o", e.a_o);
    s.read("gamma_min", e.grid.gamma_min);
    s.read("gamma_max", e.grid.gamma_max);
    s.read("n_points", e.grid.n_points);
    s.read("p_nr", e.p_nr);
    s.read("mixed_points", e.mixed_points);
    s.read("static_reference", e.static_reference);
    s.read("bernoulli_p_lo", e.bernoulli_p_lo);
    s.read("poisson_lambda", e.poisson_lambda);
    s.read("poisson_k", e.poisson_k);
    s.read("normal_sigma", e.normal_sigma);
    s.finish();
  }

  if (root.has("estimation")) {
    auto s = root.sub("estimation");
    if (s.has("logit")) {
      auto l = s.sub("logit");
      l.read("n_draws", c.logit.n_draws);
      if (l.has("random")) {
        const auto& arr = l.raw("random");
        if (!arr.is_array()) throw ParseError("'config.estimation.logit.random' must be a list of names");
        c.logit.random.fill(false);
        for (const auto& name : arr) {
          if (!name.is_string()) throw ParseError("'config.estimation.logit.random' must be a list of names");
          bool found = false;
          for (std::size_t k = 0; k < kNumCoefficients; ++k) {
            if (name.get<std::string>() == kCoefficientNames[k]) {
              c.logit.random[k] = true;
              found = true;
            }
          }
          if (!found) throw ParseError("unknown coefficient '" + name.get<std::string>() + "' in random list");
        }
      }
      l.read("max_iterations", c.logit.optimizer.max_iterations);
      l.read("gradient_tolerance", c.logit.optimizer.gradient_tolerance);
      l.finish();
    }
    if (s.has("cpt")) {
      auto l = s.sub("cpt");
      if (l.has("init")) detail::read_cpt(l.sub("init"), c.cpt_init);
      if (l.has("lower")) detail::read_cpt(l.sub("lower"), c.cpt_bounds.lower);
      if (l.has("upper")) detail::read_cpt(l.sub("upper"), c.cpt_bounds.upper);
      l.read("starts", c.cpt_fit.starts);
      l.read("max_iterations", c.cpt_fit.max_iterations);
      l.finish();
    }
    s.finish();
  }

  if (root.has("detectors")) {
    auto s = root.sub("detectors");
    s.read("tolerance", c.detectors.tolerance);
    s.read("overweight_margin", c.detectors.overweight_margin);
    s.finish();
  }

  if (root.has("simulation")) {
    auto s = root.sub("simulation");
    auto& m = c.simulation;
    s.read("choice_respondents", m.choice.respondents);
    s.read("choice_tasks", m.choice.tasks);
    s.read("ce_respondents", m.ce.respondents);
    s.read("ce_noise", m.ce.noise);
    s.read("lottery_respondents", m.lottery_respondents);
    s.read("lottery_noise", m.lottery.noise);
    s.read("mixed_gain_cap", m.lottery.mixed_gain_cap);
    std::string population = "cpt";
    s.read("population", population);
    if (population == "cpt") {
      m.population = PopulationKind::Cpt;
    } else if (population == "rational") {
      m.population = PopulationKind::Rational;
    } else {
      throw ParseError("'config.simulation.population' must be cpt or rational");
    }
    if (s.has("cpt_sd")) detail::read_cpt(s.sub("cpt_sd"), m.spread.sd);
    s.finish();
  }
  root.finish();

  // Nested invariants, reported as configuration errors.
  try {
    c.utility.validate();
    c.cpt.validate();
    c.cpt_init.validate();
    c.experiment_setup().validate();
    if (c.quadrature.rel_tol <= 0.0 || c.quadrature.abs_tol < 0.0) {
      throw InvalidSetup("quadrature tolerances must be positive");
    }
    if (c.logit.n_draws < 100) throw InvalidSetup("estimation.logit.n_draws must be at least 100");
    if (c.cpt_fit.starts < 1) throw InvalidSetup("estimation.cpt.starts must be at least 1");
    if (c.simulation.ce.noise < 0.0 || c.simulation.lottery.noise < 0.0) {
      throw InvalidSetup("simulation noise must be non-negative");
    }
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid configuration: ") + e.what());
  } catch (const std::domain_error& e) {
    throw ParseError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace prospectus

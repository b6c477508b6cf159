#pragma once

// Synthetic respondents: mode choices from a random-coefficient logit,
// certainty equivalents and lottery answers from CPT agents. Respondent n
// draws from its own stream seeded with (seed, n), so any subset of the
// population is reproducible on its own.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "prospectus/choice.hpp"
#include "prospectus/cpt.hpp"
#include "prospectus/detectors.hpp"
#include "prospectus/estimation.hpp"
#include "prospectus/prospect.hpp"

namespace prospectus::simulate {

inline std::mt19937_64 respondent_stream(std::uint64_t seed, std::size_t n) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32)};
  return std::mt19937_64(seq);
}

inline std::string respondent_name(std::size_t n) { return "r" + std::to_string(n + 1); }

// ---------------------------------------------------------------------------
// Mode choice

struct ChoiceDesign {
  std::size_t respondents = 2000;
  std::size_t tasks = 8;
  CoefficientVector mean = to_vector(UtilityCoefficients::survey_means());
  CoefficientVector sd = survey_coefficient_sds();
};

/// One transit / UberX / SRS scenario with attributes drawn uniformly.
inline std::vector<TripOption> random_scenario(std::mt19937_64& rng) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  std::vector<TripOption> opts(3);
  opts[0] = {Mode::Transit, {u(0, 15), u(0, 15), u(10, 60)}, u(1, 4)};
  opts[1] = {Mode::UberX, {0.0, u(2, 10), u(8, 40)}, u(10, 40)};
  opts[2] = {Mode::Srs, {u(0, 5), u(3, 12), u(10, 50)}, u(6, 25)};
  return opts;
}

/// Each respondent draws coefficients beta ~ N(mean, sd) once and answers all
/// tasks by maximizing utility plus i.i.d. Gumbel noise.
inline std::vector<ChoiceObservation> simulate_choices(const ChoiceDesign& design,
                                                       std::uint64_t seed) {
  std::vector<ChoiceObservation> out;
  out.reserve(design.respondents * design.tasks);
  for (std::size_t n = 0; n < design.respondents; ++n) {
    auto rng = respondent_stream(seed, n);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::extreme_value_distribution<double> gumbel(0.0, 1.0);
    CoefficientVector beta{};
    for (std::size_t k = 0; k < kNumCoefficients; ++k) {
      beta[k] = design.mean[k] + design.sd[k] * normal(rng);
    }
    for (std::size_t t = 0; t < design.tasks; ++t) {
      ChoiceObservation obs;
      obs.respondent_id = respondent_name(n);
      obs.options = random_scenario(rng);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < obs.options.size(); ++j) {
        const auto x = trip_features(obs.options[j]);
        double v = gumbel(rng);
        for (std::size_t k = 0; k < kNumCoefficients; ++k) v += beta[k] * x[k];
        if (v > best) {
          best = v;
          obs.chosen = j;
        }
      }
      out.push_back(std::move(obs));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Certainty equivalents

struct CeDesign {
  std::size_t respondents = 1;
  std::vector<double> probabilities{0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95};
  std::vector<double> magnitudes{10.0, 50.0};
  double reference = 0.0;
  double noise = 0.0;  // relative standard deviation applied to CE - R
};

/// Gain items (R, R + M), loss items (R - M, R) and mixed items (R - M, R + M)
/// at every probability, answered by one agent per respondent.
inline std::vector<CertaintyEquivalentObservation> simulate_certainty_equivalents(
    const CeDesign& design, const CptParams& params, std::uint64_t seed) {
  params.validate();
  std::vector<CertaintyEquivalentObservation> out;
  const double r = design.reference;
  for (std::size_t n = 0; n < design.respondents; ++n) {
    auto rng = respondent_stream(seed, n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double p : design.probabilities) {
      for (double m : design.magnitudes) {
        for (const auto& [lo, hi] : {std::pair{r, r + m}, std::pair{r - m, r}, std::pair{r - m, r + m}}) {
          CertaintyEquivalentObservation o{respondent_name(n), lo, hi, p, r, 0.0};
          const double ce = predict_ce(o, params);
          const double e = design.noise > 0.0 ? design.noise * normal(rng) : 0.0;
          o.ce = std::clamp(r + (ce - r) * (1.0 + e), lo, hi);
          out.push_back(o);
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lotteries

struct LotteryDesign {
  std::vector<double> probabilities{0.1, 0.6, 0.9};
  std::vector<double> magnitudes{20.0, 100.0};
  double mixed_probability = 0.5;
  std::vector<double> mixed_losses{10.0, 50.0};
  double noise = 0.05;           // relative, on each stated amount
  double mixed_gain_cap = 20.0;  // largest gain offered, as a multiple of the loss
};

/// Truncated-normal spread of CPT parameters across agents.
struct CptPopulation {
  CptParams mean = CptParams::survey_means();
  CptParams sd{0.1828, 0.0448, 0.0985, 0.1906, 25.8554};
  CptParams lower{0.05, 0.05, 0.05, 0.05, 0.5};
  CptParams upper{1.0, 1.0, 1.0, 1.0, 100.0};
};

inline CptParams draw_agent(const CptPopulation& pop, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](double m, double s, double lo, double hi) {
    if (s <= 0.0) return std::clamp(m, lo, hi);
    for (int k = 0; k < 1000; ++k) {
      const double v = m + s * normal(rng);
      if (v >= lo && v <= hi) return v;
    }
    return std::clamp(m, lo, hi);
  };
  return {draw(pop.mean.alpha_gain, pop.sd.alpha_gain, pop.lower.alpha_gain, pop.upper.alpha_gain),
          draw(pop.mean.alpha_loss, pop.sd.alpha_loss, pop.lower.alpha_loss, pop.upper.alpha_loss),
          draw(pop.mean.beta_gain, pop.sd.beta_gain, pop.lower.beta_gain, pop.upper.beta_gain),
          draw(pop.mean.beta_loss, pop.sd.beta_loss, pop.lower.beta_loss, pop.upper.beta_loss),
          draw(pop.mean.lambda, pop.sd.lambda, pop.lower.lambda, pop.upper.lambda)};
}

inline std::vector<CptParams> draw_agents(const CptPopulation& pop, std::size_t n,
                                          std::uint64_t seed) {
  std::vector<CptParams> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = respondent_stream(seed ^ 0x9e3779b97f4a7c15ULL, i);
    out.push_back(draw_agent(pop, rng));
  }
  return out;
}

/// Smallest gain G at which p G / (1 - p) -L is accepted: V-weighted gain
/// equals V-weighted loss.
inline double acceptable_gain(double p, double loss, const CptParams& a) {
  const double wg = weighting_function(p, a.alpha_gain);
  const double wl = weighting_function(1.0 - p, a.alpha_loss);
  return std::pow(a.lambda * wl * std::pow(loss, a.beta_loss) / wg, 1.0 / a.beta_gain);
}

/// Answers of one agent to every lottery of the design. Stated amounts carry
/// multiplicative noise when the design asks for it.
inline std::vector<LotteryResponse> answer_lotteries(const std::string& id, const CptParams& a,
                                                     const LotteryDesign& design,
                                                     std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto jitter = [&]() { return design.noise > 0.0 ? 1.0 + design.noise * normal(rng) : 1.0; };
  std::vector<LotteryResponse> out;
  int k = 0;
  for (double p : design.probabilities) {
    for (double m : design.magnitudes) {
      const DiscreteProspect g = DiscreteProspect::normalized({{0.0, 1.0 - p}, {m, p}});
      const double ce_g = certainty_equivalent(subjective_utility_discrete(g, 0.0, a), 0.0, a);
      out.push_back({id, "g" + std::to_string(++k), Frame::Gain, p, m, 0.0,
                     std::clamp(ce_g * jitter(), 0.0, m)});
      const DiscreteProspect l = DiscreteProspect::normalized({{-m, p}, {0.0, 1.0 - p}});
      const double ce_l = certainty_equivalent(subjective_utility_discrete(l, 0.0, a), 0.0, a);
      out.push_back({id, "l" + std::to_string(k), Frame::Loss, p, 0.0, m,
                     std::clamp(ce_l * jitter(), -m, 0.0)});
    }
  }
  for (double loss : design.mixed_losses) {
    out.push_back({id, "m" + std::to_string(++k), Frame::Mixed, design.mixed_probability, 0.0, loss,
                   std::min(acceptable_gain(design.mixed_probability, loss, a) * jitter(),
                            design.mixed_gain_cap * loss)});
  }
  return out;
}

inline std::vector<LotteryResponse> simulate_lotteries(const std::vector<CptParams>& agents,
                                                       const LotteryDesign& design,
                                                       std::uint64_t seed) {
  std::vector<LotteryResponse> out;
  for (std::size_t n = 0; n < agents.size(); ++n) {
    auto rng = respondent_stream(seed, n);
    auto rows = answer_lotteries(respondent_name(n), agents[n], design, rng);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

}  // namespace prospectus::simulate

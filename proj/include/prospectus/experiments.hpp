#pragma once

// Tariff sweeps over an uncertain SRS prospect and a certain alternative:
// fourfold risk attitudes, aversion to mixed prospects and the choice of
// reference point.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "prospectus/choice.hpp"
#include "prospectus/cpt.hpp"
#include "prospectus/error.hpp"
#include "prospectus/numeric.hpp"
#include "prospectus/prospect.hpp"

namespace prospectus {

struct TariffGrid {
  double gamma_min = 0.0;
  double gamma_max = 60.0;
  std::size_t n_points = 200;

  // n_points evenly spaced values over [gamma_min, gamma_max].
  std::vector<double> values() const { return linspace(gamma_min, gamma_max, n_points, true); }

  static std::vector<double> linspace(double lo, double hi, std::size_t n, bool include_hi) {
    std::vector<double> g(n);
    const double steps = static_cast<double>(include_hi ? n - 1 : n);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * (static_cast<double>(i) / steps);
    if (include_hi && n > 1) g.back() = hi;
    return g;
  }
};

enum class Family { Bernoulli, Poisson, Normal, Uniform };

inline constexpr std::array<Family, 4> kAllFamilies{Family::Bernoulli, Family::Poisson,
                                                    Family::Normal, Family::Uniform};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Bernoulli: return "bernoulli";
    case Family::Poisson: return "truncated_poisson";
    case Family::Normal: return "normal";
    case Family::Uniform: return "uniform";
  }
  return "?";
}

inline std::optional<Family> family_from_string(std::string_view s) {
  for (Family f : kAllFamilies) {
    if (s == to_string(f)) return f;
  }
  return std::nullopt;
}

struct ExperimentSetup {
  double x_hi = -5.0;  // best SRS outcome before the tariff term
  double x_lo = -9.0;  // worst SRS outcome before the tariff term
  double a_o = -7.0;   // objective utility of the certain alternative
  double b = -0.0518;
  CptParams cpt = CptParams::survey_means().with_single_alpha(CptParams::survey_means().alpha_gain);
  TariffGrid grid;
  double p_nr = 0.95;
  std::size_t mixed_points = 50;
  double static_reference = 0.0;

  // Shapes of the four outcome distributions on [x_lo, x_hi].
  double bernoulli_p_lo = 0.8;
  double poisson_lambda = 4.0;
  int poisson_k = 5;
  double normal_sigma = 4.0 / 6.0;

  void validate() const {
    if (!std::isfinite(x_lo) || !std::isfinite(x_hi) || !(x_lo < x_hi)) {
      throw InvalidSetup("setup needs finite x_lo < x_hi");
    }
    if (!std::isfinite(a_o)) throw InvalidSetup("A_o must be finite");
    if (!std::isfinite(b) || b == 0.0) throw InvalidSetup("tariff coefficient b must be finite and non-zero");
    if (b > 0.0) throw InvalidSetup("tariff coefficient b must be negative");
    cpt.validate();
    if (grid.n_points < 2) throw InvalidSetup("tariff grid needs at least 2 points");
    if (!std::isfinite(grid.gamma_min) || !std::isfinite(grid.gamma_max) ||
        !(grid.gamma_min < grid.gamma_max)) {
      throw InvalidSetup("tariff grid needs finite gamma_min < gamma_max");
    }
    if (!(p_nr > 0.5 && p_nr < 1.0)) throw InvalidSetup("p_nr must lie in (0.5, 1)");
    if (mixed_points < 2) throw InvalidSetup("mixed_points must be at least 2");
    if (!std::isfinite(static_reference)) throw InvalidSetup("static reference must be finite");
    if (!(bernoulli_p_lo > 0.0 && bernoulli_p_lo < 1.0)) {
      throw InvalidSetup("bernoulli_p_lo must lie in (0, 1)");
    }
    if (!(poisson_lambda > 0.0) || !std::isfinite(poisson_lambda)) {
      throw InvalidSetup("poisson_lambda must be positive");
    }
    if (poisson_k < 1) throw InvalidSetup("poisson_k must be at least 1");
    if (!(normal_sigma > 0.0) || !std::isfinite(normal_sigma)) {
      throw InvalidSetup("normal_sigma must be positive");
    }
  }

  // Outcome distribution over x, before the tariff term is added.
  ContinuousProspect distribution(Family f) const {
    switch (f) {
      case Family::Bernoulli: return ContinuousProspect(BernoulliTwoPoint{x_lo, x_hi, bernoulli_p_lo});
      case Family::Poisson:
        return ContinuousProspect(TruncatedPoisson{poisson_lambda, poisson_k, x_hi, x_lo, 0.0});
      case Family::Normal:
        return ContinuousProspect(Normal{0.5 * (x_lo + x_hi), normal_sigma, x_lo, x_hi});
      case Family::Uniform: return ContinuousProspect(Uniform{x_lo, x_hi});
    }
    throw InvalidSetup("unknown distribution family");
  }
};

struct ExperimentRecord {
  double gamma = 0.0;
  double reference = 0.0;
  double u_o = 0.0;  // objective utility of the uncertain prospect
  double u_s = 0.0;  // its subjective utility
  double a_o = 0.0;
  double a_s = 0.0;
  double ra = 0.0;   // relative attractiveness
  double p_o = 0.0;
  double p_s = 0.0;
};

struct ExperimentSeries {
  std::string experiment;
  std::string quadrant;        // fourfold only
  std::string variant;         // fourfold only
  std::string reference_mode;  // static, tariff_linked, mean, certain, ...
  std::string distribution;
  std::vector<ExperimentRecord> records;
};

// Evaluates one grid point: SRS prospect x + b*gamma against the certain
// alternative, both valued from reference r.
inline ExperimentRecord evaluate_point(const ContinuousProspect& x, double gamma, double reference,
                                       const ExperimentSetup& setup, const CptParams& params) {
  const double shift = setup.b * gamma;
  const ContinuousProspect u = x.shifted(shift);
  ExperimentRecord r;
  r.gamma = gamma;
  r.reference = reference;
  r.u_o = u.mean();
  r.u_s = subjective_utility_continuous(u, reference, params);
  r.a_o = setup.a_o;
  r.a_s = certain_prospect_subjective_value(setup.a_o, reference, params);
  r.ra = (r.u_o - r.a_o) - (r.u_s - r.a_s);
  r.p_o = objective_acceptance_probability(r.u_o, r.a_o);
  r.p_s = numeric::logistic(r.u_s - r.a_s);
  return r;
}

// ---------------------------------------------------------------------------
// Fourfold pattern

enum class Quadrant { HighProbGain, HighProbLoss, LowProbGain, LowProbLoss };

inline constexpr std::array<Quadrant, 4> kAllQuadrants{Quadrant::HighProbGain, Quadrant::HighProbLoss,
                                                       Quadrant::LowProbGain, Quadrant::LowProbLoss};

inline std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::HighProbGain: return "HP-gain";
    case Quadrant::HighProbLoss: return "HP-loss";
    case Quadrant::LowProbGain: return "LP-gain";
    case Quadrant::LowProbLoss: return "LP-loss";
  }
  return "?";
}

enum class Variant { GeneralCpt, DistortionOnly };

inline std::string_view to_string(Variant v) {
  return v == Variant::GeneralCpt ? "general-CPT" : "distortion-only";
}

inline bool is_gain_quadrant(Quadrant q) {
  return q == Quadrant::HighProbGain || q == Quadrant::LowProbGain;
}

/// Gain quadrants put R at the worst outcome, loss quadrants at the best; the
/// other outcome then occurs with p_nr (high) or 1 - p_nr (low).
inline double fourfold_poisson_rate(Quadrant q, double p_nr) {
  const double ratio = p_nr / (1.0 - p_nr);
  switch (q) {
    case Quadrant::HighProbGain: return 1.0 / ratio;
    case Quadrant::HighProbLoss: return ratio;
    case Quadrant::LowProbGain: return ratio;
    case Quadrant::LowProbLoss: return 1.0 / ratio;
  }
  return 1.0;
}

/// Tariffs in the configured grid for which A_o sits on the same side of R as
/// the non-reference outcome. Throws if none remain.
inline std::vector<double> fourfold_admissible_grid(const ExperimentSetup& setup, Quadrant q) {
  double lo = setup.grid.gamma_min;
  double hi = setup.grid.gamma_max;
  bool include_hi = true;
  // R = x_tilde + b*gamma, so the regime boundary is gamma = (A_o - x_tilde)/b.
  if (is_gain_quadrant(q)) {
    const double edge = (setup.a_o - setup.x_lo) / setup.b;  // A_o >= R for gamma >= edge
    lo = std::max(lo, edge);
    if (!(lo < hi)) {
      throw InvalidSetup("no admissible tariff: A_o >= x_lo + b*gamma fails on the whole grid");
    }
  } else {
    const double edge = (setup.a_o - setup.x_hi) / setup.b;  // A_o < R for gamma < edge
    if (edge <= hi) {
      hi = edge;
      include_hi = false;
    }
    if (!(lo < hi)) {
      throw InvalidSetup("no admissible tariff: A_o < x_hi + b*gamma fails on the whole grid");
    }
  }
  return TariffGrid::linspace(lo, hi, setup.grid.n_points, include_hi);
}

inline ExperimentSeries fourfold_experiment(const ExperimentSetup& setup, Quadrant q, Variant v) {
  setup.validate();
  const CptParams params = v == Variant::DistortionOnly ? setup.cpt.distortion_only() : setup.cpt;
  const ContinuousProspect x(
      TruncatedPoisson{fourfold_poisson_rate(q, setup.p_nr), 1, setup.x_hi, setup.x_lo, 0.0});
  const double x_tilde = is_gain_quadrant(q) ? setup.x_lo : setup.x_hi;

  ExperimentSeries s;
  s.experiment = "fourfold";
  s.quadrant = to_string(q);
  s.variant = to_string(v);
  s.reference_mode = "tariff_linked";
  s.distribution = "bernoulli";
  for (double g : fourfold_admissible_grid(setup, q)) {
    s.records.push_back(evaluate_point(x, g, x_tilde + setup.b * g, setup, params));
  }
  return s;
}

// +1 if RA > tol everywhere, -1 if RA < -tol everywhere, 0 otherwise.
inline int ra_sign(const ExperimentSeries& s, double tol = 0.0) {
  bool pos = true;
  bool neg = true;
  for (const auto& r : s.records) {
    pos = pos && r.ra > tol;
    neg = neg && r.ra < -tol;
  }
  return pos ? 1 : (neg ? -1 : 0);
}

// Number of sign changes of RA along the grid, ignoring exact zeros.
inline int ra_sign_changes(const ExperimentSeries& s) {
  int changes = 0;
  int last = 0;
  for (const auto& r : s.records) {
    const int sg = (r.ra > 0.0) - (r.ra < 0.0);
    if (sg == 0) continue;
    if (last != 0 && sg != last) ++changes;
    last = sg;
  }
  return changes;
}

// ---------------------------------------------------------------------------
// Loss aversion threshold

struct LambdaStar {
  double lambda_star = 0.0;
  double below = 0.0;         // bracket end with U^s >= 0
  double above = 0.0;         // bracket end with U^s < 0
  double u_s_below = 0.0;
  double u_s_above = 0.0;
};

/// Subjective utility at the mean reference, as a function of lambda.
template <class Prospect>
double subjective_at_mean(const Prospect& prospect, const CptParams& params) {
  if constexpr (std::is_same_v<Prospect, DiscreteProspect>) {
    return subjective_utility_discrete(prospect, expected_utility(prospect), params);
  } else {
    return subjective_utility_continuous(prospect, prospect.mean(), params);
  }
}

/// Smallest lambda beyond which U^s at R = mean is negative, by bisection.
template <class Prospect>
LambdaStar lambda_star_search(const Prospect& prospect, const CptParams& base,
                              std::pair<double, double> lambda_range = {1e-6, 1e6},
                              double tol = 1e-10) {
  base.validate();
  bool degenerate = false;
  if constexpr (std::is_same_v<Prospect, DiscreteProspect>) {
    degenerate = prospect.size() < 2;
  } else {
    auto [lo, hi] = prospect.support();
    degenerate = !(lo < hi);
  }
  if (degenerate) {
    throw InvalidProspect("lambda* needs a prospect with at least two outcomes");
  }
  auto [lo, hi] = lambda_range;
  if (!(lo > 0.0 && lo < hi) || !std::isfinite(hi)) {
    throw DomainError("lambda range must satisfy 0 < lo < hi < inf");
  }
  auto f = [&](double lambda) {
    CptParams p = base;
    p.lambda = lambda;
    return subjective_at_mean(prospect, p);
  };
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  if (!(f_lo >= 0.0 && f_hi < 0.0)) {
    throw NumericError("U^s at the mean reference does not change sign over the lambda range",
                       "lambda_lo=" + numeric::format_number(lo) + " U^s=" +
                           numeric::format_number(f_lo) + " lambda_hi=" +
                           numeric::format_number(hi) + " U^s=" + numeric::format_number(f_hi));
  }
  // The sign test keeps the invariant f(below) >= 0 > f(above).
  auto sign = [&](double lambda) { return f(lambda) >= 0.0 ? 1.0 : -1.0; };
  auto done = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  const auto [below, above] = boost::math::tools::bisect(sign, lo, hi, done);
  LambdaStar out;
  out.below = below;
  out.above = above;
  out.lambda_star = 0.5 * (below + above);
  out.u_s_below = f(below);
  out.u_s_above = f(above);
  return out;
}

// ---------------------------------------------------------------------------
// Mixed prospects: R = mean of the SRS prospect

struct TariffBounds {
  double gamma_lower = 0.0;
  double gamma_upper = numeric::kInf;
  double u_s_at_mean = 0.0;  // gamma-independent
  double x_mean = 0.0;
};

/// [gamma_lower, gamma_upper) on which the certain alternative is a non-loss
/// relative to the mean and p^s < p^o.
inline TariffBounds mixed_prospect_tariff_bounds(const ExperimentSetup& setup,
                                                 const ContinuousProspect& x) {
  setup.validate();
  TariffBounds tb;
  tb.x_mean = x.mean();
  tb.gamma_lower = (setup.a_o - tb.x_mean) / setup.b + 0.0;  // no -0
  tb.u_s_at_mean = subjective_utility_continuous(x, tb.x_mean, setup.cpt);
  if (!(tb.u_s_at_mean < 0.0)) {
    throw DomainError("mixed-prospect aversion needs U^s < 0 at the mean reference; got " +
                      numeric::format_number(tb.u_s_at_mean));
  }
  const double beta = setup.cpt.beta_gain;
  if (beta == 1.0) return tb;

  // With d = A_o - (x_mean + b*gamma) >= 0, p^s < p^o iff h(d) > 0.
  const double c = tb.u_s_at_mean;
  auto h = [&](double d) { return std::pow(d, beta) - d - c; };
  double hi = 1.0;
  int expansions = 0;
  while (h(hi) > 0.0) {
    hi *= 2.0;
    if (++expansions > 200) {
      throw NumericError("no sign change while bracketing the upper tariff bound",
                         "bracket=[0, " + numeric::format_number(hi) + "]");
    }
  }
  const double lo = hi == 1.0 ? 0.0 : 0.5 * hi;
  if (!(h(lo) > 0.0 && h(hi) <= 0.0)) {
    throw NumericError("upper tariff bound bracket has no sign change",
                       "bracket=[" + numeric::format_number(lo) + ", " +
                           numeric::format_number(hi) + "] h=" + numeric::format_number(h(lo)) +
                           "," + numeric::format_number(h(hi)));
  }
  std::uintmax_t iters = 200;
  const auto [a, z] = boost::math::tools::toms748_solve(
      h, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  const double d_star = a;  // h(a) > 0 keeps gamma_upper inside the strict region
  tb.gamma_upper = tb.gamma_lower + d_star / std::abs(setup.b);
  (void)z;
  return tb;
}

struct MixedResult {
  TariffBounds bounds;
  ExperimentSeries series;
  std::optional<double> first_violation;  // gamma where p^s >= p^o
  std::optional<double> first_non_decrease;
};

/// p^o and p^s over [gamma_lower, gamma_upper), or up to gamma_lower plus the
/// configured grid width when the upper bound is infinite.
inline MixedResult mixed_prospect_experiment(const ExperimentSetup& setup, Family family) {
  const ContinuousProspect x = setup.distribution(family);
  MixedResult out;
  out.bounds = mixed_prospect_tariff_bounds(setup, x);
  const double lo = out.bounds.gamma_lower;
  const bool finite = std::isfinite(out.bounds.gamma_upper);
  const double hi = finite ? out.bounds.gamma_upper
                           : lo + (setup.grid.gamma_max - setup.grid.gamma_min);
  out.series.experiment = "mixed";
  out.series.reference_mode = "mean";
  out.series.distribution = to_string(family);
  for (double g : TariffGrid::linspace(lo, hi, setup.mixed_points, !finite)) {
    const double r = out.bounds.x_mean + setup.b * g;
    out.series.records.push_back(evaluate_point(x, g, r, setup, setup.cpt));
  }
  const auto& rec = out.series.records;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    if (!out.first_violation && !(rec[i].p_s < rec[i].p_o)) out.first_violation = rec[i].gamma;
    if (i > 0 && !out.first_non_decrease &&
        !(rec[i].p_s < rec[i - 1].p_s && rec[i].p_o < rec[i - 1].p_o)) {
      out.first_non_decrease = rec[i].gamma;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference at the mean versus reference at the certain alternative

struct SelfReferenceResult {
  std::string distribution;
  double gamma_star = 0.0;
  double gap_at_gamma_star = 0.0;  // |p^s_mean - p^s_certain| at gamma_star
  ExperimentSeries at_mean;
  ExperimentSeries at_certain;
  std::optional<double> first_violation;  // first gamma with p^s_mean < p^s_certain
  double worst_gap = 0.0;                 // min over the grid of p^s_mean - p^s_certain
};

inline SelfReferenceResult self_reference_experiment(const ExperimentSetup& setup, Family family) {
  setup.validate();
  const ContinuousProspect x = setup.distribution(family);
  const double x_mean = x.mean();
  SelfReferenceResult out;
  out.distribution = to_string(family);
  out.gamma_star = (setup.a_o - x_mean) / setup.b + 0.0;
  out.at_mean = {"selfref", "", "", "mean", out.distribution, {}};
  out.at_certain = {"selfref", "", "", "certain", out.distribution, {}};

  const auto at_star_mean = evaluate_point(x, out.gamma_star, x_mean + setup.b * out.gamma_star,
                                           setup, setup.cpt);
  const auto at_star_certain = evaluate_point(x, out.gamma_star, setup.a_o, setup, setup.cpt);
  out.gap_at_gamma_star = std::abs(at_star_mean.p_s - at_star_certain.p_s);

  out.worst_gap = numeric::kInf;
  for (double g : setup.grid.values()) {
    const auto m = evaluate_point(x, g, x_mean + setup.b * g, setup, setup.cpt);
    const auto c = evaluate_point(x, g, setup.a_o, setup, setup.cpt);
    out.at_mean.records.push_back(m);
    out.at_certain.records.push_back(c);
    const double gap = m.p_s - c.p_s;
    out.worst_gap = std::min(out.worst_gap, gap);
    if (!out.first_violation && gap < 0.0) out.first_violation = g;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monotonicity of p^s in the tariff

enum class ReferenceMode { Static, TariffLinked };

inline std::string_view to_string(ReferenceMode m) {
  return m == ReferenceMode::Static ? "static" : "tariff_linked";
}

struct MonotonicityReport {
  ReferenceMode mode = ReferenceMode::Static;
  bool strictly_decreasing = true;
  std::optional<double> first_violation;
  ExperimentSeries series;
};

/// Two-point SRS prospect against the certain alternative. Static mode uses
/// the configured R; tariff-linked mode uses R = mean(x) + b*gamma.
inline MonotonicityReport verify_monotonicity(const ExperimentSetup& setup, ReferenceMode mode,
                                              const std::vector<double>& grid) {
  setup.validate();
  const ContinuousProspect x = setup.distribution(Family::Bernoulli);
  const double x_mean = x.mean();
  MonotonicityReport rep;
  rep.mode = mode;
  rep.series = {"monotonicity", "", "", std::string(to_string(mode)), "bernoulli", {}};
  for (double g : grid) {
    const double r = mode == ReferenceMode::Static ? setup.static_reference : x_mean + setup.b * g;
    rep.series.records.push_back(evaluate_point(x, g, r, setup, setup.cpt));
  }
  const auto& rec = rep.series.records;
  for (std::size_t i = 1; i < rec.size(); ++i) {
    if (!(rec[i].p_s < rec[i - 1].p_s)) {
      rep.strictly_decreasing = false;
      rep.first_violation = rec[i].gamma;
      break;
    }
  }
  return rep;
}

}  // namespace prospectus

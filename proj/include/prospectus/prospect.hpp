#pragma once

// Domain types shared by every module: trip attributes, utility and CPT
// parameters, reference points and outcome distributions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "prospectus/error.hpp"
#include "prospectus/numeric.hpp"

namespace prospectus {

enum class Mode { Transit = 0, UberX = 1, Srs = 2 };

inline constexpr std::array<Mode, 3> kAllModes{Mode::Transit, Mode::UberX, Mode::Srs};

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Transit: return "transit";
    case Mode::UberX: return "uberx";
    case Mode::Srs: return "srs";
  }
  return "?";
}

inline std::optional<Mode> mode_from_string(std::string_view s) {
  for (Mode m : kAllModes) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

inline std::size_t index(Mode m) { return static_cast<std::size_t>(m); }

/// Walking, waiting and in-vehicle minutes of one trip.
struct TripTimes {
  double walk = 0.0;
  double wait = 0.0;
  double ride = 0.0;

  void validate() const {
    for (double t : {walk, wait, ride}) {
      if (!std::isfinite(t) || t < 0.0) {
        throw DomainError("trip times must be finite and non-negative");
      }
    }
  }

  // True when every component of *this is <= the matching component of other.
  bool dominated_by(const TripTimes& other) const {
    return walk <= other.walk && wait <= other.wait && ride <= other.ride;
  }
};

/// Linear trip-utility weights. Time weights are per minute, b is per dollar,
/// c is the mode constant relative to transit (c[Transit] is pinned to 0).
struct UtilityCoefficients {
  double a_walk = 0.0;
  double a_wait = 0.0;
  std::array<double, 3> a_ride{};
  double b = 0.0;
  std::array<double, 3> c{};

  void validate() const {
    auto negative = [](double v) { return std::isfinite(v) && v < 0.0; };
    if (!negative(a_walk) || !negative(a_wait) || !negative(b)) {
      throw DomainError("a_walk, a_wait and b must be finite and strictly negative");
    }
    for (double a : a_ride) {
      if (!negative(a)) throw DomainError("every a_ride entry must be strictly negative");
    }
    for (double v : c) {
      if (!std::isfinite(v)) throw DomainError("mode constants must be finite");
    }
    if (c[index(Mode::Transit)] != 0.0) {
      throw DomainError("c_transit is the baseline and must be 0");
    }
  }

  double ride(Mode m) const { return a_ride[index(m)]; }
  double constant(Mode m) const { return c[index(m)]; }

  // Mean column of the mixed-logit estimates for the Boston survey.
  static UtilityCoefficients survey_means() {
    UtilityCoefficients k;
    k.a_walk = -0.0586;
    k.a_wait = -0.0113;
    k.a_ride = {-0.0105, -0.0086, -0.0186};
    k.b = -0.0518;
    k.c = {0.0, -2.5926, -2.2230};
    return k;
  }
};

/// Cumulative prospect theory preference parameters.
struct CptParams {
  double alpha_gain = 1.0;   // probability distortion for gains
  double alpha_loss = 1.0;   // probability distortion for losses
  double beta_gain = 1.0;    // curvature for gains
  double beta_loss = 1.0;    // curvature for losses
  double lambda = 1.0;       // loss aversion

  void validate() const {
    auto unit = [](double v) { return std::isfinite(v) && v > 0.0 && v <= 1.0; };
    if (!unit(alpha_gain) || !unit(alpha_loss)) throw DomainError("alpha must lie in (0, 1]");
    if (!unit(beta_gain) || !unit(beta_loss)) throw DomainError("beta must lie in (0, 1]");
    if (!std::isfinite(lambda) || lambda <= 0.0) throw DomainError("lambda must be positive");
  }

  // Same alpha in both regimes.
  CptParams with_single_alpha(double alpha) const {
    CptParams p = *this;
    p.alpha_gain = alpha;
    p.alpha_loss = alpha;
    return p;
  }

  // beta = lambda = 1: only the weighting function remains.
  CptParams distortion_only() const {
    CptParams p = *this;
    p.beta_gain = 1.0;
    p.beta_loss = 1.0;
    p.lambda = 1.0;
    return p;
  }

  // Expected-utility agent.
  static CptParams neutral() { return {}; }

  // Mean row of the certainty-equivalent estimates.
  static CptParams survey_means() { return {0.4456, 0.1315, 0.2166, 0.3550, 20.0494}; }

  bool operator==(const CptParams&) const = default;
};

struct StaticReference {
  double value = 0.0;
};

// R = x_tilde + b * gamma, resolved once the tariff term b * gamma is known.
struct TariffLinkedReference {
  double x_tilde = 0.0;
};

using Reference = std::variant<StaticReference, TariffLinkedReference>;

inline double resolve(const Reference& ref, std::optional<double> tariff_term = std::nullopt) {
  double r = 0.0;
  if (const auto* s = std::get_if<StaticReference>(&ref)) {
    r = s->value;
  } else {
    const auto& t = std::get<TariffLinkedReference>(ref);
    if (!tariff_term) {
      throw DomainError("tariff-linked reference needs the tariff term b*gamma to resolve");
    }
    r = t.x_tilde + *tariff_term;
  }
  if (!std::isfinite(r)) throw DomainError("resolved reference point is not finite");
  return r;
}

struct Outcome {
  double utility = 0.0;
  double probability = 0.0;
};

/// Finitely many outcomes with strictly ascending utilities and positive
/// probabilities summing to one.
class DiscreteProspect {
 public:
  static constexpr double kSumTolerance = 1e-12;

  // Strict: rejects unsorted, duplicated, zero-probability or unnormalized input.
  explicit DiscreteProspect(std::vector<Outcome> outcomes) : outcomes_(std::move(outcomes)) {
    if (outcomes_.empty()) throw InvalidProspect("prospect has no outcomes");
    std::vector<double> probs;
    probs.reserve(outcomes_.size());
    for (std::size_t i = 0; i < outcomes_.size(); ++i) {
      const auto& o = outcomes_[i];
      if (!std::isfinite(o.utility)) throw InvalidProspect("outcome utility is not finite");
      if (!(o.probability > 0.0 && o.probability <= 1.0)) {
        throw InvalidProspect("outcome probability must lie in (0, 1]");
      }
      if (i > 0 && !(outcomes_[i - 1].utility < o.utility)) {
        throw InvalidProspect("outcomes must be strictly ascending in utility");
      }
      probs.push_back(o.probability);
    }
    if (std::abs(numeric::stable_sum(probs) - 1.0) > kSumTolerance) {
      throw InvalidProspect("outcome probabilities do not sum to 1");
    }
  }

  // Sorts, merges equal utilities and drops zero-probability entries before
  // applying the strict checks.
  static DiscreteProspect normalized(std::vector<Outcome> raw) {
    for (const auto& o : raw) {
      if (!std::isfinite(o.utility) || !(o.probability >= 0.0)) {
        throw InvalidProspect("outcome has non-finite utility or negative probability");
      }
    }
    std::erase_if(raw, [](const Outcome& o) { return o.probability == 0.0; });
    std::stable_sort(raw.begin(), raw.end(),
                     [](const Outcome& a, const Outcome& b) { return a.utility < b.utility; });
    std::vector<Outcome> merged;
    for (const auto& o : raw) {
      if (!merged.empty() && merged.back().utility == o.utility) {
        merged.back().probability += o.probability;
      } else {
        merged.push_back(o);
      }
    }
    return DiscreteProspect(std::move(merged));
  }

  static DiscreteProspect certain(double utility) { return DiscreteProspect({{utility, 1.0}}); }

  const std::vector<Outcome>& outcomes() const noexcept { return outcomes_; }
  std::size_t size() const noexcept { return outcomes_.size(); }

  // P(U <= u).
  double cdf(double u) const {
    std::vector<double> below;
    for (const auto& o : outcomes_) {
      if (o.utility <= u) below.push_back(o.probability);
    }
    return std::min(1.0, numeric::stable_sum(below));
  }

  DiscreteProspect shifted(double delta) const {
    std::vector<Outcome> out = outcomes_;
    for (auto& o : out) o.utility += delta;
    return DiscreteProspect(std::move(out));
  }

 private:
  std::vector<Outcome> outcomes_;
};

/// u_lo with probability p_lo, u_hi otherwise.
struct BernoulliTwoPoint {
  double u_lo = 0.0;
  double u_hi = 0.0;
  double p_lo = 0.5;
};

/// Poisson number of delays k = 0..K, truncated at K. k delays map to
/// x = x_hi - k (x_hi - x_lo) / K and utility x + tariff_term.
struct TruncatedPoisson {
  double lambda_p = 1.0;
  int K = 1;
  double x_hi = 0.0;
  double x_lo = -1.0;
  double tariff_term = 0.0;
};

/// Normal(mu, sigma) restricted and renormalized to [lo, hi].
struct Normal {
  double mu = 0.0;
  double sigma = 1.0;
  double lo = -numeric::kInf;
  double hi = numeric::kInf;

  static Normal truncated(double mu, double sigma, double width_in_sigmas = 6.0) {
    return {mu, sigma, mu - width_in_sigmas * sigma, mu + width_in_sigmas * sigma};
  }
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

inline double bernoulli_cdf(const BernoulliTwoPoint& d, double u) {
  if (!std::isfinite(u)) throw DomainError("bernoulli_cdf: utility is not finite");
  if (u < d.u_lo) return 0.0;
  if (u < d.u_hi) return d.p_lo;
  return 1.0;
}

/// Outcome distribution of the truncated-Poisson delay model, ascending in x.
inline DiscreteProspect truncated_poisson_pmf(double lambda_p, int K, double x_hi, double x_lo) {
  if (!(lambda_p > 0.0) || !std::isfinite(lambda_p)) {
    throw InvalidProspect("truncated Poisson rate must be positive and finite");
  }
  if (K < 1) throw InvalidProspect("truncated Poisson needs K >= 1");
  if (!(x_lo < x_hi) || !std::isfinite(x_lo) || !std::isfinite(x_hi)) {
    throw InvalidProspect("truncated Poisson needs finite x_lo < x_hi");
  }
  // lambda^k / k!, the common e^-lambda factor cancels in the normalization.
  std::vector<double> terms(static_cast<std::size_t>(K) + 1);
  terms[0] = 1.0;
  for (int k = 1; k <= K; ++k) {
    terms[k] = terms[k - 1] * lambda_p / k;
    if (terms[k] > 1e250) {
      for (int j = 0; j <= k; ++j) terms[j] *= 1e-250;
    }
  }
  const double z = numeric::stable_sum(terms);
  std::vector<Outcome> outcomes;
  outcomes.reserve(terms.size());
  const double step = (x_hi - x_lo) / K;
  for (int k = K; k >= 0; --k) {
    const double x = (k == K) ? x_lo : x_hi - k * step;
    outcomes.push_back({x, terms[k] / z});
  }
  return DiscreteProspect::normalized(std::move(outcomes));
}

/// One of the four outcome-distribution families used by the experiments.
class ContinuousProspect {
 public:
  using Distribution = std::variant<BernoulliTwoPoint, TruncatedPoisson, Normal, Uniform>;

  explicit ContinuousProspect(Distribution d) : dist_(std::move(d)) {
    std::visit([](const auto& x) { check(x); }, dist_);
    if (const auto* n = std::get_if<Normal>(&dist_)) {
      za_ = (n->lo - n->mu) / n->sigma;
      zb_ = (n->hi - n->mu) / n->sigma;
      // Z = Phi(zb) - Phi(za), evaluated on whichever side avoids cancellation.
      if (zb_ <= 0.0) {
        mass_ = numeric::std_normal_cdf(zb_) - numeric::std_normal_cdf(za_);
      } else if (za_ >= 0.0) {
        mass_ = numeric::std_normal_sf(za_) - numeric::std_normal_sf(zb_);
      } else {
        mass_ = 1.0 - numeric::std_normal_cdf(za_) - numeric::std_normal_sf(zb_);
      }
      if (!(mass_ > 0.0)) throw InvalidProspect("normal truncation window has no mass");
    } else if (const auto* p = std::get_if<TruncatedPoisson>(&dist_)) {
      atoms_ = truncated_poisson_pmf(p->lambda_p, p->K, p->x_hi, p->x_lo).shifted(p->tariff_term);
    } else if (const auto* b = std::get_if<BernoulliTwoPoint>(&dist_)) {
      if (b->u_lo == b->u_hi) {
        atoms_ = DiscreteProspect::certain(b->u_lo);
      } else {
        atoms_ = DiscreteProspect({{b->u_lo, b->p_lo}, {b->u_hi, 1.0 - b->p_lo}});
      }
    }
  }

  const Distribution& distribution() const noexcept { return dist_; }

  // Purely atomic families (Bernoulli, truncated Poisson).
  bool is_atomic() const noexcept { return atoms_.has_value(); }
  const DiscreteProspect& atoms() const {
    if (!atoms_) throw InvalidProspect("distribution has no atoms");
    return *atoms_;
  }

  std::pair<double, double> support() const {
    if (atoms_) return {atoms_->outcomes().front().utility, atoms_->outcomes().back().utility};
    if (const auto* n = std::get_if<Normal>(&dist_)) return {n->lo, n->hi};
    const auto& u = std::get<Uniform>(dist_);
    return {u.lo, u.hi};
  }

  bool bounded() const {
    auto [lo, hi] = support();
    return std::isfinite(lo) && std::isfinite(hi);
  }

  // P(U <= u).
  double cdf(double u) const {
    if (std::isnan(u)) throw DomainError("cdf: utility is NaN");
    if (atoms_) return atoms_->cdf(u);
    if (const auto* n = std::get_if<Normal>(&dist_)) {
      if (u <= n->lo) return 0.0;
      if (u >= n->hi) return 1.0;
      const double z = (u - n->mu) / n->sigma;
      if (z <= 0.0) return (numeric::std_normal_cdf(z) - numeric::std_normal_cdf(za_)) / mass_;
      return 1.0 - survival(u);
    }
    const auto& d = std::get<Uniform>(dist_);
    return std::clamp((u - d.lo) / (d.hi - d.lo), 0.0, 1.0);
  }

  // P(U > u), accurate in the upper tail.
  double survival(double u) const {
    if (std::isnan(u)) throw DomainError("survival: utility is NaN");
    if (atoms_) {
      std::vector<double> above;
      for (const auto& o : atoms_->outcomes()) {
        if (o.utility > u) above.push_back(o.probability);
      }
      return std::min(1.0, numeric::stable_sum(above));
    }
    if (const auto* n = std::get_if<Normal>(&dist_)) {
      if (u <= n->lo) return 1.0;
      if (u >= n->hi) return 0.0;
      const double z = (u - n->mu) / n->sigma;
      if (z > 0.0) return (numeric::std_normal_sf(z) - numeric::std_normal_sf(zb_)) / mass_;
      return 1.0 - cdf(u);
    }
    const auto& d = std::get<Uniform>(dist_);
    return std::clamp((d.hi - u) / (d.hi - d.lo), 0.0, 1.0);
  }

  // Smallest u with P(U <= u) >= q; continuous families only.
  double quantile(double q) const {
    require_continuous("quantile");
    auto [lo, hi] = support();
    if (q <= 0.0) return lo;
    if (q >= 1.0) return hi;
    if (const auto* n = std::get_if<Normal>(&dist_)) {
      const double lower_za = numeric::std_normal_cdf(za_);
      const double target = lower_za + q * mass_;
      double z = 0.0;
      if (target < 0.5) {
        z = numeric::std_normal_quantile(target);
      } else {
        z = numeric::std_normal_quantile_upper(numeric::std_normal_sf(zb_) + (1.0 - q) * mass_);
      }
      return std::clamp(n->mu + n->sigma * z, lo, hi);
    }
    return lo + q * (hi - lo);
  }

  // u with P(U > u) = t; continuous families only.
  double quantile_upper(double t) const {
    require_continuous("quantile_upper");
    auto [lo, hi] = support();
    if (t <= 0.0) return hi;
    if (t >= 1.0) return lo;
    if (const auto* n = std::get_if<Normal>(&dist_)) {
      const double upper_zb = numeric::std_normal_sf(zb_);
      const double target = upper_zb + t * mass_;
      double z = 0.0;
      if (target < 0.5) {
        z = numeric::std_normal_quantile_upper(target);
      } else {
        z = numeric::std_normal_quantile(numeric::std_normal_cdf(za_) + (1.0 - t) * mass_);
      }
      return std::clamp(n->mu + n->sigma * z, lo, hi);
    }
    return hi - t * (hi - lo);
  }

  double mean() const {
    if (atoms_) {
      std::vector<double> terms;
      for (const auto& o : atoms_->outcomes()) terms.push_back(o.utility * o.probability);
      return numeric::stable_sum(terms);
    }
    if (const auto* n = std::get_if<Normal>(&dist_)) {
      if (!bounded()) return n->mu;
      return n->mu + n->sigma *
                         (numeric::std_normal_pdf(za_) - numeric::std_normal_pdf(zb_)) / mass_;
    }
    const auto& u = std::get<Uniform>(dist_);
    return 0.5 * (u.lo + u.hi);
  }

  // Same distribution with every utility moved by delta.
  ContinuousProspect shifted(double delta) const {
    return std::visit(
        [delta](auto d) -> ContinuousProspect {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, BernoulliTwoPoint>) {
            d.u_lo += delta;
            d.u_hi += delta;
          } else if constexpr (std::is_same_v<T, TruncatedPoisson>) {
            d.tariff_term += delta;
          } else if constexpr (std::is_same_v<T, Normal>) {
            d.mu += delta;
            d.lo += delta;
            d.hi += delta;
          } else {
            d.lo += delta;
            d.hi += delta;
          }
          return ContinuousProspect(d);
        },
        dist_);
  }

  std::string_view family() const {
    switch (dist_.index()) {
      case 0: return "bernoulli";
      case 1: return "truncated_poisson";
      case 2: return "normal";
      default: return "uniform";
    }
  }

 private:
  static void check(const BernoulliTwoPoint& b) {
    if (!std::isfinite(b.u_lo) || !std::isfinite(b.u_hi) || b.u_lo > b.u_hi) {
      throw InvalidProspect("bernoulli prospect needs finite u_lo <= u_hi");
    }
    if (!(b.p_lo > 0.0 && b.p_lo < 1.0) && b.u_lo != b.u_hi) {
      throw InvalidProspect("bernoulli p_lo must lie in (0, 1)");
    }
  }
  static void check(const TruncatedPoisson& p) {
    if (!std::isfinite(p.tariff_term)) throw InvalidProspect("tariff term is not finite");
  }
  static void check(const Normal& n) {
    if (!std::isfinite(n.mu) || !(n.sigma > 0.0) || !std::isfinite(n.sigma)) {
      throw InvalidProspect("normal prospect needs finite mu and sigma > 0");
    }
    if (!(n.lo < n.hi) || std::isnan(n.lo) || std::isnan(n.hi)) {
      throw InvalidProspect("normal truncation bounds must satisfy lo < hi");
    }
  }
  static void check(const Uniform& u) {
    if (!std::isfinite(u.lo) || !std::isfinite(u.hi) || !(u.lo < u.hi)) {
      throw InvalidProspect("uniform prospect needs finite lo < hi");
    }
  }

  void require_continuous(const char* what) const {
    if (atoms_) throw InvalidProspect(std::string(what) + " is defined for continuous families only");
  }

  Distribution dist_;
  std::optional<DiscreteProspect> atoms_;
  double za_ = 0.0;
  double zb_ = 0.0;
  double mass_ = 1.0;
};

/// Cell-average discretization on an n-point grid; atomic families come back
/// exactly.
inline DiscreteProspect discretize(const ContinuousProspect& prospect, std::size_t n_points) {
  if (n_points < 2) throw DomainError("discretize needs at least 2 points");
  if (prospect.is_atomic()) return prospect.atoms();
  if (!prospect.bounded()) {
    throw InvalidProspect("cannot discretize a distribution with unbounded support");
  }
  auto [lo, hi] = prospect.support();
  const double h = (hi - lo) / static_cast<double>(n_points);
  const double centre = prospect.quantile(0.5);
  std::vector<Outcome> cells;
  cells.reserve(n_points);
  for (std::size_t j = 0; j < n_points; ++j) {
    const double a = lo + h * static_cast<double>(j);
    const double b = (j + 1 == n_points) ? hi : lo + h * static_cast<double>(j + 1);
    const double mass = (b <= centre) ? prospect.cdf(b) - prospect.cdf(a)
                                      : prospect.survival(a) - prospect.survival(b);
    cells.push_back({0.5 * (a + b), std::max(mass, 0.0)});
  }
  std::vector<double> masses;
  masses.reserve(cells.size());
  for (const auto& c : cells) masses.push_back(c.probability);
  const double total = numeric::stable_sum(masses);
  for (auto& c : cells) c.probability /= total;
  return DiscreteProspect::normalized(std::move(cells));
}

}  // namespace prospectus

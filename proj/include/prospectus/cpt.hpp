#pragma once

// Cumulative prospect theory evaluation: value function, Prelec weighting,
// rank-dependent decision weights and subjective utilities of discrete and
// continuous prospects.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "prospectus/choice.hpp"
#include "prospectus/error.hpp"
#include "prospectus/numeric.hpp"
#include "prospectus/prospect.hpp"

namespace prospectus {

struct QuadratureOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-8;
  std::size_t max_refinements = 15;
};

struct SubjectiveUtility {
  double value = 0.0;
  double reference_used = 0.0;
};

namespace detail {

// A probability together with its complement, each accurate when small.
struct TailPair {
  double lower = 0.0;  // p
  double upper = 1.0;  // 1 - p
};

inline double prelec(const TailPair& p, double alpha) {
  if (p.lower <= 0.0) return 0.0;
  if (p.upper <= 0.0) return 1.0;
  if (alpha == 1.0) return p.lower;
  const double neg_log = p.lower < 0.5 ? -std::log(p.lower) : -std::log1p(-p.upper);
  return std::exp(-std::pow(neg_log, alpha));
}

// p with prelec(p) = w.
inline TailPair prelec_inverse(double w, double alpha) {
  if (w <= 0.0) return {0.0, 1.0};
  if (w >= 1.0) return {1.0, 0.0};
  if (alpha == 1.0) return {w, 1.0 - w};
  const double x = std::pow(-std::log(w), 1.0 / alpha);
  return {std::exp(-x), -std::expm1(-x)};
}

inline double quantile_at(const ContinuousProspect& d, const TailPair& q) {
  return q.lower < 0.5 ? d.quantile(q.lower) : d.quantile_upper(q.upper);
}

inline double quantile_upper_at(const ContinuousProspect& d, const TailPair& tail) {
  // tail.lower is P(U > u) here.
  return tail.lower < 0.5 ? d.quantile_upper(tail.lower) : d.quantile(tail.upper);
}

}  // namespace detail

/// Prelec weighting pi(p) = exp(-(-ln p)^alpha) with pi(0) = 0, pi(1) = 1.
inline double weighting_function(double p, double alpha) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("weighting_function: p outside [0, 1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("weighting_function: alpha outside (0, 1]");
  return detail::prelec({p, 1.0 - p}, alpha);
}

/// Gains (u >= R) are valued (u - R)^beta+, losses -lambda (R - u)^beta-.
inline double value_function(double u, double reference, const CptParams& params) {
  if (u >= reference) return std::pow(u - reference, params.beta_gain);
  return -params.lambda * std::pow(reference - u, params.beta_loss);
}

/// Rank-dependent weights: losses (u_i < R) use the distorted CDF, non-losses
/// the distorted decumulative function.
inline std::vector<double> decision_weights(const DiscreteProspect& prospect, double reference,
                                            const CptParams& params) {
  const auto& out = prospect.outcomes();
  const std::size_t n = out.size();

  // cum[i] = (F(u_i), 1 - F(u_i)) for i = 0..n, with u_0 below the support.
  std::vector<detail::TailPair> cum(n + 1);
  {
    numeric::CompensatedSum below;
    for (std::size_t i = 1; i < n; ++i) {
      below.add(out[i - 1].probability);
      cum[i].lower = below.value();
    }
    numeric::CompensatedSum above;
    for (std::size_t i = n - 1; i >= 1; --i) {
      above.add(out[i].probability);
      cum[i].upper = above.value();
    }
    cum[0] = {0.0, 1.0};
    cum[n] = {1.0, 0.0};
  }

  std::vector<double> w(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double u = out[i - 1].utility;
    double wi = 0.0;
    if (u < reference) {
      wi = detail::prelec(cum[i], params.alpha_loss) - detail::prelec(cum[i - 1], params.alpha_loss);
    } else {
      const detail::TailPair above_prev{cum[i - 1].upper, cum[i - 1].lower};
      const detail::TailPair above_here{cum[i].upper, cum[i].lower};
      wi = detail::prelec(above_prev, params.alpha_gain) -
           detail::prelec(above_here, params.alpha_gain);
    }
    w[i - 1] = std::max(wi, 0.0);
  }
  return w;
}

/// U^s_R = sum_i w_i V(u_i) against an already resolved reference point.
inline double subjective_utility_discrete(const DiscreteProspect& prospect, double reference,
                                          const CptParams& params) {
  if (!std::isfinite(reference)) throw DomainError("reference point is not finite");
  const auto w = decision_weights(prospect, reference, params);
  std::vector<double> terms(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    terms[i] = w[i] * value_function(prospect.outcomes()[i].utility, reference, params);
  }
  return numeric::stable_sum(terms);
}

inline SubjectiveUtility subjective_utility_discrete(const DiscreteProspect& prospect,
                                                     const Reference& reference,
                                                     const CptParams& params,
                                                     std::optional<double> tariff_term = {}) {
  params.validate();
  const double r = resolve(reference, tariff_term);
  return {subjective_utility_discrete(prospect, r, params), r};
}

/// Continuous U^s_R. Atomic families reduce to the discrete sum over their
/// atoms. For densities the Stieltjes integrals are evaluated in
/// decision-weight space, w = pi-(F(u)) below R and s = pi+(1 - F(u)) above,
/// where the integrand V(F^-1(.)) stays bounded even though pi' does not.
inline double subjective_utility_continuous(const ContinuousProspect& prospect, double reference,
                                            const CptParams& params,
                                            const QuadratureOptions& quad = {}) {
  if (!std::isfinite(reference)) throw DomainError("reference point is not finite");
  if (prospect.is_atomic()) return subjective_utility_discrete(prospect.atoms(), reference, params);
  if (!prospect.bounded()) {
    throw InvalidProspect("continuous subjective utility needs a bounded support");
  }

  // Double-exponential rule: the value function has an algebraic singularity
  // in its derivative where u reaches R, at the upper end of each integral.
  boost::math::quadrature::tanh_sinh<double> integrator(quad.max_refinements);
  auto integrate = [&](auto&& f, double upper_limit, const char* part) {
    if (upper_limit <= 0.0) return 0.0;
    double error = 0.0;
    double l1 = 0.0;
    std::size_t levels = 0;
    // Boost's stopping test is looser than the acceptance test below, so it
    // is asked for two more digits than required.
    const double value =
        integrator.integrate(f, 0.0, upper_limit, 1e-2 * quad.rel_tol, &error, &l1, &levels);
    if (!std::isfinite(value) || error > std::max(quad.abs_tol, quad.rel_tol * l1)) {
      std::ostringstream diag;
      diag.precision(12);
      diag << part << " integral over [0, " << upper_limit << "]: value=" << value
           << " error_estimate=" << error << " L1=" << l1 << " levels=" << levels
           << " abs_tol=" << quad.abs_tol << " rel_tol=" << quad.rel_tol
           << " family=" << prospect.family();
      throw NumericError("quadrature did not reach the requested tolerance", diag.str());
    }
    return value;
  };

  const detail::TailPair at_ref{prospect.cdf(reference), prospect.survival(reference)};

  const double loss_extent = detail::prelec(at_ref, params.alpha_loss);
  const double losses = integrate(
      [&](double w) {
        const double u = detail::quantile_at(prospect, detail::prelec_inverse(w, params.alpha_loss));
        return value_function(std::min(u, reference), reference, params);
      },
      loss_extent, "loss");

  const double gain_extent = detail::prelec({at_ref.upper, at_ref.lower}, params.alpha_gain);
  const double gains = integrate(
      [&](double s) {
        const double u =
            detail::quantile_upper_at(prospect, detail::prelec_inverse(s, params.alpha_gain));
        return value_function(std::max(u, reference), reference, params);
      },
      gain_extent, "gain");

  return losses + gains;
}

inline SubjectiveUtility subjective_utility_continuous(const ContinuousProspect& prospect,
                                                       const Reference& reference,
                                                       const CptParams& params,
                                                       std::optional<double> tariff_term = {},
                                                       const QuadratureOptions& quad = {}) {
  params.validate();
  const double r = resolve(reference, tariff_term);
  return {subjective_utility_continuous(prospect, r, params, quad), r};
}

/// Subjective value of a sure outcome: no weighting, just V.
inline double certain_prospect_subjective_value(double certain_utility, double reference,
                                                const CptParams& params) {
  if (!std::isfinite(certain_utility)) throw DomainError("certain utility is not finite");
  return value_function(certain_utility, reference, params);
}

/// Logit over subjective utilities of two options valued against one reference.
inline double subjective_acceptance_probability(const SubjectiveUtility& option,
                                                const SubjectiveUtility& alternative) {
  const double scale = 1.0 + std::max(std::abs(option.reference_used),
                                      std::abs(alternative.reference_used));
  if (std::abs(option.reference_used - alternative.reference_used) > 1e-12 * scale) {
    throw DomainError("subjective utilities were computed against different reference points");
  }
  return numeric::logistic(option.value - alternative.value);
}

}  // namespace prospectus

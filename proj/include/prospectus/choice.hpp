#pragma once

// Objective trip utilities, expected utility and logit choice probabilities.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "prospectus/error.hpp"
#include "prospectus/numeric.hpp"
#include "prospectus/prospect.hpp"

namespace prospectus {

struct TripOption {
  Mode mode = Mode::Transit;
  TripTimes times;
  double tariff = 0.0;  // dollars

  void validate() const {
    times.validate();
    if (!std::isfinite(tariff) || tariff < 0.0) {
      throw DomainError("tariff must be finite and non-negative");
    }
  }
};

// a^T t + b * gamma + c_mode.
inline double trip_utility(const TripOption& option, const UtilityCoefficients& coeffs) {
  option.validate();
  return coeffs.a_walk * option.times.walk + coeffs.a_wait * option.times.wait +
         coeffs.ride(option.mode) * option.times.ride + coeffs.b * option.tariff +
         coeffs.constant(option.mode);
}

struct TwoPointUtilities {
  double u_lo = 0.0;
  double u_hi = 0.0;
};

/// Utilities of the two SRS travel-time outcomes: the long trip t_hi yields
/// u_lo, the short trip t_lo yields u_hi.
inline TwoPointUtilities srs_two_point_utilities(const TripTimes& t_hi, const TripTimes& t_lo,
                                                 double tariff,
                                                 const UtilityCoefficients& coeffs) {
  if (!t_lo.dominated_by(t_hi)) {
    throw DomainError("srs_two_point_utilities: t_lo must be <= t_hi componentwise");
  }
  const double u_lo = trip_utility({Mode::Srs, t_hi, tariff}, coeffs);
  const double u_hi = trip_utility({Mode::Srs, t_lo, tariff}, coeffs);
  return {u_lo, u_hi};
}

/// Multinomial logit: p_l = exp(U_l) / sum_j exp(U_j), max-shifted.
inline std::vector<double> logit_probabilities(std::span<const double> utilities) {
  if (utilities.size() < 2) throw DomainError("logit needs at least two alternatives");
  for (double u : utilities) {
    if (!std::isfinite(u)) throw DomainError("logit utilities must be finite");
  }
  const double top = *std::max_element(utilities.begin(), utilities.end());
  std::vector<double> p(utilities.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(utilities[i] - top);
  const double z = numeric::stable_sum(p);
  for (double& v : p) v /= z;
  return p;
}

inline double binary_choice_probability(double delta_u) {
  if (std::isnan(delta_u)) throw DomainError("utility difference is NaN");
  return numeric::logistic(delta_u);
}

/// U^o = sum p_i u_i.
inline double expected_utility(const DiscreteProspect& prospect) {
  std::vector<double> terms;
  terms.reserve(prospect.size());
  for (const auto& o : prospect.outcomes()) terms.push_back(o.probability * o.utility);
  return numeric::stable_sum(terms);
}

/// Objective probability of taking option 1 over option 2.
inline double objective_acceptance_probability(double u1, double u2) {
  if (!std::isfinite(u1) || !std::isfinite(u2)) throw DomainError("utilities must be finite");
  return numeric::logistic(u1 - u2);
}

/// Value of time in $/h from a per-minute time weight and a per-dollar tariff
/// weight.
inline double value_of_time(double a_component, double b) {
  if (b == 0.0) throw DomainError("value_of_time: tariff coefficient is zero");
  return a_component / b * 60.0;
}

}  // namespace prospectus

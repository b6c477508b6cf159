#pragma once

// Estimators: panel mixed logit by maximum simulated likelihood, and CPT
// parameters by nonlinear least squares on certainty equivalents.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/random/sobol.hpp>

#include "prospectus/choice.hpp"
#include "prospectus/cpt.hpp"
#include "prospectus/error.hpp"
#include "prospectus/numeric.hpp"
#include "prospectus/optimize.hpp"
#include "prospectus/prospect.hpp"

namespace prospectus {

struct ParameterEstimate {
  std::string name;
  double estimate = 0.0;
  std::optional<double> se;
  bool random = false;           // mixed logit: normally distributed across respondents
  double sd = 0.0;
  std::optional<double> sd_se;
  bool identified = true;        // false: held at its starting value
};

struct EstimationResult {
  std::string model;  // "mixed_logit" or "cpt_nls"
  std::vector<ParameterEstimate> parameters;
  std::optional<double> log_likelihood;
  std::optional<double> residual_norm;
  bool converged = false;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::size_t n_observations = 0;
  std::string message;
  std::vector<std::string> warnings;
  std::vector<double> trace;

  const ParameterEstimate& at(const std::string& name) const {
    for (const auto& p : parameters) {
      if (p.name == name) return p;
    }
    throw std::out_of_range("no parameter named " + name);
  }
};

// ---------------------------------------------------------------------------
// Mixed logit

inline constexpr std::size_t kNumCoefficients = 8;
inline constexpr std::array<const char*, kNumCoefficients> kCoefficientNames{
    "a_walk", "a_wait", "a_ride_transit", "a_ride_uberx", "a_ride_srs", "b", "c_uberx", "c_srs"};

using CoefficientVector = std::array<double, kNumCoefficients>;

inline CoefficientVector to_vector(const UtilityCoefficients& k) {
  return {k.a_walk, k.a_wait, k.a_ride[0], k.a_ride[1], k.a_ride[2], k.b, k.c[1], k.c[2]};
}

inline UtilityCoefficients from_vector(const CoefficientVector& v) {
  UtilityCoefficients k;
  k.a_walk = v[0];
  k.a_wait = v[1];
  k.a_ride = {v[2], v[3], v[4]};
  k.b = v[5];
  k.c = {0.0, v[6], v[7]};
  return k;
}

// Across-respondent standard deviations of the survey estimates.
inline CoefficientVector survey_coefficient_sds() {
  return {0.1412, 0.1491, 0.0284, 0.0058, 0.0095, 0.0597, 2.3034, 1.8175};
}

// Regressors such that trip_utility = features . coefficients.
inline CoefficientVector trip_features(const TripOption& o) {
  CoefficientVector x{};
  x[0] = o.times.walk;
  x[1] = o.times.wait;
  x[2 + index(o.mode)] = o.times.ride;
  x[5] = o.tariff;
  if (o.mode == Mode::UberX) x[6] = 1.0;
  if (o.mode == Mode::Srs) x[7] = 1.0;
  return x;
}

struct ChoiceObservation {
  std::string respondent_id;
  std::vector<TripOption> options;
  std::size_t chosen = 0;

  void validate() const {
    if (options.size() < 2) throw InvalidSetup("choice observation needs at least two options");
    if (chosen >= options.size()) throw InvalidSetup("chosen index out of range");
    for (const auto& o : options) o.validate();
  }
};

struct MixedLogitSpec {
  std::array<bool, kNumCoefficients> random{};
  std::size_t n_draws = 500;
  std::uint64_t seed = 20240601;
  optimize::Options optimizer{};

  static MixedLogitSpec all_random() {
    MixedLogitSpec s;
    s.random.fill(true);
    return s;
  }
};

namespace detail {

struct Task {
  Eigen::MatrixXd x;  // options x coefficients, in scaled units
  Eigen::Index chosen = 0;
};

struct Panel {
  std::vector<std::vector<Task>> respondents;
  Eigen::VectorXd scale;  // feature scale used internally
  std::size_t n_obs = 0;
};

inline Panel build_panel(const std::vector<ChoiceObservation>& obs) {
  std::map<std::string, std::vector<const ChoiceObservation*>> by_id;
  for (const auto& o : obs) by_id[o.respondent_id].push_back(&o);

  // Scale each regressor by its root mean square so that all coefficients are
  // of comparable size for the optimizer.
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(kNumCoefficients);
  std::size_t rows = 0;
  for (const auto& o : obs) {
    for (const auto& opt : o.options) {
      const auto x = trip_features(opt);
      for (std::size_t k = 0; k < kNumCoefficients; ++k) ss[k] += x[k] * x[k];
      ++rows;
    }
  }
  Panel p;
  p.scale = (ss / static_cast<double>(std::max<std::size_t>(rows, 1))).cwiseSqrt();
  for (Eigen::Index k = 0; k < p.scale.size(); ++k) {
    if (!(p.scale[k] > 0.0)) p.scale[k] = 1.0;
  }
  for (const auto& [id, list] : by_id) {
    std::vector<Task> tasks;
    for (const auto* o : list) {
      Task t;
      t.x.resize(static_cast<Eigen::Index>(o->options.size()), kNumCoefficients);
      for (std::size_t j = 0; j < o->options.size(); ++j) {
        const auto x = trip_features(o->options[j]);
        for (std::size_t k = 0; k < kNumCoefficients; ++k) {
          t.x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
              x[k] / p.scale[static_cast<Eigen::Index>(k)];
        }
      }
      t.chosen = static_cast<Eigen::Index>(o->chosen);
      tasks.push_back(std::move(t));
      ++p.n_obs;
    }
    p.respondents.push_back(std::move(tasks));
  }
  return p;
}

// Standard normal draws, one block of n_draws x kNumCoefficients per
// respondent, from a Sobol sequence with a seeded random shift. Columns of
// fixed coefficients are zero.
inline std::vector<Eigen::MatrixXd> normal_draws(std::size_t n_respondents, std::size_t n_draws,
                                                 const std::array<bool, kNumCoefficients>& random,
                                                 std::uint64_t seed) {
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < kNumCoefficients; ++k) {
    if (random[k]) dims.push_back(k);
  }
  std::vector<Eigen::MatrixXd> out(n_respondents,
                                   Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_draws),
                                                         kNumCoefficients));
  if (dims.empty()) return out;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> shift(dims.size());
  for (double& s : shift) s = unit(rng);

  boost::random::sobol qrng(dims.size());
  const double denom = std::ldexp(1.0, 64);
  for (auto& block : out) {
    for (std::size_t r = 0; r < n_draws; ++r) {
      for (std::size_t d = 0; d < dims.size(); ++d) {
        double u = static_cast<double>(qrng()) / denom + shift[d];
        u -= std::floor(u);
        u = std::clamp(u, 1e-16, 1.0 - 1e-16);
        block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(dims[d])) =
            numeric::std_normal_quantile(u);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Simulated log-likelihood and its gradient. theta holds the scaled means
/// followed by the scaled standard deviations of the random coefficients.
class MixedLogitLikelihood {
 public:
  MixedLogitLikelihood(const std::vector<ChoiceObservation>& obs, const MixedLogitSpec& spec)
      : spec_(spec), panel_(detail::build_panel(obs)) {
    for (std::size_t k = 0; k < kNumCoefficients; ++k) {
      if (spec.random[k]) random_idx_.push_back(static_cast<Eigen::Index>(k));
    }
    draws_count_ = random_idx_.empty() ? 1 : spec.n_draws;
    draws_ = detail::normal_draws(panel_.respondents.size(), draws_count_, spec.random, spec.seed);
  }

  Eigen::Index dimension() const {
    return static_cast<Eigen::Index>(kNumCoefficients + random_idx_.size());
  }
  const detail::Panel& panel() const { return panel_; }
  const std::vector<Eigen::Index>& random_indices() const { return random_idx_; }

  // Log-likelihood; fills grad (d LL / d theta) if non-null.
  double operator()(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    const Eigen::Index nk = kNumCoefficients;
    const Eigen::Index nr = static_cast<Eigen::Index>(draws_count_);
    Eigen::VectorXd mean = theta.head(nk);
    Eigen::VectorXd sd = Eigen::VectorXd::Zero(nk);
    for (std::size_t i = 0; i < random_idx_.size(); ++i) {
      sd[random_idx_[i]] = theta[nk + static_cast<Eigen::Index>(i)];
    }
    if (grad) grad->setZero(theta.size());

    numeric::CompensatedSum ll;
    Eigen::MatrixXd beta(nr, nk);
    Eigen::MatrixXd g(nr, nk);
    Eigen::VectorXd log_l(nr);
    Eigen::MatrixXd u;
    for (std::size_t n = 0; n < panel_.respondents.size(); ++n) {
      const Eigen::MatrixXd& z = draws_[n];
      beta = z * sd.asDiagonal();
      beta.rowwise() += mean.transpose();
      log_l.setZero();
      if (grad) g.setZero();
      for (const auto& task : panel_.respondents[n]) {
        u.noalias() = beta * task.x.transpose();  // draws x options
        const Eigen::VectorXd top = u.rowwise().maxCoeff();
        u.colwise() -= top;
        Eigen::MatrixXd e = u.array().exp();
        const Eigen::VectorXd denom = e.rowwise().sum();
        log_l += u.col(task.chosen) - denom.array().log().matrix();
        if (grad) {
          e.array().colwise() /= denom.array();
          g.rowwise() += task.x.row(task.chosen);
          g.noalias() -= e * task.x;
        }
      }
      const double top = log_l.maxCoeff();
      Eigen::VectorXd w = (log_l.array() - top).exp();
      const double sum_w = w.sum();
      ll.add(top + std::log(sum_w / static_cast<double>(nr)));
      if (grad) {
        w /= sum_w;
        grad->head(nk) += g.transpose() * w;
        for (std::size_t i = 0; i < random_idx_.size(); ++i) {
          const Eigen::Index k = random_idx_[i];
          (*grad)[nk + static_cast<Eigen::Index>(i)] += (g.col(k).array() * z.col(k).array()).matrix().dot(w);
        }
      }
    }
    return ll.value();
  }

 private:
  MixedLogitSpec spec_;
  detail::Panel panel_;
  std::vector<Eigen::Index> random_idx_;
  std::size_t draws_count_ = 1;
  std::vector<Eigen::MatrixXd> draws_;
};

namespace detail {

inline void check_choice_data(const std::vector<ChoiceObservation>& obs) {
  if (obs.empty()) throw EstimationError("no choice observations");
  for (const auto& o : obs) o.validate();
  if (obs.size() < kNumCoefficients) {
    throw EstimationError("fewer observations than coefficients");
  }
  bool same_index = true;
  for (const auto& o : obs) same_index = same_index && o.chosen == obs.front().chosen;
  if (same_index) {
    throw EstimationError("separation: every observation chooses option " +
                          std::to_string(obs.front().chosen) +
                          " regardless of attributes; the likelihood has no maximum");
  }
  std::array<std::size_t, 3> offered{};
  std::array<std::size_t, 3> picked{};
  for (const auto& o : obs) {
    for (const auto& opt : o.options) ++offered[index(opt.mode)];
    ++picked[index(o.options[o.chosen].mode)];
  }
  for (Mode m : kAllModes) {
    const std::string name(to_string(m));
    if (offered[index(m)] == 0) {
      if (m == Mode::Transit) continue;
      throw EstimationError("mode " + name + " is never offered; c_" + name + " is not identified");
    }
    if (picked[index(m)] == 0 || picked[index(m)] == obs.size()) {
      throw EstimationError("separation: mode " + name +
                            (picked[index(m)] == 0 ? " is never chosen" : " is always chosen"));
    }
  }
}

}  // namespace detail

/// Maximum simulated likelihood for the panel mixed logit. Random coefficients
/// are Normal(mean, sd^2) across respondents and fixed within a respondent.
inline EstimationResult fit_mixed_logit_msl(const std::vector<ChoiceObservation>& obs,
                                            const MixedLogitSpec& spec) {
  detail::check_choice_data(obs);
  const bool any_random = std::any_of(spec.random.begin(), spec.random.end(), [](bool b) { return b; });
  if (any_random && spec.n_draws < 100) throw EstimationError("n_draws must be at least 100");

  const MixedLogitLikelihood like(obs, spec);
  const double n_obs = static_cast<double>(like.panel().n_obs);
  const Eigen::Index dim = like.dimension();
  const Eigen::Index nk = kNumCoefficients;

  // Minimize the average negative log-likelihood.
  const optimize::Objective objective = [&](const Eigen::VectorXd& th, Eigen::VectorXd* g) {
    const double v = like(th, g);
    if (g) *g = -*g / n_obs;
    return -v / n_obs;
  };

  // Start from the fixed-coefficient logit, then open up the spreads.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  if (any_random) {
    MixedLogitSpec fixed = spec;
    fixed.random.fill(false);
    const MixedLogitLikelihood base(obs, fixed);
    const optimize::Objective base_obj = [&](const Eigen::VectorXd& th, Eigen::VectorXd* g) {
      const double v = base(th, g);
      if (g) *g = -*g / n_obs;
      return -v / n_obs;
    };
    const auto start = optimize::bfgs_minimize(base_obj, Eigen::VectorXd::Zero(nk), spec.optimizer);
    theta.head(nk) = start.x;
    theta.tail(dim - nk).setConstant(0.1);
  }
  const auto fit = optimize::bfgs_minimize(objective, theta, spec.optimizer);

  EstimationResult res;
  res.model = "mixed_logit";
  res.seed = spec.seed;
  res.n_observations = like.panel().n_obs;
  res.iterations = fit.iterations;
  res.converged = fit.converged;
  res.message = fit.message;
  for (double v : fit.trace) res.trace.push_back(-v * n_obs);
  res.log_likelihood = -fit.value * n_obs;
  if (*res.log_likelihood > -1e-6 * n_obs) {
    throw EstimationError("separation: simulated likelihood is numerically 1, choices are perfectly predicted");
  }

  // Covariance of theta from the inverse Hessian of -LL.
  std::optional<Eigen::MatrixXd> cov;
  if (fit.converged) {
    const Eigen::MatrixXd hess = optimize::hessian_from_gradient(objective, fit.x) * n_obs;
    cov = optimize::spd_inverse(hess);
    if (!cov) {
      res.converged = false;
      res.message = "Hessian of the simulated log-likelihood is singular or indefinite at the optimum";
    }
  }

  const auto& scale = like.panel().scale;
  const auto& rnd = like.random_indices();
  for (Eigen::Index k = 0; k < nk; ++k) {
    ParameterEstimate p;
    p.name = kCoefficientNames[static_cast<std::size_t>(k)];
    p.estimate = fit.x[k] / scale[k];
    if (cov) p.se = std::sqrt((*cov)(k, k)) / scale[k];
    const auto it = std::find(rnd.begin(), rnd.end(), k);
    if (it != rnd.end()) {
      const Eigen::Index j = nk + (it - rnd.begin());
      p.random = true;
      p.sd = std::abs(fit.x[j]) / scale[k];
      if (cov) p.sd_se = std::sqrt((*cov)(j, j)) / scale[k];
    }
    res.parameters.push_back(p);
  }
  return res;
}

// ---------------------------------------------------------------------------
// CPT parameters from certainty equivalents

/// Two-outcome prospect (u_lo with probability p_lo, else u_hi) and the sure
/// amount the respondent found equally attractive.
struct CertaintyEquivalentObservation {
  std::string respondent_id;
  double u_lo = 0.0;
  double u_hi = 0.0;
  double p_lo = 0.5;
  double reference = 0.0;
  double ce = 0.0;

  void validate() const {
    if (!std::isfinite(u_lo) || !std::isfinite(u_hi) || u_lo > u_hi) {
      throw InvalidProspect("certainty-equivalent item needs finite u_lo <= u_hi");
    }
    if (!(p_lo > 0.0 && p_lo < 1.0)) throw InvalidProspect("p_lo must lie in (0, 1)");
    if (!std::isfinite(reference)) throw InvalidProspect("reference must be finite");
    if (!std::isfinite(ce) || ce < u_lo || ce > u_hi) {
      throw InvalidProspect("certainty equivalent must lie within [u_lo, u_hi]");
    }
  }

  DiscreteProspect prospect() const {
    if (u_lo == u_hi) return DiscreteProspect::certain(u_lo);
    return DiscreteProspect({{u_lo, p_lo}, {u_hi, 1.0 - p_lo}});
  }
};

/// Sure amount with the same subjective value, V(CE) = U^s_R.
inline double certainty_equivalent(double subjective_utility, double reference,
                                   const CptParams& params) {
  if (subjective_utility >= 0.0) {
    return reference + std::pow(subjective_utility, 1.0 / params.beta_gain);
  }
  return reference - std::pow(-subjective_utility / params.lambda, 1.0 / params.beta_loss);
}

inline double predict_ce(const CertaintyEquivalentObservation& o, const CptParams& params) {
  return certainty_equivalent(subjective_utility_discrete(o.prospect(), o.reference, params),
                              o.reference, params);
}

struct CptBounds {
  CptParams lower{0.01, 0.01, 0.01, 0.01, 0.01};
  CptParams upper{1.0, 1.0, 1.0, 1.0, 100.0};
};

inline constexpr std::array<const char*, 5> kCptNames{"alpha_gain", "alpha_loss", "beta_gain",
                                                      "beta_loss", "lambda"};

inline Eigen::VectorXd to_vector(const CptParams& p) {
  Eigen::VectorXd v(5);
  v << p.alpha_gain, p.alpha_loss, p.beta_gain, p.beta_loss, p.lambda;
  return v;
}

inline CptParams cpt_from_vector(const Eigen::VectorXd& v) {
  return {v[0], v[1], v[2], v[3], v[4]};
}

struct CptFitOptions {
  std::size_t starts = 8;
  int max_iterations = 300;
};

/// Bounded multi-start nonlinear least squares on CE residuals. Parameters the
/// data cannot identify are reported and held at init.
inline EstimationResult fit_cpt_nls(const std::vector<CertaintyEquivalentObservation>& obs,
                                    const CptParams& init, const CptBounds& bounds = {},
                                    const CptFitOptions& options = {}) {
  if (obs.size() < 5) throw EstimationError("CPT fit needs at least 5 observations");
  for (const auto& o : obs) o.validate();
  init.validate();

  bool any_gain = false;
  bool any_loss = false;
  bool any_mixed = false;
  for (const auto& o : obs) {
    const bool gain = o.u_hi > o.reference;
    const bool loss = o.u_lo < o.reference;
    any_gain = any_gain || gain;
    any_loss = any_loss || loss;
    any_mixed = any_mixed || (gain && loss);
  }
  std::vector<bool> free(5, true);
  EstimationResult res;
  res.model = "cpt_nls";
  res.n_observations = obs.size();
  if (!any_gain) {
    free[0] = free[2] = false;
    res.warnings.push_back("no outcomes above the reference: alpha_gain and beta_gain unidentifiable, held at init");
  }
  if (!any_loss) {
    free[1] = free[3] = false;
    res.warnings.push_back("no outcomes below the reference: alpha_loss and beta_loss unidentifiable, held at init");
  }
  if (!any_mixed) {
    free[4] = false;
    res.warnings.push_back("no mixed gain/loss items: lambda unidentifiable, held at init");
  }

  const Eigen::VectorXd lo = to_vector(bounds.lower);
  const Eigen::VectorXd hi = to_vector(bounds.upper);
  const optimize::Residuals residuals = [&](const Eigen::VectorXd& v) {
    const CptParams p = cpt_from_vector(v);
    Eigen::VectorXd r(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = predict_ce(obs[i], p) - obs[i].ce;
    }
    return r;
  };

  // Start 0 is init; the rest are Sobol points in the box, fixed coordinates
  // kept at init.
  std::vector<Eigen::VectorXd> starts{to_vector(init).cwiseMax(lo).cwiseMin(hi)};
  boost::random::sobol qrng(5);
  const double denom = std::ldexp(1.0, 64);
  while (starts.size() < std::max<std::size_t>(options.starts, 1)) {
    Eigen::VectorXd s = starts.front();
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double u = static_cast<double>(qrng()) / denom;
      if (free[static_cast<std::size_t>(j)]) s[j] = lo[j] + (0.05 + 0.9 * u) * (hi[j] - lo[j]);
    }
    starts.push_back(s);
  }

  const double init_cost = residuals(starts.front()).squaredNorm();
  optimize::LeastSquaresResult best;
  best.cost = std::numeric_limits<double>::infinity();
  int total_iterations = 0;
  for (const auto& s : starts) {
    auto fit = optimize::projected_levenberg_marquardt(residuals, s, lo, hi, free,
                                                       options.max_iterations);
    total_iterations += fit.iterations;
    if (fit.cost < best.cost) best = std::move(fit);
  }
  if (!(best.cost <= init_cost)) {
    best = optimize::projected_levenberg_marquardt(residuals, starts.front(), lo, hi, free, 0);
  }

  res.converged = best.converged;
  res.message = best.message;
  res.iterations = total_iterations;
  res.trace = best.trace;
  res.residual_norm = std::sqrt(best.cost);

  // Standard errors from s^2 (J'J)^-1 over the free parameters.
  std::vector<Eigen::Index> fidx;
  for (Eigen::Index j = 0; j < 5; ++j) {
    if (free[static_cast<std::size_t>(j)]) fidx.push_back(j);
  }
  std::optional<Eigen::MatrixXd> cov;
  const auto m = static_cast<Eigen::Index>(obs.size());
  const auto p = static_cast<Eigen::Index>(fidx.size());
  if (p > 0 && m > p) {
    const Eigen::VectorXd r0 = residuals(best.x);
    Eigen::MatrixXd jac(m, p);
    for (Eigen::Index c = 0; c < p; ++c) {
      const Eigen::Index j = fidx[static_cast<std::size_t>(c)];
      double h = 1e-7 * std::max(1.0, std::abs(best.x[j]));
      if (best.x[j] + h > hi[j]) h = -h;
      Eigen::VectorXd xp = best.x;
      xp[j] += h;
      jac.col(c) = (residuals(xp) - r0) / (xp[j] - best.x[j]);
    }
    const double s2 = best.cost / static_cast<double>(m - p);
    if (auto inv = optimize::spd_inverse(jac.transpose() * jac)) cov = s2 * *inv;
  }
  if (!cov) res.warnings.push_back("J'J is singular at the solution; standard errors omitted");

  for (Eigen::Index j = 0; j < 5; ++j) {
    ParameterEstimate pe;
    pe.name = kCptNames[static_cast<std::size_t>(j)];
    pe.estimate = best.x[j];
    pe.identified = free[static_cast<std::size_t>(j)];
    if (cov && pe.identified) {
      const auto c = std::find(fidx.begin(), fidx.end(), j) - fidx.begin();
      pe.se = std::sqrt(std::max((*cov)(c, c), 0.0));
    }
    res.parameters.push_back(pe);
  }
  return res;
}

inline CptParams fitted_cpt(const EstimationResult& r) {
  return {r.at("alpha_gain").estimate, r.at("alpha_loss").estimate, r.at("beta_gain").estimate,
          r.at("beta_loss").estimate, r.at("lambda").estimate};
}

}  // namespace prospectus

#pragma once

// Lottery-based detectors for the reflection effect, probability
// overweighting and loss aversion.
//
// Lottery rows (one per question):
//   gain   pays `gain` with probability p, else 0; response = certainty equivalent
//   loss   costs `loss` with probability p, else 0; response = certainty equivalent (<= 0)
//   mixed  pays a gain with probability p, else costs `loss`; response = the
//          smallest gain at which the respondent accepts the lottery

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "prospectus/error.hpp"
#include "prospectus/numeric.hpp"

namespace prospectus {

enum class Frame { Gain, Loss, Mixed };

inline std::string_view to_string(Frame f) {
  switch (f) {
    case Frame::Gain: return "gain";
    case Frame::Loss: return "loss";
    case Frame::Mixed: return "mixed";
  }
  return "?";
}

inline std::optional<Frame> frame_from_string(std::string_view s) {
  for (Frame f : {Frame::Gain, Frame::Loss, Frame::Mixed}) {
    if (s == to_string(f)) return f;
  }
  return std::nullopt;
}

struct LotteryResponse {
  std::string respondent_id;
  std::string lottery_id;
  Frame frame = Frame::Gain;
  double p = 0.5;
  double gain = 0.0;
  double loss = 0.0;  // magnitude, >= 0
  double response = 0.0;

  void validate() const {
    if (!(p > 0.0 && p <= 1.0)) throw InvalidProspect("lottery probability must lie in (0, 1]");
    if (!std::isfinite(gain) || !std::isfinite(loss) || !std::isfinite(response) || gain < 0.0 ||
        loss < 0.0) {
      throw InvalidProspect("lottery amounts must be finite and non-negative");
    }
    switch (frame) {
      case Frame::Gain:
        if (!(gain > 0.0) || loss != 0.0) throw InvalidProspect("gain lottery needs gain > 0 and loss = 0");
        break;
      case Frame::Loss:
        if (!(loss > 0.0) || gain != 0.0) throw InvalidProspect("loss lottery needs loss > 0 and gain = 0");
        break;
      case Frame::Mixed:
        if (gain != 0.0) throw InvalidProspect("mixed lottery carries the elicited gain in response, gain must be 0");
        break;
    }
  }
};

struct DetectorOptions {
  double tolerance = 1e-9;           // relative slack in the reflection comparisons
  double overweight_margin = 0.10;   // required relative excess of implied weight per unit probability
};

namespace detail {

// (frame, p, magnitude) -> responses, averaged per respondent.
using LotteryKey = std::tuple<int, double, double>;
using RespondentTable = std::map<std::string, std::map<LotteryKey, std::vector<double>>>;

inline RespondentTable tabulate(const std::vector<LotteryResponse>& rows, Frame frame) {
  RespondentTable t;
  for (const auto& r : rows) {
    r.validate();
    if (r.frame != frame) continue;
    const double magnitude = frame == Frame::Gain ? r.gain : r.loss;
    t[r.respondent_id][{static_cast<int>(frame), r.p, magnitude}].push_back(r.response);
  }
  return t;
}

inline double mean_of(const std::vector<double>& v) {
  return numeric::stable_sum(v) / static_cast<double>(v.size());
}

inline bool same_probability(double a, double b) { return std::abs(a - b) <= 1e-9; }

}  // namespace detail

struct ReflectionResult {
  std::map<std::string, bool> flagged;  // per evaluated respondent
  std::size_t n_excluded = 0;           // respondents without a matched gain/loss pair
  std::optional<double> rate;           // undefined when nobody could be evaluated
};

/// Risk aversion in gains (CE < p G) together with risk seeking in the matched
/// loss lottery (CE > -p L), in the majority of a respondent's matched pairs.
inline ReflectionResult detect_reflection_effect(const std::vector<LotteryResponse>& rows,
                                                 const DetectorOptions& opt = {}) {
  const auto gains = detail::tabulate(rows, Frame::Gain);
  const auto losses = detail::tabulate(rows, Frame::Loss);
  std::map<std::string, bool> seen;
  for (const auto& r : rows) seen[r.respondent_id] = true;

  ReflectionResult out;
  std::size_t n_flagged = 0;
  for (const auto& [id, unused] : seen) {
    (void)unused;
    const auto g = gains.find(id);
    const auto l = losses.find(id);
    std::size_t pairs = 0;
    std::size_t reflecting = 0;
    if (g != gains.end() && l != losses.end()) {
      for (const auto& [gk, gv] : g->second) {
        const auto [gf, p, m] = gk;
        (void)gf;
        const auto lk = l->second.find({static_cast<int>(Frame::Loss), p, m});
        if (lk == l->second.end()) continue;
        ++pairs;
        const double ev = p * m;
        const double ce_gain = detail::mean_of(gv);
        const double ce_loss = detail::mean_of(lk->second);
        if (ce_gain < ev * (1.0 - opt.tolerance) && ce_loss > -ev * (1.0 - opt.tolerance)) {
          ++reflecting;
        }
      }
    }
    if (pairs == 0) {
      ++out.n_excluded;
      continue;
    }
    const bool flag = 2 * reflecting > pairs;
    out.flagged[id] = flag;
    n_flagged += flag ? 1 : 0;
  }
  if (!out.flagged.empty()) {
    out.rate = static_cast<double>(n_flagged) / static_cast<double>(out.flagged.size());
  }
  return out;
}

struct ProbabilityBand {
  double p1 = 0.1;
  double p2 = 0.6;
};

inline constexpr std::array<ProbabilityBand, 3> kStandardBands{
    ProbabilityBand{0.1, 0.6}, ProbabilityBand{0.6, 0.9}, ProbabilityBand{0.1, 0.9}};

struct BandRate {
  ProbabilityBand band;
  std::size_t n_evaluated = 0;
  std::size_t n_flagged = 0;
  std::optional<double> rate;
};

struct WeightingResult {
  std::vector<BandRate> bands;
  BandRate any;  // flagged in at least one band
};

namespace detail {

// Implied decision weights w(p) of one respondent in one frame. Responses are
// normalized to c = |CE| / magnitude, and the curvature is taken from the
// one-parameter fit ln(-ln c) = alpha ln(-ln p) - ln beta, so that
// w(p) = c(p)^beta removes it. Empty when the responses do not allow the fit.
inline std::map<double, double> implied_weights(const std::map<LotteryKey, std::vector<double>>& items) {
  std::map<double, std::vector<double>> by_p;
  for (const auto& [key, values] : items) {
    const auto [f, p, m] = key;
    (void)f;
    const double c = std::abs(mean_of(values)) / m;
    if (!(c > 0.0 && c < 1.0) || !(p < 1.0)) return {};
    by_p[p].push_back(c);
  }
  if (by_p.size() < 2) return {};
  std::vector<double> xs;
  std::vector<double> ys;
  std::map<double, double> c_at;
  for (const auto& [p, cs] : by_p) {
    c_at[p] = mean_of(cs);
    xs.push_back(std::log(-std::log(p)));
    ys.push_back(std::log(-std::log(c_at[p])));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = numeric::stable_sum(xs) / n;
  const double my = numeric::stable_sum(ys) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) return {};
  const double slope = sxy / sxx;
  const double beta = std::exp(-(my - slope * mx));
  if (!std::isfinite(beta) || !(beta > 0.0)) return {};
  std::map<double, double> w;
  for (const auto& [p, c] : c_at) w[p] = std::pow(c, beta);
  return w;
}

inline std::optional<double> lookup(const std::map<double, double>& w, double p) {
  for (const auto& [q, v] : w) {
    if (same_probability(p, q)) return v;
  }
  return std::nullopt;
}

}  // namespace detail

/// Per band (p1 < p2): a respondent overweights the lower probability when
/// w(p1)/p1 exceeds both 1 and w(p2)/p2 by more than the margin, in the gain
/// or the loss frame.
inline WeightingResult detect_probability_weighting(const std::vector<LotteryResponse>& rows,
                                                    const std::vector<ProbabilityBand>& bands = {
                                                        kStandardBands.begin(), kStandardBands.end()},
                                                    const DetectorOptions& opt = {}) {
  std::vector<double> levels;
  for (const auto& r : rows) {
    if (r.frame == Frame::Mixed) continue;
    if (std::none_of(levels.begin(), levels.end(),
                     [&](double q) { return detail::same_probability(q, r.p); })) {
      levels.push_back(r.p);
    }
  }
  for (const auto& b : bands) {
    std::string missing;
    for (double q : {b.p1, b.p2}) {
      if (std::none_of(levels.begin(), levels.end(),
                       [&](double l) { return detail::same_probability(l, q); })) {
        missing += (missing.empty() ? "" : ", ") + numeric::format_number(q);
      }
    }
    if (!missing.empty()) {
      throw EstimationError("probability band " + numeric::format_number(b.p1) + "-" +
                            numeric::format_number(b.p2) +
                            " is not covered; no gain or loss lotteries at p = " + missing);
    }
  }

  std::map<std::string, std::vector<std::map<double, double>>> weights;
  for (Frame f : {Frame::Gain, Frame::Loss}) {
    for (const auto& [id, items] : detail::tabulate(rows, f)) {
      auto w = detail::implied_weights(items);
      if (!w.empty()) weights[id].push_back(std::move(w));
    }
  }

  WeightingResult out;
  std::map<std::string, std::pair<bool, bool>> any;  // evaluated, flagged
  for (const auto& b : bands) {
    BandRate br;
    br.band = b;
    for (const auto& [id, frames] : weights) {
      bool evaluated = false;
      bool flagged = false;
      for (const auto& w : frames) {
        const auto w1 = detail::lookup(w, b.p1);
        const auto w2 = detail::lookup(w, b.p2);
        if (!w1 || !w2) continue;
        evaluated = true;
        const double excess = 1.0 + opt.overweight_margin;
        flagged = flagged || (*w1 / b.p1 > excess * std::max(1.0, *w2 / b.p2));
      }
      if (!evaluated) continue;
      ++br.n_evaluated;
      br.n_flagged += flagged ? 1 : 0;
      any[id].first = true;
      any[id].second = any[id].second || flagged;
    }
    if (br.n_evaluated > 0) {
      br.rate = static_cast<double>(br.n_flagged) / static_cast<double>(br.n_evaluated);
    }
    out.bands.push_back(br);
  }
  for (const auto& [id, ef] : any) {
    (void)id;
    out.any.n_evaluated += ef.first ? 1 : 0;
    out.any.n_flagged += ef.second ? 1 : 0;
  }
  if (out.any.n_evaluated > 0) {
    out.any.rate = static_cast<double>(out.any.n_flagged) / static_cast<double>(out.any.n_evaluated);
  }
  return out;
}

struct LossAversionResult {
  std::optional<double> mean_ratio;
  std::optional<double> median_ratio;
  std::size_t n_respondents = 0;
  std::size_t n_excluded_rows = 0;  // mixed rows with zero loss
};

/// Required gain per unit of loss in mixed lotteries, averaged per respondent,
/// then summarized across respondents.
inline LossAversionResult loss_aversion_ratio(const std::vector<LotteryResponse>& rows) {
  LossAversionResult out;
  std::map<std::string, std::map<std::pair<double, double>, std::vector<double>>> per;
  for (const auto& r : rows) {
    r.validate();
    if (r.frame != Frame::Mixed) continue;
    if (r.loss == 0.0) {
      ++out.n_excluded_rows;
      continue;
    }
    per[r.respondent_id][{r.p, r.loss}].push_back(r.response / r.loss);
  }
  std::vector<double> ratios;
  for (const auto& [id, items] : per) {
    (void)id;
    std::vector<double> means;
    for (const auto& [k, v] : items) {
      (void)k;
      means.push_back(detail::mean_of(v));
    }
    ratios.push_back(detail::mean_of(means));
  }
  out.n_respondents = ratios.size();
  if (ratios.empty()) return out;
  out.mean_ratio = detail::mean_of(ratios);
  std::sort(ratios.begin(), ratios.end());
  const std::size_t n = ratios.size();
  out.median_ratio = n % 2 == 1 ? ratios[n / 2] : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
  return out;
}

struct EffectsReport {
  ReflectionResult reflection;
  WeightingResult weighting;
  LossAversionResult loss_aversion;
};

inline EffectsReport detect_effects(const std::vector<LotteryResponse>& rows,
                                    const DetectorOptions& opt = {}) {
  return {detect_reflection_effect(rows, opt),
          detect_probability_weighting(rows, {kStandardBands.begin(), kStandardBands.end()}, opt),
          loss_aversion_ratio(rows)};
}

}  // namespace prospectus

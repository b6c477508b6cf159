// Acceptance run: one PASS/FAIL line per criterion, with runtime and the
// numbers behind the verdict. Exit status is the number of failures unless
// --report-only is given.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prospectus/prospectus.hpp"

namespace fs = std::filesystem;
using namespace prospectus;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0.0 && s > limit_s) {
    v.pass = false;
    v.detail += fmt(" [over time limit %.0f s]", limit_s);
  }
  if (!v.pass) ++failures;
  std::printf("%s  %2d  %-34s %8.2f s  %s\n", v.pass ? "PASS" : "FAIL", id, name, s, v.detail.c_str());
  std::fflush(stdout);
}

DiscreteProspect random_prospect(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 20);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::uniform_real_distribution<double> w(0.001, 1.0);
  std::vector<Outcome> raw(static_cast<std::size_t>(count(rng)));
  double total = 0.0;
  for (auto& o : raw) {
    o = {u(rng), w(rng)};
    total += o.probability;
  }
  for (auto& o : raw) o.probability /= total;
  return DiscreteProspect::normalized(raw);
}

// ---------------------------------------------------------------------------

Verdict vot() {
  const auto k = UtilityCoefficients::survey_means();
  const double a[5] = {k.a_walk, k.a_wait, k.ride(Mode::Transit), k.ride(Mode::UberX), k.ride(Mode::Srs)};
  const double table[5] = {67.8702, 13.1480, 12.1703, 9.9466, 21.5549};
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) worst = std::max(worst, std::abs(value_of_time(a[i], k.b) / table[i] - 1.0));
  return {worst < 0.01, fmt("max relative error %.4f", worst)};
}

Verdict reduction() {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_prospect(rng);
    worst = std::max(worst, std::abs(subjective_utility_discrete(p, 0.0, CptParams::neutral()) - expected_utility(p)));
  }
  return {worst < 1e-12, fmt("max |U^s - U^o| = %.3g", worst)};
}

Verdict telescoping() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ref(-20.0, 20.0);
  CptParams k = CptParams::survey_means();
  k.alpha_gain = k.alpha_loss = 1.0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_prospect(rng);
    const auto w = decision_weights(p, ref(rng), k);
    for (std::size_t j = 0; j < p.size(); ++j) worst = std::max(worst, std::abs(w[j] - p.outcomes()[j].probability));
  }
  return {worst < 1e-14, fmt("max |w - p| = %.3g", worst)};
}

Verdict continuous_vs_discrete() {
  const ExperimentSetup s;
  const CptParams k = CptParams::survey_means();
  double worst = 0.0;
  std::string detail;
  for (Family f : kAllFamilies) {
    const ContinuousProspect x = s.distribution(f);
    const DiscreteProspect grid = discretize(x, 100000);
    for (double r : {0.0, x.mean()}) {
      const double exact = subjective_utility_continuous(x, r, k);
      const double oracle = subjective_utility_discrete(grid, r, k);
      worst = std::max(worst, std::abs(exact - oracle) / std::abs(oracle));
    }
  }
  return {worst < 1e-4, fmt("4 families x 2 references, max relative diff %.3g", worst)};
}

Verdict monotonicity() {
  const ExperimentSetup s;
  bool ok = true;
  std::size_t n = 0;
  for (ReferenceMode m : {ReferenceMode::Static, ReferenceMode::TariffLinked}) {
    const auto rep = verify_monotonicity(s, m, s.grid.values());
    ok = ok && rep.strictly_decreasing;
    n = rep.series.records.size();
  }
  return {ok && n == 200, fmt("%zu-point grid, static and tariff-linked strictly decreasing: %s", n, ok ? "yes" : "no")};
}

Verdict lambda_star() {
  const ExperimentSetup s;
  const ContinuousProspect x = s.distribution(Family::Bernoulli);
  const LambdaStar ls = lambda_star_search(x, s.cpt);
  bool ok = ls.u_s_below >= 0.0 && ls.u_s_above < 0.0;
  std::string detail = fmt("lambda* = %.6f, U^s at bracket (%.3g, %.3g);", ls.lambda_star, ls.u_s_below, ls.u_s_above);
  for (double lambda : {2.0, 5.0, 20.0}) {
    CptParams p = s.cpt;
    p.lambda = lambda;
    const double u = subjective_at_mean(x, p);
    ok = ok && u < 0.0;
    detail += fmt(" U^s(%g) = %.4f", lambda, u);
  }
  return {ok, detail};
}

Verdict mixed_aversion() {
  ExperimentSetup s;
  const auto m = mixed_prospect_experiment(s, Family::Normal);
  std::size_t below = 0;
  for (const auto& r : m.series.records) below += r.p_s < r.p_o ? 1 : 0;
  s.cpt.beta_gain = 1.0;
  const auto tb = mixed_prospect_tariff_bounds(s, s.distribution(Family::Normal));
  const bool ok = m.series.records.size() == 50 && below == 50 && std::isinf(tb.gamma_upper);
  return {ok, fmt("p^s < p^o at %zu/%zu points of [%.4g, %.4g); beta+ = 1 gives gamma_upper = %g", below,
                  m.series.records.size(), m.bounds.gamma_lower, m.bounds.gamma_upper, tb.gamma_upper)};
}

Verdict fourfold() {
  const ExperimentSetup s;
  const std::array<int, 4> expected{+1, -1, -1, +1};
  std::string signs;
  bool pattern = true;
  int changes = 0;
  for (std::size_t i = 0; i < kAllQuadrants.size(); ++i) {
    const int sign = ra_sign(fourfold_experiment(s, kAllQuadrants[i], Variant::DistortionOnly));
    pattern = pattern && sign == expected[i];
    signs += sign > 0 ? '+' : sign < 0 ? '-' : '0';
    changes += ra_sign_changes(fourfold_experiment(s, kAllQuadrants[i], Variant::GeneralCpt));
  }
  return {pattern && changes > 0,
          fmt("distortion-only signs (%c,%c,%c,%c), general-CPT sign changes %d", signs[0], signs[1], signs[2],
              signs[3], changes)};
}

Verdict self_reference() {
  const ExperimentSetup s;
  bool ok = true;
  std::string detail;
  for (Family f : kAllFamilies) {
    const auto r = self_reference_experiment(s, f);
    const bool fam = !r.first_violation && r.gap_at_gamma_star < 1e-8;
    ok = ok && fam;
    detail += fmt(" %s:%s", std::string(to_string(f)).c_str(), fam ? "ok" : "violated");
    if (r.first_violation) detail += fmt("(gamma %.4g, gap %.3g)", *r.first_violation, r.worst_gap);
  }
  return {ok, detail.substr(1)};
}

Verdict estimation() {
  const CptParams truth = CptParams::survey_means();
  const auto ce = fit_cpt_nls(simulate::simulate_certainty_equivalents({}, truth, 20240601), {0.5, 0.5, 0.5, 0.5, 1.0});
  const Eigen::VectorXd err = (to_vector(fitted_cpt(ce)) - to_vector(truth)).cwiseAbs();
  const bool cpt_ok = err.maxCoeff() < 1e-3;

  simulate::ChoiceDesign d;  // 2000 respondents x 8 tasks
  const auto obs = simulate::simulate_choices(d, 20240601);
  MixedLogitSpec spec = MixedLogitSpec::all_random();
  spec.seed = 20240601;
  const auto fit = fit_mixed_logit_msl(obs, spec);
  std::size_t recovered = 0;
  double worst_rel = 0.0;
  for (std::size_t k = 0; k < kNumCoefficients; ++k) {
    const auto& p = fit.parameters[k];
    const double truth_k = d.mean[k];
    if (truth_k == 0.0) {  // transit constant is the fixed baseline
      ++recovered;
      continue;
    }
    const double rel = std::abs(p.estimate / truth_k - 1.0);
    worst_rel = std::max(worst_rel, rel);
    const bool within_se = p.se && std::abs(p.estimate - truth_k) <= 2.0 * *p.se;
    recovered += (rel <= 0.15 || within_se) ? 1 : 0;
  }
  return {cpt_ok && fit.converged && recovered == kNumCoefficients,
          fmt("CE fit max abs error %.2g; mixed logit %s, %zu/%zu means within 15%% or 2 SE (worst relative %.3f)",
              err.maxCoeff(), fit.converged ? "converged" : "not converged", recovered, kNumCoefficients, worst_rel)};
}

std::string effects_line(const EffectsReport& e) {
  return fmt("reflection %.3f, bands %.3f/%.3f/%.3f, ratio %.3f", *e.reflection.rate, *e.weighting.bands[0].rate,
             *e.weighting.bands[1].rate, *e.weighting.bands[2].rate, *e.loss_aversion.mean_ratio);
}

Verdict detectors() {
  const SimulationConfig sim;
  const auto cpt_agents = simulate::draw_agents(sim.spread, sim.lottery_respondents, 20240601);
  const auto cpt = detect_effects(simulate::simulate_lotteries(cpt_agents, sim.lottery, 20240601));

  const std::vector<CptParams> rational_agents(sim.lottery_respondents, CptParams::neutral());
  simulate::LotteryDesign exact = sim.lottery;
  exact.noise = 0.0;
  const auto rational = detect_effects(simulate::simulate_lotteries(rational_agents, exact, 20240601));
  const auto noisy = detect_effects(simulate::simulate_lotteries(rational_agents, sim.lottery, 20240601));

  const bool cpt_ok = *cpt.reflection.rate > 0.9 && *cpt.weighting.bands[0].rate > *cpt.weighting.bands[1].rate &&
                      *cpt.loss_aversion.mean_ratio > 1.0;
  const bool rational_ok = *rational.reflection.rate < 0.05 && *rational.weighting.any.rate < 0.05 &&
                           std::abs(*rational.loss_aversion.mean_ratio - 1.0) < 0.05;
  return {cpt_ok && rational_ok, "CPT: " + effects_line(cpt) + "; rational: " + effects_line(rational) +
                                     "; rational with 5% noise: " + effects_line(noisy)};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism(const fs::path& work) {
  const std::string src = PROSPECTUS_SOURCE_DIR;
  const std::string cfg = src + "/configs/fixture.json";
  const std::vector<std::string> commands{
      "simulate --which all --config " + cfg,
      "estimate --which logit --config " + cfg + " --data " + src + "/data/choice.csv",
      "estimate --which cpt --config " + cfg + " --data " + src + "/data/ce.csv",
      "detect-effects --config " + cfg + " --lotteries " + src + "/data/lottery.csv",
      "experiment --which mixed --config " + cfg,
      "experiment --which fourfold --config " + cfg,
      "cpt-utility --config " + cfg + " --prospect " + src + "/data/prospect-normal.json",
      "choice-prob --config " + cfg + " --options " + src + "/data/options.csv",
  };
  std::size_t files = 0;
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    std::vector<std::size_t> hashes[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = work / ("cmd" + std::to_string(i)) / (run == 0 ? "a" : "b");
      fs::create_directories(out);
      const std::string line = std::string(PROSPECTUS_CLI) + " " + commands[i] + " --out " + out.string() + " > " +
                               (out / "stdout.txt").string() + " 2>&1";
      const int status = std::system(line.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "command failed: " + commands[i]};
      std::vector<fs::path> names;
      for (const auto& e : fs::directory_iterator(out)) names.push_back(e.path().filename());
      std::sort(names.begin(), names.end());
      for (const auto& n : names) hashes[run].push_back(std::hash<std::string>{}(slurp(out / n)));
    }
    files += hashes[0].size();
    if (hashes[0] != hashes[1]) ++mismatches;
  }
  return {mismatches == 0, fmt("%zu commands run twice, %zu output files compared, %zu mismatching", commands.size(),
                               files, mismatches)};
}

}  // namespace

int main(int argc, char** argv) {
  const bool report_only = argc > 1 && std::strcmp(argv[1], "--report-only") == 0;
  const fs::path work = fs::temp_directory_path() / "prospectus-acceptance";
  fs::remove_all(work);

  criterion(1, "value of time", 1, vot);
  criterion(2, "CPT to EUT reduction", 5, reduction);
  criterion(3, "decision-weight telescoping", 5, telescoping);
  criterion(4, "continuous vs discretized", 30, continuous_vs_discrete);
  criterion(5, "monotonicity in tariff", 10, monotonicity);
  criterion(6, "lambda* and aversion at mean", 5, lambda_star);
  criterion(7, "mixed-prospect aversion", 10, mixed_aversion);
  criterion(8, "fourfold pattern", 20, fourfold);
  criterion(9, "self-reference inequality", 20, self_reference);
  criterion(10, "estimation round trips", 300, estimation);
  criterion(11, "effect detectors", 60, detectors);
  criterion(12, "determinism", 0, [&] { return determinism(work); });

  fs::remove_all(work);
  std::printf("12 criteria evaluated, %d failed\n", failures);
  return report_only ? 0 : failures;
}

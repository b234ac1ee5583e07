#include "cdm/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cdm/csv.hpp"
#include "cdm/harness.hpp"

namespace cdm {

namespace {

std::string fmt(double v) { return format_number(v); }

// Each check returns an empty string on success, a diagnostic otherwise.
using Check = std::function<std::string(Rng&)>;

std::string landscape_bounds(Rng& rng) {
  const PerlinBandit b = sample_bandit(4, kDefaultGridSide, rng);
  const PerlinBandit inv = invert_bandit(b);
  for (int i = 0; i < 500; ++i) {
    const Context x = sample_context(rng);
    for (std::size_t k = 0; k < 4; ++k) {
      const double f = b.value(k, x);
      if (f < 0.0 || f > 1.0) return "value " + fmt(f) + " outside [0,1]";
      if (std::abs(inv.value(k, x) - (1.0 - f)) > 1e-12) return "inverse is not 1 - f";
    }
  }
  return {};
}

std::string rotation_identity(Rng& rng) {
  const PerlinBandit b = sample_bandit(3, kDefaultGridSide, rng);
  const PerlinBandit r = rotate_bandit(b, 0.0, 1.0 - 1e-12, rng);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < b.arm(k).vectors().size(); ++i) {
      const Vec2 u = b.arm(k).vectors()[i];
      const Vec2 v = r.arm(k).vectors()[i];
      if (std::abs(u.x - v.x) > 1e-6 || std::abs(u.y - v.y) > 1e-6) return "rho -> 1 changed a gradient";
    }
  }
  return {};
}

std::string calibration(Rng& rng) {
  const PerlinBandit b = sample_bandit(4, kDefaultGridSide, rng);
  for (double delta : {0.0, 0.5, 1.0}) {
    const CalibratedBandit c = calibrate_bias(b, delta, 0.02, rng);
    if (std::abs(c.achieved - delta) > 0.02) return "delta " + fmt(delta) + " achieved " + fmt(c.achieved);
  }
  return {};
}

std::string hindsight_anchors(Rng& rng) {
  const PerlinBandit b = sample_bandit(4, kDefaultGridSide, rng);
  const auto xs = sample_contexts(300, rng);
  const double oracle = hindsight_confidence(oracle_expert(b), b, xs, rng);
  const double anti = hindsight_confidence(anti_oracle_expert(b), b, xs, rng);
  const double rnd = hindsight_confidence(random_expert(4), b, xs, rng);
  if (std::abs(oracle - 1.0) > 1e-12) return "oracle confidence " + fmt(oracle);
  if (std::abs(anti) > 1e-12) return "anti-oracle confidence " + fmt(anti);
  if (rnd != 0.5) return "random confidence " + fmt(rnd);
  return {};
}

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.arms = {3};
  c.experts = {3};
  c.delta_grid = {0.0, 1.0};
  c.horizon = 120;
  c.training_steps = 60;
  c.runs = 2;
  c.tolerance = 0.05;
  c.distance_samples = 256;
  return c;
}

std::string record_identities(Rng&) {
  const ExperimentConfig c = tiny_config();
  const CellSetup cell = prepare_cell(c, {3, 3, ConfigKind::Heterogeneous, 0.5, 0});
  const auto records = run_cell(c, cell, c.algorithms);
  for (const RunRecord& r : records) {
    r.validate();
    const double s = scaled_cumulative_reward(r.expected_rewards, r);
    if (s < 0.0 || s > 1.0) return "scaled reward " + fmt(s) + " outside [0,1]";
    const auto any = anytime_average(r.expected_rewards, r);
    if (std::abs(any.back() - s) > 1e-9) return "anytime end differs from scaled reward";
    double best = 0.0;
    for (const auto& e : r.expert_rewards) best = std::max(best, cumulative_reward(e));
    if (std::abs(regret_vs_best_expert(r.expected_rewards, r) + cumulative_reward(r.expected_rewards) - best) > 1e-9) {
      return "regret identity violated";
    }
  }
  RunRecord oracle = records.front();
  if (std::abs(scaled_cumulative_reward(oracle.oracle_best, oracle) - 1.0) > 1e-12) return "argmax policy != 1";
  if (std::abs(scaled_cumulative_reward(oracle.oracle_worst, oracle)) > 1e-12) return "argmin policy != 0";
  return {};
}

std::string exp4p_distribution(Rng& rng) {
  Exp4p e(4, 3, 100);
  Eigen::MatrixXd advice = Eigen::MatrixXd::NullaryExpr(4, 3, [&] { return uniform01(rng); });
  const Eigen::MatrixXd dist = normalize_rows(advice);
  ConfidenceMatrix conf = Eigen::MatrixXd::Constant(4, 3, 0.5);
  for (int step = 0; step < 20; ++step) {
    const auto p = e.probabilities(dist, &conf);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) return "probabilities sum to " + fmt(total);
    const std::size_t arm = sample_from(p, rng);
    e.update(dist, p, arm, uniform01(rng) < 0.5 ? 1.0 : 0.0);
  }
  const auto w = e.normalized_weights(3);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) return "weights sum to " + fmt(total);
  return {};
}

std::string determinism(Rng&) {
  ExperimentConfig c = tiny_config();
  const std::string a = sweep_csv(run_sweep(c));
  c.jobs = 2;
  const std::string b = sweep_csv(run_sweep(c));
  if (a != b) return "sweep output depends on worker count";
  const std::size_t rows = static_cast<std::size_t>(std::count(a.begin(), a.end(), '\n')) - 1;
  if (rows != c.delta_grid.size() * c.runs * c.algorithms.size()) return "unexpected row count";
  return {};
}

}  // namespace

std::vector<SelftestCheck> run_selftest(std::uint64_t seed) {
  const std::pair<const char*, Check> checks[] = {
      {"landscape values in [0,1], inverse is 1-f", landscape_bounds},
      {"rotation with rho -> 1 is the identity", rotation_identity},
      {"calibration reaches delta within 0.02", calibration},
      {"hindsight confidence anchors", hindsight_anchors},
      {"record identities", record_identities},
      {"EXP4.P distributions", exp4p_distribution},
      {"sweep determinism", determinism},
  };
  std::vector<SelftestCheck> out;
  std::uint64_t i = 0;
  for (const auto& [name, check] : checks) {
    Rng rng = derive_rng(seed, {i++}, Role::Policy);
    SelftestCheck result{name, false, {}};
    try {
      result.detail = check(rng);
      result.passed = result.detail.empty();
    } catch (const std::exception& e) {
      result.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(result));
  }
  return out;
}

}  // namespace cdm

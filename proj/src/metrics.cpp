#include "cdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cdm/rng.hpp"

namespace cdm {

void RunRecord::validate() const {
  const std::size_t t = oracle_best.size();
  auto same = [t](std::size_t n) { return n == t; };
  if (!same(rewards.size()) || !same(expected_rewards.size()) || !same(oracle_worst.size()) ||
      !same(oracle_mean.size()) || !same(chosen_arms.size())) {
    throw std::invalid_argument("RunRecord: series lengths differ");
  }
  for (const auto& e : expert_rewards) {
    if (!same(e.size())) throw std::invalid_argument("RunRecord: expert series length differs");
  }
  for (std::size_t i = 0; i < t; ++i) {
    if (oracle_worst[i] > oracle_mean[i] || oracle_mean[i] > oracle_best[i]) {
      throw std::invalid_argument("RunRecord: oracle series out of order");
    }
  }
}

double cumulative_reward(std::span<const double> rewards) {
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

namespace {

double scale_against(double total, const RunRecord& record) {
  const double lo = cumulative_reward(record.oracle_worst);
  const double hi = cumulative_reward(record.oracle_best);
  if (!(hi > lo)) throw NumericError("scaled reward: best and worst oracle totals coincide");
  return (total - lo) / (hi - lo);
}

void require_length(std::span<const double> series, const RunRecord& record) {
  if (series.size() != record.steps()) {
    throw std::invalid_argument("reward series length does not match the record");
  }
}

}  // namespace

double scaled_cumulative_reward(std::span<const double> rewards, const RunRecord& record) {
  require_length(rewards, record);
  return scale_against(cumulative_reward(rewards), record);
}

double scaled_cumulative_reward(const RunRecord& record) {
  return scaled_cumulative_reward(record.rewards, record);
}

double random_baseline(const RunRecord& record) {
  return scale_against(cumulative_reward(record.oracle_mean), record);
}

double regret_vs_best_expert(std::span<const double> rewards, const RunRecord& record) {
  if (record.expert_rewards.empty()) throw std::invalid_argument("regret: record has no experts");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& e : record.expert_rewards) best = std::max(best, cumulative_reward(e));
  return best - cumulative_reward(rewards);
}

double regret_vs_best_expert(const RunRecord& record) {
  return regret_vs_best_expert(record.rewards, record);
}

std::vector<double> anytime_average(std::span<const double> rewards, const RunRecord& record) {
  require_length(rewards, record);
  std::vector<double> out(rewards.size());
  double sum = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    sum += rewards[t];
    lo += record.oracle_worst[t];
    hi += record.oracle_best[t];
    // The 1/(t+1) of each running mean cancels in the ratio.
    if (!(hi > lo)) throw NumericError("anytime_average: degenerate oracle prefix");
    out[t] = (sum - lo) / (hi - lo);
  }
  return out;
}

std::optional<std::size_t> crossover_step(std::span<const double> algorithm,
                                          std::span<const double> reference,
                                          std::size_t burn_in, std::size_t window) {
  if (algorithm.size() != reference.size()) {
    throw std::invalid_argument("crossover_step: series lengths differ");
  }
  const std::size_t n = algorithm.size();
  // next_below[t]: first index >= t where the algorithm trails, n if none.
  std::vector<std::size_t> next_below(n + 1, n);
  for (std::size_t t = n; t-- > 0;) {
    next_below[t] = algorithm[t] < reference[t] ? t : next_below[t + 1];
  }
  for (std::size_t t = burn_in; t < n; ++t) {
    if (algorithm[t] < reference[t]) continue;
    const std::size_t end = std::min(n, t + window + 1);
    if (next_below[t] >= end) return t;
  }
  return std::nullopt;
}

double pearson_cc(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("pearson_cc: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("pearson_cc: need at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw NumericError("pearson_cc: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

MeanStd mean_std(std::span<const double> xs) {
  if (xs.empty()) return {};
  const double n = static_cast<double>(xs.size());
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0))};
}

LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("linear_fit: need matching series of length >= 2");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(sxx > 0.0)) throw NumericError("linear_fit: zero variance in x");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace cdm

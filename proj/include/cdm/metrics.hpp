#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cdm {

/// Everything recorded for one CDM episode of T steps.
///
/// `rewards` holds the Bernoulli outcomes actually observed, `expected_rewards`
/// the landscape value of the pulled arm. The oracle series are the per-step
/// max/min/mean over arms of the true landscape; `expert_rewards[n][t]` is the
/// expected reward of expert n's greedy arm at step t.
struct RunRecord {
  std::vector<double> rewards;
  std::vector<double> expected_rewards;
  std::vector<double> oracle_best;
  std::vector<double> oracle_worst;
  std::vector<double> oracle_mean;
  std::vector<std::vector<double>> expert_rewards;
  std::vector<std::size_t> chosen_arms;
  std::vector<double> final_weights;

  std::size_t steps() const { return oracle_best.size(); }
  /// Throws std::invalid_argument if series lengths or oracle ordering disagree.
  void validate() const;
};

double cumulative_reward(std::span<const double> rewards);

/// (sum r - sum worst) / (sum best - sum worst); throws NumericError when the
/// oracle bounds coincide.
double scaled_cumulative_reward(std::span<const double> rewards, const RunRecord& record);
double scaled_cumulative_reward(const RunRecord& record);

/// Scaled reward of the uniform random policy on the record's contexts.
double random_baseline(const RunRecord& record);

double regret_vs_best_expert(std::span<const double> rewards, const RunRecord& record);
double regret_vs_best_expert(const RunRecord& record);

/// Element t is the running mean of rewards[0..t] scaled by the running
/// means of the oracle bounds.
std::vector<double> anytime_average(std::span<const double> rewards, const RunRecord& record);

inline constexpr std::size_t kCrossoverBurnIn = 10;
inline constexpr std::size_t kCrossoverWindow = 50;

/// First step t >= burn_in at which `algorithm` >= `reference` and stays so
/// for the next `window` steps (or until the series ends).
std::optional<std::size_t> crossover_step(std::span<const double> algorithm,
                                          std::span<const double> reference,
                                          std::size_t burn_in = kCrossoverBurnIn,
                                          std::size_t window = kCrossoverWindow);

double pearson_cc(std::span<const double> xs, std::span<const double> ys);

/// Mean and sample standard deviation (n-1 denominator; 0 for n < 2).
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> xs);

/// Least-squares line y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys);

}  // namespace cdm

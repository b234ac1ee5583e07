#pragma once

// Experiment orchestration.
//
// Every random quantity of a cell is drawn from a stream derived from
// (master seed, cell identifiers, role), so cells can run in any order on any
// number of workers and produce the same bytes:
//
//   truth, contexts : (K, delta, run)
//   panel, confidence noise : (K, N, kind, delta, run)
//   policy : (K, N, kind, delta, run, algorithm)
//   reward noise : keyed uniform on (t, arm) under (K, delta, run)
//
// Delta enters the key as round(delta * 1e9), so the same delta reached from
// different grids shares its seeds.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdm/config.hpp"
#include "cdm/experts.hpp"
#include "cdm/metrics.hpp"
#include "cdm/perlin.hpp"
#include "cdm/policies.hpp"

namespace cdm {

std::uint64_t delta_key(double delta);

struct CellId {
  std::size_t arms = 4;
  std::size_t experts = 4;
  ConfigKind kind = ConfigKind::Homogeneous;
  double delta = 0.0;
  std::size_t run = 0;
};

/// Seed derivation for one role of one cell.
Rng cell_rng(std::uint64_t master_seed, const CellId& cell, Role role);
Rng policy_rng(std::uint64_t master_seed, const CellId& cell, Algorithm algorithm);
std::uint64_t reward_key(std::uint64_t master_seed, const CellId& cell);

/// The fixed ingredients of one cell: truth, trained panel, and context sequence.
struct CellSetup {
  CellId id;
  PerlinBandit truth;
  ExpertPanel panel;
  std::vector<Context> contexts;
  std::uint64_t reward_key = 0;
};

CellSetup prepare_cell(const ExperimentConfig& config, const CellId& id);

PolicyParams policy_params(const ExperimentConfig& config, std::size_t arms, std::size_t experts);

/// Runs all `algorithms` in lock-step on one cell so that each sees the same
/// contexts, advice, confidences and (t, arm)-keyed reward noise.
std::vector<RunRecord> run_cell(const ExperimentConfig& config, const CellSetup& cell,
                                std::span<const Algorithm> algorithms);

/// Single-algorithm episode with every stream derived from `rng`.
RunRecord run_episode(const PerlinBandit& truth, const ExpertPanel& panel, Algorithm algorithm,
                      const ExperimentConfig& config, Rng& rng);

/// Scaled cumulative rewards of every expert in a record.
std::vector<double> expert_scaled_rewards(const RunRecord& record);

struct SweepRow {
  std::string variant = "full";  // "full" or "top" (ablation)
  ConfigKind kind = ConfigKind::Homogeneous;
  std::size_t arms = 0;
  std::size_t experts = 0;
  double delta = 0.0;
  std::size_t run = 0;
  Algorithm algorithm = Algorithm::Random;
  double scaled_reward = 0.0;
  double best_expert = 0.0;
  double worst_expert = 0.0;
  double mean_expert = 0.0;
  double random_baseline = 0.0;
  std::optional<std::size_t> crossover;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

struct SweepCell {
  std::string variant;
  ConfigKind kind;
  std::size_t arms;
  std::size_t experts;
  double delta;
  Algorithm algorithm;
  MeanStd scaled_reward;
  MeanStd best_expert;
  MeanStd worst_expert;
  MeanStd mean_expert;
  MeanStd random_baseline;
};

/// Mean and standard deviation over runs, one entry per cell and algorithm.
std::vector<SweepCell> summarize(const SweepResult& result);
const SweepCell& find_cell(const std::vector<SweepCell>& cells, std::string_view variant,
                           std::size_t arms, std::size_t experts, double delta, Algorithm algorithm);

SweepResult run_sweep(const ExperimentConfig& config);

struct AblationResult {
  SweepResult full;
  SweepResult top;
};
AblationResult run_ablation(const ExperimentConfig& config);

struct AnytimeSeries {
  std::string name;  // algorithm name, or best_expert / worst_expert / random
  std::size_t arms = 0;
  std::size_t experts = 0;
  std::vector<double> mean;
  std::vector<double> std;
};

struct AnytimeResult {
  std::vector<AnytimeSeries> series;
  /// Per (arms, experts, run): meta-CMAB crossover over the best expert.
  struct Crossover {
    std::size_t arms;
    std::size_t experts;
    std::size_t run;
    std::optional<std::size_t> step;
  };
  std::vector<Crossover> crossovers;
  /// Per-run anytime curves keyed like `series`, kept for analysis.
  std::vector<std::vector<std::vector<double>>> per_run;
};
AnytimeResult run_anytime(const ExperimentConfig& config);

struct WeightRow {
  std::size_t run = 0;
  std::size_t expert = 0;
  double expected_reward = 0.0;
  double metacmab_weight = 0.0;
  double exp4p_weight = 0.0;
  bool is_best = false;
  double random_reward = 0.0;  // expected reward of the uniform random policy on the run
};
std::vector<WeightRow> run_weight_analysis(const ExperimentConfig& config);

struct PccRow {
  std::size_t pair = 0;
  std::string relation;  // "rotated", "self" or "inverse"
  double scaled_distance = 0.0;
  double pcc = 0.0;
};
std::vector<PccRow> run_distance_pcc(const ExperimentConfig& config);

/// Calls task(i) for i in [0, count) on `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task);

}  // namespace cdm

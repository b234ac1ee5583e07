#include "cdm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace cdm {

std::uint64_t delta_key(double delta) {
  return static_cast<std::uint64_t>(std::llround(delta * 1e9));
}

namespace {

constexpr std::uint64_t kAdviceStream = 0xad;

std::uint64_t kind_key(ConfigKind kind) { return static_cast<std::uint64_t>(kind) + 1; }

}  // namespace

Rng cell_rng(std::uint64_t master_seed, const CellId& c, Role role) {
  switch (role) {
    case Role::Truth:
    case Role::Contexts:
    case Role::Reward:
      return derive_rng(master_seed, {c.arms, delta_key(c.delta), c.run}, role);
    default:
      return derive_rng(master_seed,
                        {c.arms, c.experts, kind_key(c.kind), delta_key(c.delta), c.run}, role);
  }
}

Rng policy_rng(std::uint64_t master_seed, const CellId& c, Algorithm algorithm) {
  return derive_rng(master_seed,
                    {c.arms, c.experts, kind_key(c.kind), delta_key(c.delta), c.run,
                     static_cast<std::uint64_t>(algorithm) + 1},
                    Role::Policy);
}

std::uint64_t reward_key(std::uint64_t master_seed, const CellId& c) {
  return mix_seed(master_seed, {c.arms, delta_key(c.delta), c.run, static_cast<std::uint64_t>(Role::Reward)});
}

PolicyParams policy_params(const ExperimentConfig& config, std::size_t arms, std::size_t experts) {
  PolicyParams p;
  p.arms = arms;
  p.experts = experts;
  p.horizon = config.horizon;
  p.delta = config.failure_delta;
  p.prior_strength = config.prior_strength;
  p.ucb_alpha = config.ucb_alpha;
  p.ridge = config.ridge;
  p.with_confidence = config.confidence.mode != ConfidenceMode::None;
  return p;
}

namespace {

PanelOptions panel_options(const ExperimentConfig& config) {
  PanelOptions o;
  o.training_steps = config.training_steps;
  o.backend = config.backend;
  o.kernel = config.kernel;
  o.tolerance = config.tolerance;
  o.distance_samples = config.distance_samples;
  return o;
}

bool wants_confidence(const ExperimentConfig& config) {
  return config.confidence.mode != ConfidenceMode::None;
}

// Core lock-step loop. `aux` feeds random-expert advice and confidence noise.
std::vector<RunRecord> run_lockstep(const ExperimentConfig& config, const PerlinBandit& truth,
                                    const ExpertPanel& panel, std::span<const Context> contexts,
                                    std::uint64_t rewards_key, std::span<const Algorithm> algorithms,
                                    std::vector<Rng>& policy_rngs, Rng& aux) {
  const std::size_t steps = contexts.size();
  const std::size_t k_arms = truth.arm_count();
  const std::size_t n_experts = panel.size();
  if (panel.arm_count() != k_arms) throw std::invalid_argument("panel and truth disagree on K");
  const bool with_conf = wants_confidence(config);
  if (with_conf && panel.confidences.size() != n_experts) {
    throw std::invalid_argument("confidence mode requires panel confidences");
  }

  const PolicyParams params = policy_params(config, k_arms, n_experts);
  std::vector<std::unique_ptr<Policy>> policies;
  for (Algorithm a : algorithms) policies.push_back(make_policy(a, params));

  RunRecord shared;
  shared.oracle_best.resize(steps);
  shared.oracle_worst.resize(steps);
  shared.oracle_mean.resize(steps);
  shared.expert_rewards.assign(n_experts, std::vector<double>(steps));

  std::vector<RunRecord> records(algorithms.size());
  for (RunRecord& r : records) {
    r.rewards.resize(steps);
    r.expected_rewards.resize(steps);
    r.chosen_arms.resize(steps);
  }

  std::vector<double> confidence(panel.confidences);
  if (with_conf && config.confidence.mode == ConfidenceMode::Noisy &&
      config.confidence.resample == NoiseResample::PerRun) {
    for (double& c : confidence) c = noisy_confidence(c, config.confidence.eta, aux);
  }

  std::vector<double> values(k_arms);
  for (std::size_t t = 0; t < steps; ++t) {
    const Context x = contexts[t];
    truth.values(x, values);
    AdviceSet advice{panel.advise(x, aux), std::nullopt};

    shared.oracle_best[t] = *std::max_element(values.begin(), values.end());
    shared.oracle_worst[t] = *std::min_element(values.begin(), values.end());
    double mean = 0.0;
    for (double v : values) mean += v;
    // Clamp against rounding so worst <= mean <= best holds exactly.
    shared.oracle_mean[t] = std::clamp(mean / static_cast<double>(k_arms), shared.oracle_worst[t],
                                       shared.oracle_best[t]);
    for (std::size_t n = 0; n < n_experts; ++n) {
      const Eigen::VectorXd row = advice.values.row(static_cast<Eigen::Index>(n)).transpose();
      shared.expert_rewards[n][t] =
          greedy_expected_value(std::span<const double>(row.data(), k_arms), values);
    }

    if (with_conf) {
      ConfidenceMatrix c(static_cast<Eigen::Index>(n_experts), static_cast<Eigen::Index>(k_arms));
      for (std::size_t n = 0; n < n_experts; ++n) {
        double cn = confidence[n];
        if (config.confidence.mode == ConfidenceMode::Noisy &&
            config.confidence.resample == NoiseResample::PerStep) {
          cn = noisy_confidence(panel.confidences[n], config.confidence.eta, aux);
        }
        c.row(static_cast<Eigen::Index>(n)).setConstant(cn);
      }
      advice.confidence = std::move(c);
    }

    for (std::size_t p = 0; p < policies.size(); ++p) {
      const std::size_t arm = policies[p]->select(advice, policy_rngs[p]);
      if (arm >= k_arms) throw std::logic_error("policy selected an out-of-range arm");
      const double f = values[arm];
      const double r = keyed_uniform(rewards_key, t, arm) < f ? 1.0 : 0.0;
      policies[p]->update(advice, arm, r);
      records[p].rewards[t] = r;
      records[p].expected_rewards[t] = f;
      records[p].chosen_arms[t] = arm;
    }
  }

  for (std::size_t p = 0; p < policies.size(); ++p) {
    records[p].oracle_best = shared.oracle_best;
    records[p].oracle_worst = shared.oracle_worst;
    records[p].oracle_mean = shared.oracle_mean;
    records[p].expert_rewards = shared.expert_rewards;
    records[p].final_weights = policies[p]->weights_snapshot();
  }
  return records;
}

Rng advice_rng(std::uint64_t master_seed, const CellId& c) {
  return derive_rng(master_seed,
                    {c.arms, c.experts, kind_key(c.kind), delta_key(c.delta), c.run, kAdviceStream},
                    Role::Confidence);
}

}  // namespace

CellSetup prepare_cell(const ExperimentConfig& config, const CellId& id) {
  Rng truth_rng = cell_rng(config.master_seed, id, Role::Truth);
  Rng context_rng = cell_rng(config.master_seed, id, Role::Contexts);
  Rng panel_rng = cell_rng(config.master_seed, id, Role::Panel);

  PerlinBandit truth = sample_bandit(id.arms, config.grid_side, truth_rng);
  std::vector<Context> contexts = sample_contexts(config.horizon, context_rng);
  ExpertPanel panel = make_panel(id.kind, id.delta, id.experts, truth, panel_options(config), panel_rng);
  if (wants_confidence(config)) assign_hindsight_confidences(panel, truth, contexts, panel_rng);
  return {id, std::move(truth), std::move(panel), std::move(contexts),
          reward_key(config.master_seed, id)};
}

std::vector<RunRecord> run_cell(const ExperimentConfig& config, const CellSetup& cell,
                                std::span<const Algorithm> algorithms) {
  std::vector<Rng> rngs;
  for (Algorithm a : algorithms) rngs.push_back(policy_rng(config.master_seed, cell.id, a));
  Rng aux = advice_rng(config.master_seed, cell.id);
  return run_lockstep(config, cell.truth, cell.panel, cell.contexts, cell.reward_key, algorithms,
                      rngs, aux);
}

RunRecord run_episode(const PerlinBandit& truth, const ExpertPanel& panel, Algorithm algorithm,
                      const ExperimentConfig& config, Rng& rng) {
  const auto contexts = sample_contexts(config.horizon, rng);
  const std::uint64_t key = rng();
  std::vector<Rng> rngs{Rng(rng())};
  Rng aux(rng());
  const ExpertPanel* used = &panel;
  ExpertPanel with_conf;
  if (wants_confidence(config) && panel.confidences.size() != panel.size()) {
    with_conf = panel;
    assign_hindsight_confidences(with_conf, truth, contexts, aux);
    used = &with_conf;
  }
  const Algorithm algos[] = {algorithm};
  return std::move(run_lockstep(config, truth, *used, contexts, key, algos, rngs, aux).front());
}

std::vector<double> expert_scaled_rewards(const RunRecord& record) {
  std::vector<double> out;
  out.reserve(record.expert_rewards.size());
  for (const auto& e : record.expert_rewards) out.push_back(scaled_cumulative_reward(e, record));
  return out;
}

namespace {

std::size_t best_expert_index(const RunRecord& record) {
  std::size_t best = 0;
  double best_total = -1.0;
  for (std::size_t n = 0; n < record.expert_rewards.size(); ++n) {
    const double total = cumulative_reward(record.expert_rewards[n]);
    if (total > best_total) {
      best_total = total;
      best = n;
    }
  }
  return best;
}

std::vector<SweepRow> rows_for_cell(const CellSetup& cell, std::span<const Algorithm> algorithms,
                                    const std::vector<RunRecord>& records, const std::string& variant) {
  std::vector<SweepRow> rows;
  const RunRecord& any = records.front();
  const auto experts = expert_scaled_rewards(any);
  const auto best_series =
      anytime_average(any.expert_rewards[best_expert_index(any)], any);
  SweepRow base;
  base.variant = variant;
  base.kind = cell.id.kind;
  base.arms = cell.id.arms;
  base.experts = cell.id.experts;
  base.delta = cell.id.delta;
  base.run = cell.id.run;
  base.best_expert = *std::max_element(experts.begin(), experts.end());
  base.worst_expert = *std::min_element(experts.begin(), experts.end());
  base.mean_expert = mean_std(experts).mean;
  base.random_baseline = random_baseline(any);
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    SweepRow row = base;
    row.algorithm = algorithms[i];
    row.scaled_reward = scaled_cumulative_reward(records[i].expected_rewards, records[i]);
    row.crossover = crossover_step(anytime_average(records[i].expected_rewards, records[i]), best_series);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CellId> enumerate_cells(const ExperimentConfig& config) {
  std::vector<CellId> cells;
  for (std::size_t k : config.arms) {
    for (std::size_t n : config.experts) {
      for (double d : config.delta_grid) {
        for (std::size_t r = 0; r < config.runs; ++r) cells.push_back({k, n, config.kind, d, r});
      }
    }
  }
  return cells;
}

SweepResult flatten(std::vector<std::vector<SweepRow>>& parts) {
  SweepResult out;
  for (auto& p : parts) {
    for (auto& r : p) out.rows.push_back(std::move(r));
  }
  return out;
}

}  // namespace

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  const auto cells = enumerate_cells(config);
  std::vector<std::vector<SweepRow>> parts(cells.size());
  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const CellSetup cell = prepare_cell(config, cells[i]);
    const auto records = run_cell(config, cell, config.algorithms);
    parts[i] = rows_for_cell(cell, config.algorithms, records, "full");
  });
  return flatten(parts);
}

AblationResult run_ablation(const ExperimentConfig& config) {
  config.validate();
  const auto cells = enumerate_cells(config);
  std::vector<std::vector<SweepRow>> full(cells.size());
  std::vector<std::vector<SweepRow>> top(cells.size());
  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const CellSetup cell = prepare_cell(config, cells[i]);
    const auto records = run_cell(config, cell, config.algorithms);
    full[i] = rows_for_cell(cell, config.algorithms, records, "full");

    // Oracle ranking by each expert's expected reward over this episode's contexts.
    std::vector<double> expected;
    for (const auto& series : records.front().expert_rewards) {
      expected.push_back(cumulative_reward(series) / static_cast<double>(series.size()));
    }
    CellSetup reduced = cell;
    reduced.panel = top_fraction(cell.panel, expected, config.fraction);
    reduced.id.experts = cell.id.experts;
    const auto top_records = run_cell(config, reduced, config.algorithms);
    top[i] = rows_for_cell(reduced, config.algorithms, top_records, "top");
  });
  return {flatten(full), flatten(top)};
}

std::vector<SweepCell> summarize(const SweepResult& result) {
  std::vector<SweepCell> cells;
  std::vector<std::vector<const SweepRow*>> members;
  for (const SweepRow& r : result.rows) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const SweepCell& c) {
      return c.variant == r.variant && c.kind == r.kind && c.arms == r.arms &&
             c.experts == r.experts && delta_key(c.delta) == delta_key(r.delta) &&
             c.algorithm == r.algorithm;
    });
    if (it == cells.end()) {
      cells.push_back({r.variant, r.kind, r.arms, r.experts, r.delta, r.algorithm, {}, {}, {}, {}, {}});
      members.emplace_back();
      it = cells.end() - 1;
    }
    members[static_cast<std::size_t>(it - cells.begin())].push_back(&r);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto collect = [&](double SweepRow::*field) {
      std::vector<double> v;
      for (const SweepRow* r : members[i]) v.push_back(r->*field);
      return mean_std(v);
    };
    cells[i].scaled_reward = collect(&SweepRow::scaled_reward);
    cells[i].best_expert = collect(&SweepRow::best_expert);
    cells[i].worst_expert = collect(&SweepRow::worst_expert);
    cells[i].mean_expert = collect(&SweepRow::mean_expert);
    cells[i].random_baseline = collect(&SweepRow::random_baseline);
  }
  return cells;
}

const SweepCell& find_cell(const std::vector<SweepCell>& cells, std::string_view variant,
                           std::size_t arms, std::size_t experts, double delta, Algorithm algorithm) {
  for (const SweepCell& c : cells) {
    if (c.variant == variant && c.arms == arms && c.experts == experts &&
        delta_key(c.delta) == delta_key(delta) && c.algorithm == algorithm) {
      return c;
    }
  }
  throw std::out_of_range("find_cell: no such cell");
}

AnytimeResult run_anytime(const ExperimentConfig& base) {
  ExperimentConfig config = base;
  config.delta_grid = {base.anytime_delta};
  config.validate();
  const auto cells = enumerate_cells(config);

  // Per cell: one curve per algorithm, then best expert, worst expert, random.
  std::vector<std::vector<std::vector<double>>> curves(cells.size());
  std::vector<std::optional<std::size_t>> crossovers(cells.size());
  const auto cmab = std::find(config.algorithms.begin(), config.algorithms.end(), Algorithm::MetaCmab);

  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const CellSetup cell = prepare_cell(config, cells[i]);
    const auto records = run_cell(config, cell, config.algorithms);
    const RunRecord& any = records.front();
    auto& out = curves[i];
    for (const RunRecord& r : records) out.push_back(anytime_average(r.expected_rewards, r));
    std::size_t worst = 0;
    double worst_total = 2.0 * static_cast<double>(any.steps()) + 1.0;
    for (std::size_t n = 0; n < any.expert_rewards.size(); ++n) {
      const double total = cumulative_reward(any.expert_rewards[n]);
      if (total < worst_total) {
        worst_total = total;
        worst = n;
      }
    }
    out.push_back(anytime_average(any.expert_rewards[best_expert_index(any)], any));
    out.push_back(anytime_average(any.expert_rewards[worst], any));
    out.push_back(anytime_average(any.oracle_mean, any));
    if (cmab != config.algorithms.end()) {
      const auto a = static_cast<std::size_t>(cmab - config.algorithms.begin());
      crossovers[i] = crossover_step(out[a], out[config.algorithms.size()]);
    }
  });

  std::vector<std::string> names;
  for (Algorithm a : config.algorithms) names.emplace_back(to_string(a));
  names.insert(names.end(), {"best_expert", "worst_expert", "random_baseline"});

  AnytimeResult result;
  std::size_t cell_index = 0;
  for (std::size_t k : config.arms) {
    for (std::size_t n : config.experts) {
      const std::size_t first = cell_index;
      cell_index += config.runs;
      for (std::size_t s = 0; s < names.size(); ++s) {
        AnytimeSeries series{names[s], k, n, std::vector<double>(config.horizon),
                             std::vector<double>(config.horizon)};
        std::vector<std::vector<double>> runs;
        for (std::size_t r = first; r < cell_index; ++r) runs.push_back(curves[r][s]);
        std::vector<double> column(runs.size());
        for (std::size_t t = 0; t < config.horizon; ++t) {
          for (std::size_t r = 0; r < runs.size(); ++r) column[r] = runs[r][t];
          const MeanStd ms = mean_std(column);
          series.mean[t] = ms.mean;
          series.std[t] = ms.std;
        }
        result.series.push_back(std::move(series));
        result.per_run.push_back(std::move(runs));
      }
      for (std::size_t r = first; r < cell_index; ++r) {
        result.crossovers.push_back({k, n, cells[r].run, crossovers[r]});
      }
    }
  }
  return result;
}

std::vector<WeightRow> run_weight_analysis(const ExperimentConfig& base) {
  ExperimentConfig config = base;
  config.delta_grid = {base.weights_delta};
  config.arms = {base.arms.front()};
  config.experts = {base.experts.front()};
  config.validate();
  const auto cells = enumerate_cells(config);
  const Algorithm algos[] = {Algorithm::MetaCmab, Algorithm::Exp4p};

  std::vector<std::vector<WeightRow>> parts(cells.size());
  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const CellSetup cell = prepare_cell(config, cells[i]);
    const auto records = run_cell(config, cell, algos);
    const RunRecord& any = records.front();
    const double steps = static_cast<double>(any.steps());
    const std::size_t best = best_expert_index(any);
    const double random_reward = cumulative_reward(any.oracle_mean) / steps;
    for (std::size_t n = 0; n < any.expert_rewards.size(); ++n) {
      parts[i].push_back({cells[i].run, n, cumulative_reward(any.expert_rewards[n]) / steps,
                          records[0].final_weights[n], records[1].final_weights[n], n == best,
                          random_reward});
    }
  });
  std::vector<WeightRow> rows;
  for (auto& p : parts) rows.insert(rows.end(), p.begin(), p.end());
  return rows;
}

std::vector<PccRow> run_distance_pcc(const ExperimentConfig& config) {
  config.validate();
  const std::size_t arms = config.arms.front();
  // Two anchor pairs (self, inverse) precede the rotated pairs.
  const std::size_t total = config.pcc_pairs + 2;
  std::vector<PccRow> rows(total);
  parallel_for(total, config.jobs, [&](std::size_t i) {
    Rng rng = derive_rng(config.master_seed, {arms, i}, Role::Distance);
    const PerlinBandit base = sample_bandit(arms, config.grid_side, rng);
    const auto contexts = sample_contexts(config.distance_samples, rng);
    PccRow row;
    row.pair = i;
    if (i == 0) {
      row.relation = "self";
      row.scaled_distance = scaled_distance(base, base, contexts);
      row.pcc = value_pcc(base, base, contexts);
    } else if (i == 1) {
      const PerlinBandit inv = invert_bandit(base);
      row.relation = "inverse";
      row.scaled_distance = scaled_distance(base, inv, contexts);
      row.pcc = value_pcc(base, inv, contexts);
    } else {
      // Random bias: mean 0 or pi with equal odds, concentration uniform on (0,1].
      const double mean = uniform01(rng) < 0.5 ? 0.0 : std::numbers::pi;
      const double rho = 1.0 - uniform01(rng);
      const PerlinBandit other = rotate_bandit(base, mean, rho, rng);
      row.relation = "rotated";
      row.scaled_distance = scaled_distance(base, other, contexts);
      row.pcc = value_pcc(base, other, contexts);
    }
    rows[i] = std::move(row);
  });
  return rows;
}

}  // namespace cdm

#include "cdm/experts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/random/beta_distribution.hpp>

namespace cdm {

std::string_view to_string(ConfigKind kind) {
  switch (kind) {
    case ConfigKind::Homogeneous: return "homogeneous";
    case ConfigKind::Heterogeneous: return "heterogeneous";
    case ConfigKind::Polarized: return "polarized";
  }
  return "?";
}

ConfigKind parse_config_kind(std::string_view text) {
  if (text == "homogeneous") return ConfigKind::Homogeneous;
  if (text == "heterogeneous") return ConfigKind::Heterogeneous;
  if (text == "polarized") return ConfigKind::Polarized;
  throw std::invalid_argument("unknown expert configuration: " + std::string(text));
}

std::string_view to_string(TrainingBackend backend) {
  return backend == TrainingBackend::KernelUcb ? "kernel_ucb" : "regression";
}

TrainingBackend parse_training_backend(std::string_view text) {
  if (text == "kernel_ucb") return TrainingBackend::KernelUcb;
  if (text == "regression") return TrainingBackend::Regression;
  throw std::invalid_argument("unknown training backend: " + std::string(text));
}

Expert::Expert(Model model) : model_(std::move(model)) {
  if (arm_count() < 1) throw std::invalid_argument("expert needs at least one arm");
}

std::size_t Expert::arm_count() const {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Trained>) return m.arms.size();
        else if constexpr (std::is_same_v<M, Landscape>) return m.bandit.arm_count();
        else return m.arm_count;
      },
      model_);
}

void Expert::advise(Context x, Rng& rng, std::span<double> out) const {
  if (out.size() != arm_count()) throw std::invalid_argument("advise: output size != K");
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Trained>) {
          for (std::size_t k = 0; k < out.size(); ++k) {
            out[k] = std::clamp(m.arms[k].mean(x), 0.0, 1.0);
          }
        } else if constexpr (std::is_same_v<M, Landscape>) {
          m.bandit.values(x, out);
        } else if constexpr (std::is_same_v<M, Constant>) {
          std::fill(out.begin(), out.end(), std::clamp(m.value, 0.0, 1.0));
        } else {
          for (double& v : out) v = uniform01(rng);
        }
      },
      model_);
}

std::vector<double> Expert::advise(Context x, Rng& rng) const {
  std::vector<double> out(arm_count());
  advise(x, rng, out);
  return out;
}

Expert oracle_expert(const PerlinBandit& truth) { return Expert(Expert::Landscape{truth}); }

Expert anti_oracle_expert(const PerlinBandit& truth) {
  Expert e(Expert::Landscape{invert_bandit(truth)});
  e.target_distance = 1.0;
  e.achieved_distance = 1.0;
  return e;
}

Expert constant_expert(std::size_t arm_count, double value) {
  return Expert(Expert::Constant{arm_count, value});
}

Expert random_expert(std::size_t arm_count) { return Expert(Expert::Random{arm_count}); }

Expert train_expert(const PerlinBandit& prior, std::size_t steps, TrainingBackend backend,
                    const KernelParams& params, Rng& rng) {
  if (steps < 1) throw std::invalid_argument("train_expert: need at least one training step");
  const std::size_t k_arms = prior.arm_count();
  std::vector<KernelRidge> arms(k_arms, KernelRidge(params));
  std::vector<double> scores(k_arms);

  for (std::size_t t = 0; t < steps; ++t) {
    const Context x = sample_context(rng);
    std::size_t arm = t % k_arms;
    if (backend == TrainingBackend::KernelUcb) {
      for (std::size_t k = 0; k < k_arms; ++k) {
        const auto [m, s] = arms[k].mean_and_stddev(x);
        scores[k] = m + params.exploration * s;
      }
      arm = argmax_random_tie(scores, rng);
    }
    const int reward = pull(prior, arm, x, rng);
    arms[arm].add(x, static_cast<double>(reward));
  }

  Expert e(Expert::Trained{std::move(arms)});
  e.trained_steps = steps;
  e.prior = prior;
  return e;
}

std::size_t ExpertPanel::arm_count() const {
  if (experts.empty()) throw std::invalid_argument("empty panel");
  return experts.front().arm_count();
}

AdviceMatrix ExpertPanel::advise(Context x, Rng& rng) const {
  const std::size_t k = arm_count();
  AdviceMatrix m(static_cast<Eigen::Index>(experts.size()), static_cast<Eigen::Index>(k));
  std::vector<double> row(k);
  for (std::size_t n = 0; n < experts.size(); ++n) {
    experts[n].advise(x, rng, row);
    for (std::size_t a = 0; a < k; ++a) {
      m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(a)) = row[a];
    }
  }
  return m;
}

std::vector<double> panel_targets(ConfigKind kind, double delta, std::size_t n) {
  if (n < 1) throw std::invalid_argument("panel needs at least one expert");
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must be in [0,1]");
  const double window = std::min(delta, 1.0 - delta);
  const double lo = std::max(0.0, delta - window);
  const double hi = std::min(1.0, delta + window);
  std::vector<double> targets(n, delta);
  switch (kind) {
    case ConfigKind::Homogeneous:
      break;
    case ConfigKind::Heterogeneous:
      if (n > 1) {
        for (std::size_t i = 0; i < n; ++i) {
          targets[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        }
      }
      break;
    case ConfigKind::Polarized: {
      // Odd panels put the extra expert in the cluster nearer the truth.
      const std::size_t near = (n + 1) / 2;
      for (std::size_t i = 0; i < n; ++i) targets[i] = i < near ? lo : hi;
      break;
    }
  }
  return targets;
}

ExpertPanel make_panel(ConfigKind kind, double delta, std::size_t n, const PerlinBandit& truth,
                       const PanelOptions& options, Rng& rng) {
  const auto targets = panel_targets(kind, delta, n);
  const std::size_t steps = options.training_steps > 0
                                ? options.training_steps
                                : kTrainingStepsPerArm * truth.arm_count();
  // Per-expert child seeds are drawn up front so experts can be built in any order.
  std::vector<std::uint64_t> seeds(n);
  for (auto& s : seeds) s = rng();

  ExpertPanel panel;
  panel.experts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng child(seeds[i]);
    CalibratedBandit prior = calibrate_bias(truth, targets[i], options.tolerance, child,
                                            options.distance_samples);
    Expert e = train_expert(prior.bandit, steps, options.backend, options.kernel, child);
    e.target_distance = targets[i];
    e.achieved_distance = prior.achieved;
    panel.experts.push_back(std::move(e));
  }
  return panel;
}

double greedy_expected_value(std::span<const double> advice, std::span<const double> truth_values) {
  if (advice.size() != truth_values.size() || advice.empty()) {
    throw std::invalid_argument("greedy_expected_value: size mismatch");
  }
  const double top = *std::max_element(advice.begin(), advice.end());
  double sum = 0.0;
  int ties = 0;
  for (std::size_t k = 0; k < advice.size(); ++k) {
    if (advice[k] == top) {
      sum += truth_values[k];
      ++ties;
    }
  }
  return sum / ties;
}

double expert_expected_reward(const Expert& expert, const PerlinBandit& truth,
                              std::span<const Context> contexts, Rng& rng) {
  if (contexts.empty()) throw std::invalid_argument("expert_expected_reward: no contexts");
  std::vector<double> advice(truth.arm_count());
  std::vector<double> values(truth.arm_count());
  double total = 0.0;
  for (const Context& x : contexts) {
    expert.advise(x, rng, advice);
    truth.values(x, values);
    total += greedy_expected_value(advice, values);
  }
  return total / static_cast<double>(contexts.size());
}

double expert_expected_reward(const Expert& expert, const PerlinBandit& truth,
                              std::size_t n_samples, Rng& rng) {
  const auto contexts = sample_contexts(n_samples, rng);
  return expert_expected_reward(expert, truth, contexts, rng);
}

double confidence_from_totals(double reward, double worst, double best, double uniform) {
  if (!(best > worst)) throw NumericError("confidence: best and worst totals coincide");
  const double span = best - worst;
  const double u = (uniform - worst) / span;
  if (!(u > 0.0 && u < 1.0)) throw NumericError("confidence: random policy not strictly inside bounds");
  const double ratio = std::clamp((reward - worst) / span, 0.0, 1.0);
  const double kappa = std::log(0.5) / std::log(u);
  return std::pow(ratio, kappa);
}

double hindsight_confidence(const Expert& expert, const PerlinBandit& truth,
                            std::span<const Context> contexts, Rng& rng) {
  if (expert.is_random()) return 0.5;
  if (contexts.empty()) throw std::invalid_argument("hindsight_confidence: no contexts");
  std::vector<double> advice(truth.arm_count());
  std::vector<double> values(truth.arm_count());
  double reward = 0.0;
  double best = 0.0;
  double worst = 0.0;
  double uniform = 0.0;
  for (const Context& x : contexts) {
    expert.advise(x, rng, advice);
    truth.values(x, values);
    reward += greedy_expected_value(advice, values);
    best += *std::max_element(values.begin(), values.end());
    worst += *std::min_element(values.begin(), values.end());
    uniform += std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
  return confidence_from_totals(reward, worst, best, uniform);
}

double hindsight_confidence(const Expert& expert, const PerlinBandit& truth,
                            std::size_t n_samples, Rng& rng) {
  const auto contexts = sample_contexts(n_samples, rng);
  return hindsight_confidence(expert, truth, contexts, rng);
}

double noisy_confidence(double c, double eta, Rng& rng) {
  if (!(eta >= 0.0)) throw std::invalid_argument("noisy_confidence: eta must be >= 0");
  if (eta == 0.0) return c;
  return boost::random::beta_distribution<double>(1.0 + c / eta, 1.0 + (1.0 - c) / eta)(rng);
}

void assign_hindsight_confidences(ExpertPanel& panel, const PerlinBandit& truth,
                                  std::span<const Context> contexts, Rng& rng) {
  panel.confidences.clear();
  for (const Expert& e : panel.experts) {
    panel.confidences.push_back(hindsight_confidence(e, truth, contexts, rng));
  }
}

ExpertPanel top_fraction(const ExpertPanel& panel, std::span<const double> expected_rewards,
                         double fraction) {
  if (expected_rewards.size() != panel.size()) {
    throw std::invalid_argument("top_fraction: one expected reward per expert required");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("top_fraction: fraction not in (0,1]");
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(panel.size()) - 1e-12));
  if (keep < 1) throw std::invalid_argument("top_fraction: empty result");

  std::vector<std::size_t> order(panel.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return expected_rewards[a] > expected_rewards[b];
  });
  order.resize(keep);
  std::sort(order.begin(), order.end());

  ExpertPanel out;
  for (std::size_t i : order) {
    out.experts.push_back(panel.experts[i]);
    if (!panel.confidences.empty()) out.confidences.push_back(panel.confidences[i]);
  }
  return out;
}

ExpertPanel top_fraction(const ExpertPanel& panel, const PerlinBandit& truth, double fraction,
                         Rng& rng, std::size_t n_samples) {
  const auto contexts = sample_contexts(n_samples, rng);
  std::vector<double> rewards;
  rewards.reserve(panel.size());
  for (const Expert& e : panel.experts) {
    rewards.push_back(expert_expected_reward(e, truth, contexts, rng));
  }
  return top_fraction(panel, rewards, fraction);
}

nlohmann::json panel_snapshot(const ExpertPanel& panel) {
  nlohmann::json experts = nlohmann::json::array();
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const Expert& e = panel.experts[i];
    nlohmann::json j = {{"target_distance", e.target_distance},
                        {"achieved_distance", e.achieved_distance},
                        {"trained_steps", e.trained_steps},
                        {"random", e.is_random()}};
    if (!panel.confidences.empty()) j["confidence"] = panel.confidences[i];
    experts.push_back(std::move(j));
  }
  return {{"experts", std::move(experts)}};
}

}  // namespace cdm

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cdm/kernel_ridge.hpp"
#include "cdm/perlin.hpp"
#include "cdm/rng.hpp"

namespace cdm {

/// N x K per-step expert outputs (advice values or confidences), row = expert.
using AdviceMatrix = Eigen::MatrixXd;
using ConfidenceMatrix = Eigen::MatrixXd;

enum class ConfigKind { Homogeneous, Heterogeneous, Polarized };
std::string_view to_string(ConfigKind kind);
ConfigKind parse_config_kind(std::string_view text);

enum class TrainingBackend { KernelUcb, Regression };
std::string_view to_string(TrainingBackend backend);
TrainingBackend parse_training_backend(std::string_view text);

inline constexpr std::size_t kTrainingStepsPerArm = 100;

/// A value estimator over K arms plus the provenance of its bias.
class Expert {
 public:
  struct Trained {
    std::vector<KernelRidge> arms;
  };
  /// Reads values straight from a bandit (oracle or anti-oracle experts).
  struct Landscape {
    PerlinBandit bandit;
  };
  struct Constant {
    std::size_t arm_count;
    double value;
  };
  /// Fresh i.i.d. uniform advice at every call.
  struct Random {
    std::size_t arm_count;
  };
  using Model = std::variant<Trained, Landscape, Constant, Random>;

  explicit Expert(Model model);

  std::size_t arm_count() const;
  bool is_random() const { return std::holds_alternative<Random>(model_); }
  const Model& model() const { return model_; }

  /// Clamped value estimates for every arm at x. `rng` is only consumed by
  /// random experts.
  void advise(Context x, Rng& rng, std::span<double> out) const;
  std::vector<double> advise(Context x, Rng& rng) const;

  double target_distance = 0.0;
  double achieved_distance = 0.0;
  std::size_t trained_steps = 0;
  std::optional<PerlinBandit> prior;

 private:
  Model model_;
};

Expert oracle_expert(const PerlinBandit& truth);
Expert anti_oracle_expert(const PerlinBandit& truth);
Expert constant_expert(std::size_t arm_count, double value);
Expert random_expert(std::size_t arm_count);

/// Per-arm kernel ridge models trained for `steps` pulls on `prior`.
Expert train_expert(const PerlinBandit& prior, std::size_t steps, TrainingBackend backend,
                    const KernelParams& params, Rng& rng);

struct ExpertPanel {
  std::vector<Expert> experts;
  /// Per-expert hindsight confidence; empty when experts give none.
  std::vector<double> confidences;

  std::size_t size() const { return experts.size(); }
  std::size_t arm_count() const;
  AdviceMatrix advise(Context x, Rng& rng) const;
};

/// Target distances for the N experts of a configuration.
std::vector<double> panel_targets(ConfigKind kind, double delta, std::size_t n);

struct PanelOptions {
  std::size_t training_steps = 0;  // 0 selects K * 100
  TrainingBackend backend = TrainingBackend::KernelUcb;
  KernelParams kernel;
  double tolerance = 0.02;
  std::size_t distance_samples = kDefaultDistanceSamples;
};

/// Calibrates one prior bandit per expert and trains an expert on it.
ExpertPanel make_panel(ConfigKind kind, double delta, std::size_t n, const PerlinBandit& truth,
                       const PanelOptions& options, Rng& rng);

/// Expected landscape value of the arm an expert picks greedily from `advice`,
/// averaging over tied maxima (uniform tie-breaking in expectation).
double greedy_expected_value(std::span<const double> advice, std::span<const double> truth_values);

double expert_expected_reward(const Expert& expert, const PerlinBandit& truth,
                              std::span<const Context> contexts, Rng& rng);
double expert_expected_reward(const Expert& expert, const PerlinBandit& truth,
                              std::size_t n_samples, Rng& rng);

/// ((R - R-) / (R+ - R-))^kappa with kappa chosen so that R = R_uniform maps to 0.5.
double confidence_from_totals(double reward, double worst, double best, double uniform);

double hindsight_confidence(const Expert& expert, const PerlinBandit& truth,
                            std::span<const Context> contexts, Rng& rng);
double hindsight_confidence(const Expert& expert, const PerlinBandit& truth,
                            std::size_t n_samples, Rng& rng);

/// One draw from Beta(1 + c/eta, 1 + (1-c)/eta); eta = 0 returns c.
double noisy_confidence(double c, double eta, Rng& rng);

/// Fills panel.confidences with hindsight confidences measured on `contexts`.
void assign_hindsight_confidences(ExpertPanel& panel, const PerlinBandit& truth,
                                  std::span<const Context> contexts, Rng& rng);

/// Keeps the ceil(fraction * N) experts with the highest expected reward,
/// preserving panel order.
ExpertPanel top_fraction(const ExpertPanel& panel, const PerlinBandit& truth, double fraction,
                         Rng& rng, std::size_t n_samples = kDefaultDistanceSamples);
ExpertPanel top_fraction(const ExpertPanel& panel, std::span<const double> expected_rewards,
                         double fraction);

/// Targets, achieved distances and confidences; estimator state is omitted.
nlohmann::json panel_snapshot(const ExpertPanel& panel);

}  // namespace cdm

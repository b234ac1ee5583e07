#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cdm/experts.hpp"
#include "cdm/kernel_ridge.hpp"
#include "cdm/policies.hpp"

namespace cdm {

enum class ConfidenceMode { None, Hindsight, Noisy };

/// How often a noisy confidence is redrawn from its Beta distribution.
enum class NoiseResample { PerRun, PerStep };

struct ConfidenceSetting {
  ConfidenceMode mode = ConfidenceMode::None;
  double eta = 0.0;
  NoiseResample resample = NoiseResample::PerStep;
};

/// "none", "hindsight" or "noisy:<eta>".
ConfidenceSetting parse_confidence(std::string_view text);
std::string to_string(const ConfidenceSetting& setting);

/// One declarative description of an experiment. Every field can be set from
/// a key=value config file or a CLI flag; see apply_setting for the keys.
struct ExperimentConfig {
  std::vector<std::size_t> arms{4};
  std::vector<std::size_t> experts{4};
  ConfigKind kind = ConfigKind::Homogeneous;
  std::vector<double> delta_grid{0.0, 1.0 / 6, 2.0 / 6, 3.0 / 6, 4.0 / 6, 5.0 / 6, 1.0};
  std::size_t horizon = 1000;         // T_cdm
  std::size_t training_steps = 0;     // T_tr; 0 means K * 100
  std::size_t runs = 32;
  std::vector<Algorithm> algorithms{std::begin(kAllAlgorithms), std::end(kAllAlgorithms)};
  ConfidenceSetting confidence;
  double prior_strength = 100.0;      // M
  double failure_delta = 0.1;         // EXP4.P delta
  double ucb_alpha = 1.0;
  double ridge = 1.0;                 // LinUCB lambda_r
  KernelParams kernel;
  TrainingBackend backend = TrainingBackend::KernelUcb;
  double tolerance = 0.02;
  std::size_t grid_side = kDefaultGridSide;
  std::size_t distance_samples = kDefaultDistanceSamples;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;
  double fraction = 0.5;              // ablation keep fraction
  double anytime_delta = 0.5;
  double weights_delta = 0.5;
  std::size_t pcc_pairs = 500;

  void validate() const;
};

/// Sets one field from its textual key and value; throws on unknown keys.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
/// String values may be double-quoted and lists are comma separated.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace cdm

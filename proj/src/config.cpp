#include "cdm/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cdm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string_view> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto item = unquote(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

double parse_double(std::string_view key, std::string_view text) {
  text = unquote(text);
  // Fractions such as 1/6 are accepted for readability of delta grids.
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    return parse_double(key, text.substr(0, slash)) / parse_double(key, text.substr(slash + 1));
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("config: '" + std::string(key) + "' expects a number, got '" +
                                std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  text = unquote(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("config: '" + std::string(key) + "' expects a non-negative integer, got '" +
                                std::string(text) + "'");
  }
  return v;
}

std::string number_text(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ConfidenceSetting parse_confidence(std::string_view text) {
  text = unquote(text);
  if (text == "none") return {};
  if (text == "hindsight") return {ConfidenceMode::Hindsight, 0.0};
  if (text.starts_with("noisy:")) {
    const double eta = parse_double("confidence", text.substr(6));
    if (!(eta >= 0.0)) throw std::invalid_argument("confidence: eta must be >= 0");
    return {ConfidenceMode::Noisy, eta};
  }
  throw std::invalid_argument("confidence must be none, hindsight or noisy:<eta>, got '" +
                              std::string(text) + "'");
}

std::string to_string(const ConfidenceSetting& setting) {
  switch (setting.mode) {
    case ConfidenceMode::None: return "none";
    case ConfidenceMode::Hindsight: return "hindsight";
    case ConfidenceMode::Noisy: return "noisy:" + number_text(setting.eta);
  }
  return "?";
}

void ExperimentConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw std::invalid_argument(std::string("config: ") + what + " must be positive");
  };
  if (arms.empty() || experts.empty()) throw std::invalid_argument("config: arms and experts must be non-empty");
  for (std::size_t k : arms) {
    if (k < 2) throw std::invalid_argument("config: arm counts must be >= 2");
  }
  for (std::size_t n : experts) positive(n, "expert counts");
  if (delta_grid.empty()) throw std::invalid_argument("config: delta grid must be non-empty");
  for (double d : delta_grid) {
    if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("config: delta grid must lie in [0,1]");
  }
  positive(horizon, "horizon");
  positive(runs, "runs");
  positive(jobs, "jobs");
  positive(distance_samples, "distance_samples");
  if (algorithms.empty()) throw std::invalid_argument("config: no algorithms selected");
  if (grid_side < 2) throw std::invalid_argument("config: grid_side must be >= 2");
  if (!(tolerance > 0.0)) throw std::invalid_argument("config: tolerance must be > 0");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("config: fraction must be in (0,1]");
  if (!(prior_strength >= 0.0)) throw std::invalid_argument("config: M must be >= 0");
  if (!(failure_delta > 0.0)) throw std::invalid_argument("config: delta must be > 0");
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  key = trim(key);
  const auto sizes = [&] {
    std::vector<std::size_t> out;
    for (auto item : split_list(value)) out.push_back(parse_unsigned(key, item));
    return out;
  };
  const auto number = [&] { return parse_double(key, value); };
  const auto count = [&] { return static_cast<std::size_t>(parse_unsigned(key, value)); };

  if (key == "arms") c.arms = sizes();
  else if (key == "experts") c.experts = sizes();
  else if (key == "config_kind" || key == "kind") c.kind = parse_config_kind(unquote(value));
  else if (key == "delta_grid") {
    c.delta_grid.clear();
    for (auto item : split_list(value)) c.delta_grid.push_back(parse_double(key, item));
  } else if (key == "T_cdm" || key == "horizon") c.horizon = count();
  else if (key == "T_tr" || key == "training_steps") c.training_steps = count();
  else if (key == "runs" || key == "runs_per_cell") c.runs = count();
  else if (key == "algorithms") {
    c.algorithms.clear();
    for (auto item : split_list(value)) c.algorithms.push_back(parse_algorithm(item));
  } else if (key == "confidence" || key == "confidence_mode") {
    const auto resample = c.confidence.resample;
    c.confidence = parse_confidence(value);
    c.confidence.resample = resample;
  } else if (key == "confidence_resample") {
    const auto v = unquote(value);
    if (v == "run") c.confidence.resample = NoiseResample::PerRun;
    else if (v == "step") c.confidence.resample = NoiseResample::PerStep;
    else throw std::invalid_argument("config: confidence_resample must be run or step");
  } else if (key == "M") c.prior_strength = number();
  else if (key == "delta" || key == "failure_delta") c.failure_delta = number();
  else if (key == "alpha_ucb") c.ucb_alpha = number();
  else if (key == "lambda_r") c.ridge = number();
  else if (key == "kernel_length_scale") c.kernel.length_scale = number();
  else if (key == "kernel_lambda") c.kernel.ridge = number();
  else if (key == "kernel_eta") c.kernel.exploration = number();
  else if (key == "backend") c.backend = parse_training_backend(unquote(value));
  else if (key == "tolerance") c.tolerance = number();
  else if (key == "grid_side") c.grid_side = count();
  else if (key == "distance_samples") c.distance_samples = count();
  else if (key == "master_seed" || key == "seed") c.master_seed = parse_unsigned(key, value);
  else if (key == "jobs") c.jobs = count();
  else if (key == "fraction") c.fraction = number();
  else if (key == "anytime_delta") c.anytime_delta = number();
  else if (key == "weights_delta") c.weights_delta = number();
  else if (key == "pcc_pairs") c.pcc_pairs = count();
  else throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

nlohmann::json to_json(const ExperimentConfig& c) {
  std::vector<std::string> algorithms;
  for (Algorithm a : c.algorithms) algorithms.emplace_back(to_string(a));
  return {
      {"arms", c.arms},
      {"experts", c.experts},
      {"config_kind", std::string(to_string(c.kind))},
      {"delta_grid", c.delta_grid},
      {"T_cdm", c.horizon},
      {"T_tr", c.training_steps},
      {"runs_per_cell", c.runs},
      {"algorithms", algorithms},
      {"confidence", to_string(c.confidence)},
      {"confidence_resample", c.confidence.resample == NoiseResample::PerRun ? "run" : "step"},
      {"M", c.prior_strength},
      {"delta", c.failure_delta},
      {"alpha_ucb", c.ucb_alpha},
      {"lambda_r", c.ridge},
      {"kernel_length_scale", c.kernel.length_scale},
      {"kernel_lambda", c.kernel.ridge},
      {"kernel_eta", c.kernel.exploration},
      {"backend", std::string(to_string(c.backend))},
      {"tolerance", c.tolerance},
      {"grid_side", c.grid_side},
      {"distance_samples", c.distance_samples},
      {"master_seed", c.master_seed},
      {"fraction", c.fraction},
      {"anytime_delta", c.anytime_delta},
      {"weights_delta", c.weights_delta},
      {"pcc_pairs", c.pcc_pairs},
  };
}

}  // namespace cdm

// cdm-lab: run collective decision-making experiments and plot their results.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdm/config.hpp"
#include "cdm/csv.hpp"
#include "cdm/harness.hpp"
#include "cdm/plot.hpp"
#include "cdm/selftest.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "results";
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::optional<std::size_t> jobs;
  std::string algorithms;
  std::string delta_grid;
  std::string arms;
  std::string experts;
  std::optional<std::size_t> runs;
  std::string confidence;
  std::string kind;
  std::vector<std::string> settings;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "key=value config file")->check(CLI::ExistingFile);
  app->add_option("--out", o.out_dir, "output directory")->capture_default_str();
  app->add_option("--seed", o.seed, "master seed");
  app->add_flag("--force", o.force, "overwrite existing outputs");
  app->add_option("--jobs", o.jobs, "worker threads (fallback: CDM_LAB_JOBS)")->check(CLI::PositiveNumber);
  app->add_option("--algorithms", o.algorithms, "comma list of wmv,metamab,exp4p,metacmab,random");
  app->add_option("--delta-grid", o.delta_grid, "comma list of value distances, fractions allowed");
  app->add_option("--arms", o.arms, "comma list of arm counts");
  app->add_option("--experts", o.experts, "comma list of expert counts");
  app->add_option("--runs", o.runs, "runs per cell")->check(CLI::PositiveNumber);
  app->add_option("--confidence", o.confidence, "none, hindsight or noisy:<eta>");
  app->add_option("--kind", o.kind, "homogeneous, heterogeneous or polarized");
  app->add_option("--set", o.settings, "extra key=value override (repeatable)");
}

cdm::ExperimentConfig resolve(const CommonOptions& o, cdm::ExperimentConfig base) {
  cdm::ExperimentConfig c = o.config_path.empty() ? base : cdm::load_config_file(o.config_path, base);
  if (const char* env = std::getenv("CDM_LAB_JOBS"); env && *env) cdm::apply_setting(c, "jobs", env);
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    cdm::apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!o.algorithms.empty()) cdm::apply_setting(c, "algorithms", o.algorithms);
  if (!o.delta_grid.empty()) cdm::apply_setting(c, "delta_grid", o.delta_grid);
  if (!o.arms.empty()) cdm::apply_setting(c, "arms", o.arms);
  if (!o.experts.empty()) cdm::apply_setting(c, "experts", o.experts);
  if (!o.confidence.empty()) cdm::apply_setting(c, "confidence", o.confidence);
  if (!o.kind.empty()) cdm::apply_setting(c, "kind", o.kind);
  if (o.runs) c.runs = *o.runs;
  if (o.seed) c.master_seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  c.validate();
  return c;
}

struct Output {
  std::string name;
  std::string contents;
};

void emit(const std::string& command, const CommonOptions& o, const cdm::ExperimentConfig& config,
          const std::vector<Output>& outputs) {
  const fs::path dir(o.out_dir);
  const fs::path sidecar = dir / (command + ".config.json");
  nlohmann::json meta{{"command", command}, {"master_seed", config.master_seed}, {"config", cdm::to_json(config)}};
  meta["outputs"] = nlohmann::json::array();
  for (const auto& out : outputs) meta["outputs"].push_back(out.name);
  for (const auto& out : outputs) cdm::write_text_file(dir / out.name, out.contents, o.force);
  cdm::write_text_file(sidecar, meta.dump(2) + "\n", o.force);
  for (const auto& out : outputs) std::cout << (dir / out.name).string() << '\n';
  std::cout << sidecar.string() << '\n';
}

// Fails before any work if an output would be overwritten.
void check_free(const CommonOptions& o, const std::string& command, std::initializer_list<const char*> names) {
  if (o.force) return;
  std::vector<fs::path> paths{fs::path(o.out_dir) / (command + ".config.json")};
  for (const char* n : names) paths.push_back(fs::path(o.out_dir) / n);
  for (const auto& p : paths) {
    if (fs::exists(p)) throw std::runtime_error(p.string() + " exists; pass --force to overwrite");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective decision-making experiments on Perlin contextual bandits"};
  app.require_subcommand(1);

  CommonOptions sweep_o, ablation_o, anytime_o, weights_o, pcc_o;
  auto* sweep = app.add_subcommand("sweep", "scaled reward across value distances");
  add_common(sweep, sweep_o);
  auto* ablation = app.add_subcommand("ablation", "full panel versus the top-fraction panel");
  add_common(ablation, ablation_o);
  auto* anytime = app.add_subcommand("anytime", "scaled average reward over time");
  add_common(anytime, anytime_o);
  auto* weights = app.add_subcommand("weights", "final policy weights against expert performance");
  add_common(weights, weights_o);
  auto* pcc = app.add_subcommand("pcc", "landscape correlation against scaled distance");
  add_common(pcc, pcc_o);

  std::string plot_csv, plot_out, plot_kind;
  bool plot_force = false;
  auto* plot = app.add_subcommand("plot", "render an SVG figure from a result CSV");
  plot->add_option("csv", plot_csv, "result CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "SVG path (default: CSV path with .svg)");
  plot->add_option("--kind", plot_kind, "sweep, ablation, anytime, weights or pcc (default: inferred)");
  plot->add_flag("--force", plot_force, "overwrite an existing SVG");

  std::uint64_t selftest_seed = 0;
  auto* selftest = app.add_subcommand("selftest", "invariant checks on tiny instances");
  selftest->add_option("--seed", selftest_seed, "seed for the checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      check_free(sweep_o, "sweep", {"sweep.csv"});
      const auto c = resolve(sweep_o, {});
      emit("sweep", sweep_o, c, {{"sweep.csv", cdm::sweep_csv(cdm::run_sweep(c))}});
    } else if (*ablation) {
      check_free(ablation_o, "ablation", {"ablation.csv"});
      const auto c = resolve(ablation_o, {});
      emit("ablation", ablation_o, c, {{"ablation.csv", cdm::ablation_csv(cdm::run_ablation(c))}});
    } else if (*anytime) {
      check_free(anytime_o, "anytime", {"anytime.csv", "anytime_crossover.csv"});
      const auto c = resolve(anytime_o, {});
      const auto r = cdm::run_anytime(c);
      emit("anytime", anytime_o, c,
           {{"anytime.csv", cdm::anytime_csv(r)}, {"anytime_crossover.csv", cdm::crossover_csv(r)}});
    } else if (*weights) {
      check_free(weights_o, "weights", {"weights.csv"});
      cdm::ExperimentConfig base;
      base.arms = {32};
      base.experts = {32};
      base.runs = 100;
      base.kind = cdm::ConfigKind::Heterogeneous;
      const auto c = resolve(weights_o, base);
      emit("weights", weights_o, c, {{"weights.csv", cdm::weights_csv(cdm::run_weight_analysis(c))}});
    } else if (*pcc) {
      check_free(pcc_o, "pcc", {"pcc.csv"});
      const auto c = resolve(pcc_o, {});
      emit("pcc", pcc_o, c, {{"pcc.csv", cdm::pcc_csv(cdm::run_distance_pcc(c))}});
    } else if (*plot) {
      const auto table = cdm::read_csv(plot_csv);
      const auto kind = plot_kind.empty() ? cdm::detect_plot_kind(table) : cdm::parse_plot_kind(plot_kind);
      const std::string svg = cdm::render_svg(table, kind);
      const fs::path out = plot_out.empty() ? fs::path(plot_csv).replace_extension(".svg") : fs::path(plot_out);
      cdm::write_text_file(out, svg, plot_force);
      std::cout << out.string() << '\n';
    } else if (*selftest) {
      bool ok = true;
      for (const auto& check : cdm::run_selftest(selftest_seed)) {
        std::cout << (check.passed ? "PASS " : "FAIL ") << check.name;
        if (!check.passed) std::cout << ": " << check.detail;
        std::cout << '\n';
        ok = ok && check.passed;
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "cdm-lab: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

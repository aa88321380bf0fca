#pragma once

#include "stlpi2/io.hpp"
#include "stlpi2/parallel.hpp"

namespace stlpi2 {

/// Command-line adjustments applied on top of a resolved config.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<int> samples;
  std::optional<bool> nesterov;
  std::optional<BaseLawSpec::Kind> base;
  std::optional<double> c0_scale;
};

ScenarioConfig apply_overrides(ScenarioConfig config, const RunOverrides& overrides);

/// Builtin name, scenario file, or manifest file. A manifest also carries
/// its seed into the config so a replay reproduces the recorded run.
ScenarioConfig resolve_scenario(const std::string& ref);

struct RunOutput {
  RunResult result;
  Manifest manifest;
};

RunOutput run_scenario(const Scenario& scenario, int threads = 0);

/// Writes history.jsonl, trajectory.csv, manifest.json, and optionally
/// plots/*.svg under `dir`.
void write_run_outputs(const Scenario& scenario, const RunOutput& output,
                       const std::filesystem::path& dir, bool plots);

/// First iterate whose mean-policy rollout clears rho_min, counting the
/// initial policy as iterate 0; K+1 when the run never gets there.
int iterations_to_satisfaction(double initial_robustness,
                               const std::vector<IterationRecord>& history, double rho_min);

struct CompareOptions {
  int repeats = 1;
  int eval_rollouts = 30;
  std::vector<BaseLawSpec::Kind> bases;        // default: ppc, lin
  std::vector<bool> nesterov_settings;         // default: config value
  std::vector<int> sample_counts;              // default: config value
  std::vector<double> cmin_values;             // diagonal value; default: config
  std::uint64_t base_seed = 0;                 // repeat r uses base_seed + r
  int threads = 0;
};

struct VariantResult {
  std::string label;
  std::vector<double> mean_cost_by_iteration;        // across repeats; index = iterate, from 0
  std::vector<double> mean_robustness_by_iteration;  // across repeats; index = iterate, from 0
  double mean_iterations_to_satisfaction = 0.0;
  double eval_cost_mean = 0.0;
  double eval_cost_std = 0.0;
  double eval_robustness_mean = 0.0;
  double eval_robustness_std = 0.0;
};

/// Runs every variant `repeats` times with distinct seeds, then evaluates
/// each final policy over fresh noisy rollouts. Statistics pool all
/// repeats of a variant.
std::vector<VariantResult> compare_variants(const ScenarioConfig& config,
                                            const CompareOptions& options);

void write_compare_csv(const std::vector<VariantResult>& results,
                       const std::filesystem::path& convergence_path,
                       const std::filesystem::path& summary_path);

}  // namespace stlpi2

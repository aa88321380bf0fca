#pragma once

#include "stlpi2/scenarios.hpp"

#include <filesystem>
#include <string>

namespace stlpi2 {

/// JSON form of a scenario config (key-value tree, one section per
/// module); the inverse of scenario_from_json on every field.
std::string scenario_to_json(const ScenarioConfig& config);
ScenarioConfig scenario_from_json(const std::string& text);

/// Reads either a bare scenario file or a run manifest (the config is
/// taken from its "scenario" section).
ScenarioConfig load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path);

/// Full record of one finished run: the resolved config, the seed, and
/// the final measurements. Re-running a manifest reproduces cost and
/// robustness bit for bit.
struct Manifest {
  ScenarioConfig scenario;
  std::uint64_t seed = 0;
  double final_cost = 0.0;
  double final_robustness = 0.0;
  int iterations_run = 0;
};

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);
bool is_manifest_file(const std::filesystem::path& path);

/// Delimited trajectory table: one row per grid point with columns
/// t, x0.., u0.. (zeros on the final row, which has no input), the exact
/// robustness of each subtask core, and each funnel's lower boundary.
void write_trajectory_csv(const Scenario& scenario, const Trajectory& traj,
                          const std::filesystem::path& path);

/// Reads back a trajectory written by write_trajectory_csv (only the t,
/// x* and u* columns are consulted).
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// One JSON record per line and iteration: k, lambda, min/mean objective,
/// and the updated-mean rollout's cost and robustness.
void write_history_jsonl(const std::vector<IterationRecord>& history,
                         const std::filesystem::path& path);
std::vector<IterationRecord> read_history_jsonl(const std::filesystem::path& path);

}  // namespace stlpi2

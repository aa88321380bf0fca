#pragma once

#include "stlpi2/io.hpp"

namespace stlpi2 {

/// Overhead view of a planar trajectory with the scenario's circular
/// regions (goal/obstacle balls) drawn in. Multi-agent states are split
/// into one polyline per coordinate pair.
void write_trajectory_svg(const Scenario& scenario, const Trajectory& traj,
                          const std::filesystem::path& path);

/// Per-subtask robustness traces against their funnel boundaries.
void write_funnel_svg(const Scenario& scenario, const Trajectory& traj,
                      const std::filesystem::path& path);

/// Cost and robustness of the updated-mean rollout across iterations.
void write_convergence_svg(const std::vector<IterationRecord>& history,
                           const std::filesystem::path& path);

}  // namespace stlpi2

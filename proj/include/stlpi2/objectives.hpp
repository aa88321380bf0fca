#pragma once

#include "stlpi2/stl.hpp"

#include <optional>

namespace stlpi2 {

/// Trajectory cost C(tau): either the first grid time at which a
/// non-temporal subtask robustness clears min(rho_min, best attained), or
/// the integrated input energy sum_t |u_t|^2 dt.
struct CostSpec {
  enum class Kind { TimeToReach, InputEnergy };
  Kind kind = Kind::InputEnergy;
  std::optional<Formula> reach_psi;
  double reach_rho_min = 0.0;
};

double trajectory_cost(const CostSpec& spec, const Trajectory& traj);

/// Piecewise-cubic constraint penalty: 0 for rho >= rho_min, otherwise
/// lambda * (rho_min - rho)^3. Continuous with continuous slope at the
/// boundary.
double penalty(double lambda, double rho, double rho_min);

/// J = C(tau) + P^lambda(rho).
double objective(double cost, double rho, double lambda, double rho_min);

/// Elitist cost normalization: with J_eps the eliteness-percentile
/// (linearly interpolated) order statistic, maps each cost to
///   -h * (J_i - min J) / (J_eps - min J),
/// so the best sample lands at 0 and anything at or beyond the percentile
/// at -h or below. The temperature eta is applied by the weighting step,
/// not here. Degenerate spread (J_eps == min) maps everything to 0.
/// Infinite costs map to -inf.
std::vector<double> normalize_costs(const std::vector<double>& costs,
                                    double eliteness_percentile, double h, double eta);

/// Penalty growth across iterations, linear or logarithmic from lambda0
/// to lambdaK.
struct PenaltySchedule {
  enum class Spacing { Linear, Logarithmic };
  double lambda0 = 1.0;
  double lambdaK = 1.0;
  Spacing spacing = Spacing::Logarithmic;
  double rho_min = 0.0;

  /// Value used by iteration k (1-based) of a K-iteration run.
  double value(int k, int total_iterations) const;
};

void validate(const PenaltySchedule& schedule);

}  // namespace stlpi2

#include "stlpi2/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stlpi2 {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double trajectory_cost(const CostSpec& spec, const Trajectory& traj) {
  validate(traj);
  if (spec.kind == CostSpec::Kind::InputEnergy) {
    double total = 0.0;
    for (const Vector& u : traj.inputs) total += u.squaredNorm() * traj.dt;
    return total;
  }
  if (!spec.reach_psi) throw std::invalid_argument("cost: time-to-reach needs a formula");
  if (spec.reach_psi->is_temporal())
    throw std::invalid_argument("cost: time-to-reach formula must be non-temporal");
  const RobustnessSignal sig = robustness_signal(*spec.reach_psi, traj);
  // Falling back to the best attained robustness keeps the cost defined
  // while the subtask is still unsatisfied.
  const double threshold = std::min(spec.reach_rho_min, sig.values.maxCoeff());
  for (int i = 0; i <= traj.steps(); ++i)
    if (sig.values[i] >= threshold) return static_cast<double>(i) * traj.dt;
  return traj.steps() * traj.dt;
}

double penalty(double lambda, double rho, double rho_min) {
  if (lambda < 0.0) throw std::invalid_argument("penalty: lambda must be nonnegative");
  if (rho >= rho_min) return 0.0;
  const double gap = rho_min - rho;
  return lambda * gap * gap * gap;
}

double objective(double cost, double rho, double lambda, double rho_min) {
  return cost + penalty(lambda, rho, rho_min);
}

std::vector<double> normalize_costs(const std::vector<double>& costs,
                                    double eliteness_percentile, double h, double eta) {
  if (costs.size() < 2) throw std::invalid_argument("normalize: need at least two costs");
  if (!(eliteness_percentile > 0.0) || eliteness_percentile > 100.0)
    throw std::invalid_argument("normalize: percentile must be in (0, 100]");

  std::vector<double> sorted = costs;
  std::sort(sorted.begin(), sorted.end());
  const double lowest = sorted.front();

  // Linearly interpolated order statistic at the requested percentile.
  const double pos = eliteness_percentile / 100.0 * static_cast<double>(sorted.size() - 1);
  const size_t i0 = static_cast<size_t>(pos);
  const double frac = pos - static_cast<double>(i0);
  double elite = sorted[i0];
  if (frac > 0.0 && i0 + 1 < sorted.size())
    elite += frac * (sorted[i0 + 1] - sorted[i0]);

  const double spread = elite - lowest;
  std::vector<double> out(costs.size(), 0.0);
  // The temperature stays with the weighting step: scaling here as well
  // would cancel against the softmax's 1/eta and pin the effective range
  // at h no matter the temperature.
  (void)eta;
  for (size_t i = 0; i < costs.size(); ++i) {
    if (std::isinf(costs[i])) {
      out[i] = -kInf;
    } else if (spread > 0.0 && std::isfinite(spread)) {
      out[i] = -h * (costs[i] - lowest) / spread;
    }
  }
  return out;
}

double PenaltySchedule::value(int k, int total_iterations) const {
  double frac = 1.0;
  if (total_iterations > 1)
    frac = static_cast<double>(std::clamp(k, 1, total_iterations) - 1) /
           static_cast<double>(total_iterations - 1);
  else if (k <= 1)
    frac = 0.0;
  if (spacing == Spacing::Linear) return lambda0 + (lambdaK - lambda0) * frac;
  return lambda0 * std::pow(lambdaK / lambda0, frac);
}

void validate(const PenaltySchedule& schedule) {
  if (!(schedule.lambda0 > 0.0) || !(schedule.lambdaK > 0.0))
    throw std::invalid_argument("penalty schedule: lambdas must be positive");
  if (schedule.lambdaK < schedule.lambda0)
    throw std::invalid_argument("penalty schedule: lambdaK must not be below lambda0");
  if (schedule.rho_min < 0.0)
    throw std::invalid_argument("penalty schedule: rho_min must be nonnegative");
}

}  // namespace stlpi2

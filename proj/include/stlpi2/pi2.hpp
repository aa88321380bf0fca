#pragma once

#include "stlpi2/objectives.hpp"
#include "stlpi2/sim.hpp"

#include <cstdint>

namespace stlpi2 {

struct Pi2Config {
  int iterations = 0;               // K
  int samples = 0;                  // N, at least 2
  double eta = 1.0;                 // softmax temperature
  double h = 10.0;                  // normalization range
  double eliteness_percentile = 25.0;
  Matrix c0;                        // initial per-step covariance (m x m)
  Matrix cmin;                      // covariance floor (m x m)
  bool nesterov = true;
  bool sample_from_initial_cov = false;
  std::uint64_t master_seed = 0;
};

void validate(const Pi2Config& config);

/// What the optimizer needs to know about an experiment: the plant, the
/// base feedback, the horizon, and how a rollout is scored.
struct Pi2Problem {
  SystemModel model;
  PolicyBase base;
  Vector x0;
  double T = 0.0;
  double dt = 0.0;
  /// Returns (C, rho) for one rollout: the target cost and the exact
  /// robustness of the full task at the start of the trajectory.
  std::function<std::pair<double, double>(const Trajectory&)> evaluate;
  PenaltySchedule penalty;

  int steps() const;
};

struct IterationRecord {
  int k = 0;
  double lambda = 0.0;
  double min_objective = 0.0;
  double mean_objective = 0.0;
  double cost = 0.0;        // C of the updated-mean rollout
  double robustness = 0.0;  // rho of the updated-mean rollout
};

struct Pi2State {
  std::vector<Vector> theta;       // per-step parameter means
  std::vector<Vector> theta_hat;   // lookahead means the samples are drawn from
  std::vector<Vector> theta_prev;  // previous means, for the momentum step
  std::vector<Matrix> cov;         // adapted per-step covariances
  double alpha = 1.0;              // momentum scalar
  int iteration = 0;
  std::vector<IterationRecord> history;
};

Pi2State make_initial_state(const Pi2Config& config, int steps, int input_dim);

/// Softmax selection weights from normalized costs (best sample at 0,
/// worse ones negative): w_i propto exp(Jbar_i / eta), so the lowest
/// original cost always carries the largest weight. Nonnegative, sum 1.
std::vector<double> pi2_weights(const std::vector<double>& normalized_costs, double eta);

/// Seed stream for sample (iteration k, sample i, purpose): parallel
/// rollouts stay reproducible regardless of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k, std::uint64_t i,
                          std::uint64_t purpose);

/// One optimizer iteration: draw N parameter perturbations around the
/// lookahead means, roll each out, weight by exponentiated normalized
/// objective, re-estimate means and covariances, apply the momentum
/// update, advance the penalty, and append a history record from a
/// rollout of the updated mean policy.
void iterate(Pi2State& state, const Pi2Config& config, const Pi2Problem& problem,
             int threads = 0);

struct RunResult {
  Policy policy;
  std::vector<IterationRecord> history;
  Trajectory final_trajectory;  // updated-mean rollout after the last iteration
  double final_cost = 0.0;
  double final_robustness = 0.0;
};

/// K iterations from an all-zero feedforward. K = 0 returns the pure
/// base-law rollout. Identical configs and problems give bit-identical
/// results independent of the thread count.
RunResult run(const Pi2Config& config, const Pi2Problem& problem, int threads = 0);

}  // namespace stlpi2

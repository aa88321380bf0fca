#include "stlpi2/pi2.hpp"

#include "stlpi2/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace stlpi2 {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_psd_shape(const Matrix& c, int dim, const char* name) {
  if (c.rows() != dim || c.cols() != dim)
    throw std::invalid_argument(std::string("pi2: ") + name + " must be m x m");
  if (!c.isApprox(c.transpose(), 1e-12))
    throw std::invalid_argument(std::string("pi2: ") + name + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument(std::string("pi2: ") + name + " must be positive semidefinite");
}

std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

void validate(const Pi2Config& config) {
  if (config.iterations < 0) throw std::invalid_argument("pi2: iterations must be nonnegative");
  if (config.samples < 2) throw std::invalid_argument("pi2: need at least two samples");
  if (!(config.eta > 0.0)) throw std::invalid_argument("pi2: eta must be positive");
  const int dim = static_cast<int>(config.c0.rows());
  check_psd_shape(config.c0, dim, "c0");
  check_psd_shape(config.cmin, dim, "cmin");
}

int Pi2Problem::steps() const {
  const double steps_f = T / dt;
  const long s = std::lround(steps_f);
  if (s < 0 || std::abs(steps_f - static_cast<double>(s)) > 1e-9)
    throw std::invalid_argument("pi2: T must be an integer multiple of dt");
  return static_cast<int>(s);
}

Pi2State make_initial_state(const Pi2Config& config, int steps, int input_dim) {
  Pi2State state;
  state.theta.assign(static_cast<size_t>(steps), Vector::Zero(input_dim));
  state.theta_hat = state.theta;
  state.theta_prev = state.theta;
  state.cov.assign(static_cast<size_t>(steps), config.c0);
  return state;
}

std::vector<double> pi2_weights(const std::vector<double>& normalized_costs, double eta) {
  if (normalized_costs.empty()) throw std::invalid_argument("weights: empty cost list");
  if (!(eta > 0.0)) throw std::invalid_argument("weights: eta must be positive");
  double top = -kInf;
  for (double j : normalized_costs) top = std::max(top, j);
  std::vector<double> w(normalized_costs.size(), 0.0);
  double total = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] = std::isinf(top) ? 1.0 : std::exp((normalized_costs[i] - top) / eta);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k, std::uint64_t i,
                          std::uint64_t purpose) {
  std::uint64_t s = mix(master);
  s = mix(s ^ (k * 0xD6E8FEB86659FD93ull));
  s = mix(s ^ (i * 0xA3B195354A39B70Dull));
  return mix(s ^ purpose);
}

void iterate(Pi2State& state, const Pi2Config& config, const Pi2Problem& problem,
             int threads) {
  validate(config);
  validate(problem.model);
  const int steps = problem.steps();
  const int m = problem.model.m;
  const int n_samples = config.samples;
  if (static_cast<int>(state.theta.size()) != steps)
    throw std::invalid_argument("pi2: state does not match the problem horizon");

  const int k = state.iteration + 1;
  const double lambda = problem.penalty.value(k, config.iterations);

  // Per-step factors of the sampling covariance.
  std::vector<Matrix> cov_sqrt(static_cast<size_t>(steps));
  if (config.sample_from_initial_cov) {
    const Matrix fixed = psd_sqrt(config.c0);
    cov_sqrt.assign(static_cast<size_t>(steps), fixed);
  } else {
    for (int t = 0; t < steps; ++t) cov_sqrt[static_cast<size_t>(t)] = psd_sqrt(state.cov[static_cast<size_t>(t)]);
  }

  std::vector<std::vector<Vector>> samples(static_cast<size_t>(n_samples));
  std::vector<double> costs(static_cast<size_t>(n_samples), 0.0);
  std::vector<double> rhos(static_cast<size_t>(n_samples), 0.0);
  std::vector<double> objectives(static_cast<size_t>(n_samples), kInf);
  std::vector<char> ok(static_cast<size_t>(n_samples), 0);

  parallel_for(n_samples, threads, [&](int i) {
    const size_t si = static_cast<size_t>(i);
    std::mt19937_64 rng(derive_seed(config.master_seed, static_cast<std::uint64_t>(k),
                                    static_cast<std::uint64_t>(i), 0));
    std::normal_distribution<double> unit;
    std::vector<Vector>& theta_i = samples[si];
    theta_i.resize(static_cast<size_t>(steps));
    Vector z(m);
    for (int t = 0; t < steps; ++t) {
      for (int d = 0; d < m; ++d) z[d] = unit(rng);
      theta_i[static_cast<size_t>(t)] = state.theta_hat[static_cast<size_t>(t)] +
                                        cov_sqrt[static_cast<size_t>(t)] * z;
    }
    try {
      const Policy policy{problem.base, theta_i};
      const Trajectory traj =
          simulate(problem.model, policy, problem.x0, problem.T, problem.dt,
                   derive_seed(config.master_seed, static_cast<std::uint64_t>(k),
                               static_cast<std::uint64_t>(i), 1));
      const auto [cost, rho] = problem.evaluate(traj);
      costs[si] = cost;
      rhos[si] = rho;
      objectives[si] = objective(cost, rho, lambda, problem.penalty.rho_min);
      ok[si] = 1;
    } catch (const std::runtime_error&) {
      objectives[si] = kInf;  // diverged rollout: zero weight below
    }
  });

  if (std::none_of(ok.begin(), ok.end(), [](char c) { return c != 0; }))
    throw std::runtime_error("iteration failed: all rollouts diverged");

  const std::vector<double> normalized =
      normalize_costs(objectives, config.eliteness_percentile, config.h, config.eta);
  const std::vector<double> w = pi2_weights(normalized, config.eta);

  state.theta_prev = state.theta;
  for (int t = 0; t < steps; ++t) {
    const size_t st = static_cast<size_t>(t);
    Vector mean = Vector::Zero(m);
    for (int i = 0; i < n_samples; ++i)
      mean += w[static_cast<size_t>(i)] * samples[static_cast<size_t>(i)][st];
    // Spread measured around the mean the samples were drawn from.
    Matrix cov = config.cmin;
    for (int i = 0; i < n_samples; ++i) {
      const Vector dev = samples[static_cast<size_t>(i)][st] - state.theta_hat[st];
      cov.noalias() += w[static_cast<size_t>(i)] * (dev * dev.transpose());
    }
    state.theta[st] = std::move(mean);
    state.cov[st] = std::move(cov);
  }

  if (config.nesterov) {
    const double alpha_prev = state.alpha;
    state.alpha = 0.5 * (1.0 + std::sqrt(4.0 * alpha_prev * alpha_prev + 1.0));
    const double momentum = (alpha_prev - 1.0) / state.alpha;
    for (int t = 0; t < steps; ++t) {
      const size_t st = static_cast<size_t>(t);
      state.theta_hat[st] = state.theta[st] + momentum * (state.theta[st] - state.theta_prev[st]);
    }
  } else {
    state.theta_hat = state.theta;
  }

  state.iteration = k;

  double min_obj = kInf;
  double sum_obj = 0.0;
  for (double j : objectives) {
    min_obj = std::min(min_obj, j);
    sum_obj += j;
  }

  const Policy mean_policy{problem.base, state.theta};
  const Trajectory mean_traj =
      simulate(problem.model, mean_policy, problem.x0, problem.T, problem.dt,
               derive_seed(config.master_seed, static_cast<std::uint64_t>(k),
                           static_cast<std::uint64_t>(n_samples), 1));
  const auto [mean_cost, mean_rho] = problem.evaluate(mean_traj);

  state.history.push_back({k, lambda, min_obj, sum_obj / static_cast<double>(n_samples),
                           mean_cost, mean_rho});
}

RunResult run(const Pi2Config& config, const Pi2Problem& problem, int threads) {
  validate(config);
  const int steps = problem.steps();
  Pi2State state = make_initial_state(config, steps, problem.model.m);
  for (int k = 1; k <= config.iterations; ++k) iterate(state, config, problem, threads);

  RunResult result;
  result.policy = Policy{problem.base, state.theta};
  result.history = std::move(state.history);
  result.final_trajectory =
      simulate(problem.model, result.policy, problem.x0, problem.T, problem.dt,
               derive_seed(config.master_seed, static_cast<std::uint64_t>(state.iteration),
                           static_cast<std::uint64_t>(config.samples), 1));
  const auto [cost, rho] = problem.evaluate(result.final_trajectory);
  result.final_cost = cost;
  result.final_robustness = rho;
  return result;
}

}  // namespace stlpi2

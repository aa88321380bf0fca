#include "stlpi2/sim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace stlpi2 {

void validate(const SystemModel& model) {
  if (model.n <= 0 || model.m <= 0)
    throw std::invalid_argument("model: dimensions must be positive");
  if (!model.f || !model.g) throw std::invalid_argument("model: missing f or g");
  if (model.sigma_w.rows() != model.n || model.sigma_w.cols() != model.n)
    throw std::invalid_argument("model: sigma_w must be n x n");
  if (!model.sigma_w.isApprox(model.sigma_w.transpose(), 1e-12))
    throw std::invalid_argument("model: sigma_w must be symmetric");
  std::vector<char> seen(static_cast<size_t>(model.m), 0);
  for (const InputConstraint& c : model.input_constraints) {
    if (!(c.bound > 0.0)) throw std::invalid_argument("model: constraint bounds must be positive");
    for (int idx : c.indices) {
      if (idx < 0 || idx >= model.m)
        throw std::invalid_argument("model: constraint index out of range");
      if (seen[static_cast<size_t>(idx)])
        throw std::invalid_argument("model: constraint groups must not overlap");
      seen[static_cast<size_t>(idx)] = 1;
    }
  }
}

Vector Policy::base_input(const Vector& x, double t) const {
  if (std::holds_alternative<ZeroBase>(base))
    return Vector::Zero(theta.empty() ? x.size() : theta.front().size());
  if (const auto* lin = std::get_if<LinearFeedback>(&base)) return -(lin->gain * x);
  return base_control(std::get<BaseLaw>(base), x, t);
}

Vector saturate(Vector u, const std::vector<InputConstraint>& constraints) {
  for (const InputConstraint& c : constraints) {
    double sq = 0.0;
    for (int idx : c.indices) sq += u[idx] * u[idx];
    const double norm = std::sqrt(sq);
    // The relative slack keeps a freshly projected group fixed instead of
    // rescaling it again over the last rounding ulp.
    if (norm > c.bound * (1.0 + 1e-12)) {
      const double scale = c.bound / norm;
      for (int idx : c.indices) u[idx] *= scale;
    }
  }
  return u;
}

Matrix psd_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Trajectory simulate(const SystemModel& model, const Policy& policy, const Vector& x0,
                    double T, double dt, std::optional<std::uint64_t> seed) {
  validate(model);
  if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
  const double steps_f = T / dt;
  const long steps = std::lround(steps_f);
  if (steps < 0 || std::abs(steps_f - static_cast<double>(steps)) > 1e-9)
    throw std::invalid_argument("simulate: T must be an integer multiple of dt");
  if (static_cast<long>(policy.theta.size()) != steps)
    throw std::invalid_argument("simulate: policy length must equal the step count");
  if (x0.size() != model.n) throw std::invalid_argument("simulate: x0 has the wrong dimension");

  const bool noisy = !model.sigma_w.isZero(0.0);
  Matrix noise_sqrt;
  if (noisy) noise_sqrt = psd_sqrt(model.sigma_w);

  std::mt19937_64 rng(seed ? *seed : std::random_device{}());
  std::normal_distribution<double> unit;

  Trajectory traj;
  traj.dt = dt;
  traj.t0 = 0.0;
  traj.states.reserve(static_cast<size_t>(steps) + 1);
  traj.inputs.reserve(static_cast<size_t>(steps));
  traj.states.push_back(x0);

  Vector x = x0;
  Vector feedforward = Vector::Zero(model.m);
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    feedforward += policy.theta[static_cast<size_t>(k)];
    const Vector u = saturate(policy.base_input(x, t) + feedforward, model.input_constraints);
    Vector rate = model.f(x) + model.g(x) * u;
    if (noisy) {
      // The disturbance is drawn once per step and held across it, so its
      // covariance is directly comparable to the input bounds.
      Vector z(model.n);
      for (int i = 0; i < model.n; ++i) z[i] = unit(rng);
      rate += noise_sqrt * z;
    }
    Vector next = x + rate * dt;
    if (!next.allFinite())
      throw std::runtime_error("diverged at step " + std::to_string(k + 1));
    traj.inputs.push_back(u);
    traj.states.push_back(next);
    x = std::move(next);
  }
  return traj;
}

}  // namespace stlpi2

#pragma once

#include "stlpi2/ppc.hpp"
#include "stlpi2/stl.hpp"

#include <cstdint>
#include <optional>
#include <variant>

namespace stlpi2 {

/// Norm bound on a group of input coordinates.
struct InputConstraint {
  std::vector<int> indices;
  double bound = 0.0;
};

/// Control-affine plant dx = f(x) + g(x) u + w with Gaussian white noise
/// of covariance sigma_w. Controllers never see f; only the simulator
/// evaluates it.
struct SystemModel {
  int n = 0;
  int m = 0;
  std::function<Vector(const Vector&)> f;
  std::function<Matrix(const Vector&)> g;
  Matrix sigma_w;
  std::vector<InputConstraint> input_constraints;
};

void validate(const SystemModel& model);

struct ZeroBase {};

/// u = -gain * x.
struct LinearFeedback {
  Matrix gain;
};

using PolicyBase = std::variant<ZeroBase, LinearFeedback, BaseLaw>;

/// Time-varying policy: a base feedback plus a learned feedforward whose
/// value at step t is the running sum k_t = sum_{t'<=t} theta_{t'}.
/// Evaluation receives only (x, t); the plant drift is out of reach.
struct Policy {
  PolicyBase base;
  std::vector<Vector> theta;

  Vector base_input(const Vector& x, double t) const;
};

/// Projects each constrained index group onto its norm ball; unlisted
/// coordinates pass through. Idempotent.
Vector saturate(Vector u, const std::vector<InputConstraint>& constraints);

/// Symmetric square root of a positive-semidefinite matrix through its
/// eigendecomposition; negative rounding of eigenvalues is clamped.
Matrix psd_sqrt(const Matrix& cov);

/// Explicit Euler rollout over L = T/dt steps:
///   x_{k+1} = x_k + (f(x_k) + g(x_k) sat(u_k) + w_k) dt
/// with u_k = base(x_k, t_k) + k_k and the disturbance w_k ~ N(0, sigma_w)
/// drawn once per step and held across it. The recorded inputs are the
/// saturated ones. A fixed seed reproduces the trajectory bit for bit;
/// nullopt draws fresh entropy. Throws std::runtime_error
/// ("diverged at step ...") when a state stops being finite.
Trajectory simulate(const SystemModel& model, const Policy& policy, const Vector& x0,
                    double T, double dt, std::optional<std::uint64_t> seed);

}  // namespace stlpi2

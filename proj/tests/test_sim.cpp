#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stlpi2/sim.hpp"

#include <cmath>
#include <random>

using namespace stlpi2;

namespace {

SystemModel integrator(int n, Matrix sigma = Matrix()) {
  SystemModel model;
  model.n = n;
  model.m = n;
  model.f = [n](const Vector&) { return Vector::Zero(n); };
  model.g = [n](const Vector&) { return Matrix::Identity(n, n); };
  model.sigma_w = sigma.size() ? sigma : Matrix::Zero(n, n);
  return model;
}

Policy zero_policy(int m, int steps) {
  return {ZeroBase{}, std::vector<Vector>(static_cast<size_t>(steps), Vector::Zero(m))};
}

}  // namespace

TEST_CASE("no dynamics, no noise: the state never moves") {
  const SystemModel model = integrator(2);
  const Trajectory tr = simulate(model, zero_policy(2, 20), Vector{{1.0, -2.0}}, 1.0, 0.05, 3);
  for (const Vector& x : tr.states) CHECK(x == Vector{{1.0, -2.0}});
  CHECK(tr.states.size() == 21);
  CHECK(tr.inputs.size() == 20);
}

TEST_CASE("constant unit input displaces exactly one unit") {
  const SystemModel model = integrator(2);
  Policy policy = zero_policy(2, 20);
  policy.theta[0] = Vector{{1.0, 0.0}};  // running sum keeps u = (1, 0)
  const Trajectory tr = simulate(model, policy, Vector::Zero(2), 1.0, 0.05, 3);
  CHECK(std::abs(tr.states.back()[0] - 1.0) < 1e-12);
  CHECK(std::abs(tr.states.back()[1]) < 1e-12);
}

TEST_CASE("feedforward accumulates the per-step differentials") {
  const SystemModel model = integrator(1);
  Policy policy = zero_policy(1, 3);
  policy.theta = {Vector{{1.0}}, Vector{{0.5}}, Vector{{-2.0}}};
  SystemModel unconstrained = model;
  const Trajectory tr = simulate(unconstrained, policy, Vector::Zero(1), 0.3, 0.1, 0);
  CHECK(tr.inputs[0][0] == 1.0);
  CHECK(tr.inputs[1][0] == 1.5);
  CHECK(tr.inputs[2][0] == -0.5);
}

TEST_CASE("saturation projects radially per group") {
  std::vector<InputConstraint> one = {{{0, 1}, 1.0}};
  CHECK(saturate(Vector{{0.3, 0.4}}, one) == Vector{{0.3, 0.4}});
  const Vector scaled = saturate(Vector{{3.0, 4.0}}, one);
  CHECK(scaled.isApprox(Vector{{0.6, 0.8}}, 1e-15));

  std::vector<InputConstraint> robots = {{{0, 1}, 1.0}, {{2, 3}, 1.0}, {{4, 5}, 1.0}};
  Vector u(6);
  u << 2.0, 0.0, 0.2, 0.1, -0.5, 0.5;
  const Vector out = saturate(u, robots);
  CHECK(out.head(2).isApprox(Vector{{1.0, 0.0}}, 1e-15));
  CHECK(out.segment(2, 2) == u.segment(2, 2));
  CHECK(out.tail(2) == u.tail(2));

  // Unlisted coordinates pass through.
  std::vector<InputConstraint> partial = {{{0}, 0.5}};
  const Vector mixed = saturate(Vector{{2.0, 7.0}}, partial);
  CHECK(mixed[0] == 0.5);
  CHECK(mixed[1] == 7.0);
}

TEST_CASE("saturation is idempotent") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coord(-4.0, 4.0);
  std::vector<InputConstraint> groups = {{{0, 1}, 1.0}, {{2}, 0.7}};
  for (int trial = 0; trial < 200; ++trial) {
    Vector u(3);
    u << coord(rng), coord(rng), coord(rng);
    const Vector once = saturate(u, groups);
    CHECK(saturate(once, groups) == once);
    CHECK(once.head(2).norm() <= 1.0 + 1e-15);
  }
}

TEST_CASE("identical seeds give identical trajectories") {
  SystemModel model = integrator(2, 0.3 * Matrix::Identity(2, 2));
  model.input_constraints = {{{0, 1}, 1.0}};
  const Policy policy = zero_policy(2, 50);
  const Trajectory a = simulate(model, policy, Vector::Zero(2), 2.5, 0.05, 1234);
  const Trajectory b = simulate(model, policy, Vector::Zero(2), 2.5, 0.05, 1234);
  const Trajectory c = simulate(model, policy, Vector::Zero(2), 2.5, 0.05, 1235);
  bool all_equal = true;
  bool any_differs = false;
  for (size_t i = 0; i < a.states.size(); ++i) {
    all_equal = all_equal && a.states[i] == b.states[i];
    any_differs = any_differs || a.states[i] != c.states[i];
  }
  CHECK(all_equal);
  CHECK(any_differs);
}

TEST_CASE("noise increments match the held-disturbance covariance") {
  // One disturbance draw per step, held across it: increments are dt * w,
  // so their covariance is dt^2 * sigma within sampling error.
  Matrix sigma(2, 2);
  sigma << 0.2, 0.05, 0.05, 0.1;
  const SystemModel model = integrator(2, sigma);
  const int steps = 100000;
  const double dt = 0.05;
  const Trajectory tr =
      simulate(model, zero_policy(2, steps), Vector::Zero(2), steps * dt, dt, 99);
  Matrix acc = Matrix::Zero(2, 2);
  for (int i = 0; i < steps; ++i) {
    const Vector inc = tr.states[static_cast<size_t>(i) + 1] - tr.states[static_cast<size_t>(i)];
    acc += inc * inc.transpose();
  }
  acc /= static_cast<double>(steps);
  const Matrix expected = dt * dt * sigma;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      CHECK(std::abs(acc(r, c) - expected(r, c)) <=
            0.05 * dt * dt * std::sqrt(sigma(r, r) * sigma(c, c)));
}

TEST_CASE("consensus drift matches the closed-form linear solution") {
  // Three planar agents coupled through the complete graph; with no input
  // the pairwise gaps shrink monotonically toward consensus.
  Matrix laplacian{{2.0, -1.0, -1.0}, {-1.0, 2.0, -1.0}, {-1.0, -1.0, 2.0}};
  Matrix a = Matrix::Zero(6, 6);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      a.block<2, 2>(2 * i, 2 * j) = -0.1 * laplacian(i, j) * Matrix::Identity(2, 2);
  SystemModel model;
  model.n = 6;
  model.m = 6;
  model.f = [a](const Vector& x) -> Vector { return a * x; };
  model.g = [](const Vector&) { return Matrix::Identity(6, 6); };
  model.sigma_w = Matrix::Zero(6, 6);

  Vector x0(6);
  x0 << 3.0, 0.8, 2.0, 0.8, 1.2, 0.7;
  const Trajectory tr = simulate(model, zero_policy(6, 1000), x0, 10.0, 0.01, 0);

  auto pair_gap = [](const Vector& x, int i, int j) {
    return (x.segment(2 * i, 2) - x.segment(2 * j, 2)).norm();
  };
  for (size_t s = 0; s + 1 < tr.states.size(); ++s)
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        CHECK(pair_gap(tr.states[s + 1], i, j) <= pair_gap(tr.states[s], i, j) + 1e-12);

  // exp(a * T) through the symmetric eigendecomposition.
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Matrix expm = es.eigenvectors() *
                      (10.0 * es.eigenvalues().array()).exp().matrix().asDiagonal() *
                      es.eigenvectors().transpose();
  const Vector exact = expm * x0;
  CHECK((tr.states.back() - exact).norm() < 1e-3);
}

TEST_CASE("controllers only ever see x and t") {
  // The drift raises a flag when evaluated; a policy evaluation must not.
  bool drift_touched = false;
  SystemModel model;
  model.n = 1;
  model.m = 1;
  model.f = [&drift_touched](const Vector&) {
    drift_touched = true;
    return Vector::Zero(1);
  };
  model.g = [](const Vector&) { return Matrix::Identity(1, 1); };
  model.sigma_w = Matrix::Zero(1, 1);

  Policy policy{LinearFeedback{Matrix::Identity(1, 1)}, {Vector::Zero(1)}};
  drift_touched = false;
  (void)policy.base_input(Vector{{2.0}}, 0.0);
  CHECK_FALSE(drift_touched);
  (void)simulate(model, policy, Vector{{2.0}}, 0.01, 0.01, 0);
  CHECK(drift_touched);
}

TEST_CASE("divergence and precondition errors") {
  SystemModel runaway;
  runaway.n = 1;
  runaway.m = 1;
  runaway.f = [](const Vector& x) -> Vector { return x * 1e155; };
  runaway.g = [](const Vector&) { return Matrix::Identity(1, 1); };
  runaway.sigma_w = Matrix::Zero(1, 1);
  CHECK_THROWS_WITH_AS(
      simulate(runaway, zero_policy(1, 3), Vector{{1e155}}, 0.3, 0.1, 0),
      "diverged at step 1", std::runtime_error);

  const SystemModel model = integrator(1);
  CHECK_THROWS_AS(simulate(model, zero_policy(1, 3), Vector{{0.0}}, 0.35, 0.1, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate(model, zero_policy(1, 4), Vector{{0.0}}, 0.3, 0.1, 0),
                  std::invalid_argument);
}

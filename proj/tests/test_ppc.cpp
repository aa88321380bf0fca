#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stlpi2/ppc.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace stlpi2;
using namespace stlpi2::testing;

namespace {

// Independent route to kappa: bisect the full end-value constraint with
// alpha and m reconstructed from the continuity equations at each step.
double bisect_kappa(double beta, double B, double xi_c) {
  auto end_value = [&](double kappa) {
    const double alpha = beta / (xi_c * kappa * std::exp(kappa * xi_c));
    const double m = beta - alpha * (std::exp(kappa * xi_c) - 1.0);
    return m + alpha * (std::exp(kappa) - 1.0) - B;
  };
  double lo = 1e-8;
  double hi = 1e3;
  REQUIRE(end_value(lo) < 0.0);
  REQUIRE(end_value(hi) > 0.0);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (end_value(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SubtaskController goal_subtask() {
  SubtaskController sub;
  sub.psi = Formula::pred(ball_predicate("goal", Vector{{1.0, 3.5}}, 0.2, true));
  sub.funnel = {0.2, -4.0, 0.05, 10.0};
  sub.transform = solve_transform(0.8, 2.0, 0.5);
  sub.weight = 0.5;
  return sub;
}

SubtaskController avoid_subtask() {
  SubtaskController sub;
  sub.psi = Formula::pred(ball_predicate("avoid", Vector{{2.5, 2.0}}, 1.2, false));
  sub.funnel = {1.0, 0.05, 0.05, 10.0};
  sub.transform = solve_transform(0.1, 2.0, 0.8);
  sub.weight = 0.5;
  return sub;
}

}  // namespace

TEST_CASE("transform solves the reference example") {
  const TransformFn s = solve_transform(0.2, 2.0, 0.6);
  CHECK(s(0.0) == 0.0);
  CHECK(s(0.6) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s(1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(s.m + s.alpha * std::expm1(s.kappa * 0.6) - 0.2) < 1e-10);
  CHECK(std::abs(s.alpha * s.kappa * std::exp(s.kappa * 0.6) - 0.2 / 0.6) < 1e-10);
  CHECK(std::abs(s.m + s.alpha * std::expm1(s.kappa) - 2.0) < 1e-10);
}

TEST_CASE("transform kappa agrees with an independent bisection") {
  const TransformFn s = solve_transform(0.8, 2.0, 0.5);
  const double kappa = bisect_kappa(0.8, 2.0, 0.5);
  CHECK(s.kappa == doctest::Approx(kappa).epsilon(1e-10));
  const double alpha = 0.8 / (0.5 * kappa * std::exp(kappa * 0.5));
  const double m = 0.8 - alpha * (std::exp(kappa * 0.5) - 1.0);
  CHECK(std::abs(m + alpha * (std::exp(kappa) - 1.0) - 2.0) < 1e-10);
}

TEST_CASE("transform starts at zero and never decreases") {
  const double triples[][3] = {{0.2, 2.0, 0.6}, {0.8, 2.0, 0.5}, {0.1, 2.0, 0.8},
                               {2.0, 6.0, 0.5}, {0.2, 6.0, 0.8}, {1.0, 6.0, 0.8}};
  for (const auto& t : triples) {
    const TransformFn s = solve_transform(t[0], t[1], t[2]);
    CHECK(s(0.0) == 0.0);
    double prev = 0.0;
    for (int i = 1; i <= 1000; ++i) {
      const double v = s(static_cast<double>(i) / 1000.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("transform rejects unreachable end values") {
  // The exponential piece can only bend upward past the linear extension,
  // so B below beta/xi_c leaves no solution.
  CHECK_THROWS_AS(solve_transform(0.9, 1.0, 0.5), std::runtime_error);
  CHECK_THROWS_AS(solve_transform(0.0, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(solve_transform(2.0, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(solve_transform(0.5, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("funnel boundary and ramp") {
  const Funnel funnel{0.2, -4.0, 0.05, 10.0};
  CHECK(funnel.gamma(0.0) == -4.0);
  CHECK(funnel.gamma(5.0) == doctest::Approx(-1.975).epsilon(1e-12));
  CHECK(funnel.gamma(10.0) == 0.05);   // exact at and after the ramp end
  CHECK(funnel.gamma(123.0) == 0.05);
  for (double t = 0.0; t < 12.0; t += 0.1) CHECK(funnel.gamma(t) <= funnel.gamma(t + 0.1));
  CHECK_THROWS_AS(validate(Funnel{0.2, 1.0, 0.5, 10.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(Funnel{0.2, -1.0, 0.3, 10.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(Funnel{0.2, -1.0, 0.1, 0.0}), std::invalid_argument);
}

TEST_CASE("xi hits the boundaries and the hand value") {
  const Funnel funnel{0.2, -4.0, 0.05, 10.0};
  CHECK(xi(funnel, 0.2, 3.0) == 0.0);
  CHECK(xi(funnel, funnel.gamma(3.0), 3.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(xi(funnel, 0.0, 0.0) == doctest::Approx(0.2 / 4.2).epsilon(1e-12));
}

TEST_CASE("elementary control at the funnel boundaries") {
  const SubtaskController sub = goal_subtask();
  const Matrix g = Matrix::Identity(2, 2);
  // At the goal center the robustness sits at rho_max, so the gain is 0.
  CHECK(elementary_control(sub, g, Vector{{1.0, 3.5}}, 0.0).norm() == 0.0);
  // Far beyond the funnel the gain clamps to B.
  const Vector x{{40.0, 3.5}};
  const Vector u = elementary_control(sub, g, x, 9.9);
  const Vector grad = smooth_robustness(sub.psi, x).gradient;
  CHECK(u.norm() == doctest::Approx(sub.transform.B * grad.norm()).epsilon(1e-12));
}

TEST_CASE("navigation goal control points at the goal") {
  const SubtaskController sub = goal_subtask();
  const Vector x0{{3.0, 0.3}};
  const Vector u = elementary_control(sub, Matrix::Identity(2, 2), x0, 0.0);
  const Vector to_goal = (Vector{{1.0, 3.5}} - x0).normalized();
  CHECK(u.normalized().isApprox(to_goal, 1e-12));
}

TEST_CASE("base control is the weighted sum of its terms") {
  BaseLaw law;
  law.subtasks = {goal_subtask(), avoid_subtask()};
  law.g = [](const Vector&) { return Matrix::Identity(2, 2); };
  validate(law);

  const Vector x{{2.1, 1.2}};  // between obstacle center and goal
  const Vector combined = base_control(law, x, 2.0);
  const Matrix g = Matrix::Identity(2, 2);
  const Vector expected = 0.5 * elementary_control(law.subtasks[0], g, x, 2.0) +
                          0.5 * elementary_control(law.subtasks[1], g, x, 2.0);
  CHECK(combined.isApprox(expected, 1e-14));

  BaseLaw single;
  single.subtasks = {goal_subtask()};
  single.subtasks[0].weight = 1.0;
  single.g = law.g;
  CHECK(base_control(single, x, 2.0)
            .isApprox(elementary_control(single.subtasks[0], g, x, 2.0), 1e-14));
}

TEST_CASE("weights must sum to one") {
  BaseLaw law;
  law.subtasks = {goal_subtask(), avoid_subtask()};
  law.subtasks[1].weight = 0.3;
  law.g = [](const Vector&) { return Matrix::Identity(2, 2); };
  CHECK_THROWS_AS(validate(law), std::invalid_argument);
}

TEST_CASE("control never decreases the subtask robustness") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coord(-6.0, 8.0);
  std::uniform_real_distribution<double> time(0.0, 12.0);
  const SubtaskController subs[] = {goal_subtask(), avoid_subtask()};
  const Matrix g = Matrix::Identity(2, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    const SubtaskController& sub = subs[trial % 2];
    Vector x(2);
    x << coord(rng), coord(rng);
    const double t = time(rng);
    const Vector u = elementary_control(sub, g, x, t);
    const SmoothEval rob = smooth_robustness(sub.psi, x);
    const double along = rob.gradient.dot(g * u);
    CHECK(along >= 0.0);
    const double gain = sub.transform(std::clamp(xi(sub.funnel, rob.value, t), 0.0, 1.0));
    if (gain > 0.0 && rob.gradient.norm() > 0.0) CHECK(along > 0.0);
    // Bounded output regardless of funnel violation.
    CHECK(u.norm() <= sub.transform.B * (g.transpose() * rob.gradient).norm() + 1e-12);
    CHECK(u.allFinite());
  }
}

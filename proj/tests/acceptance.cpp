// Acceptance suite: end-to-end checks that the built-in studies land at
// their expected operating points, plus the numerical gate suites. Prints one pass/fail line
// per criterion; the exit code is the number of failures.
//
//   acceptance [--criterion N] [--threads T]

#include "stlpi2/experiments.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>
#include <sstream>

using namespace stlpi2;
using namespace stlpi2::testing;

namespace {

int g_threads = 0;

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// 1. Noiseless navigation study: median over 20 seeds reaches
//    rho >= 0.04 and C <= 4.7.

Outcome criterion1() {
  const int seeds = 20;
  std::vector<double> costs(seeds), rhos(seeds);
  parallel_for(seeds, g_threads, [&](int s) {
    ScenarioConfig cfg = builtin_scenario("nav-simple");
    cfg.pi2.master_seed = static_cast<std::uint64_t>(s);
    const RunOutput out = run_scenario(compile(cfg), 1);
    costs[static_cast<size_t>(s)] = out.result.final_cost;
    rhos[static_cast<size_t>(s)] = out.result.final_robustness;
  });
  const double med_cost = median(costs);
  const double med_rho = median(rhos);
  std::ostringstream os;
  os << "median over " << seeds << " seeds: C = " << med_cost << " (<= 4.7), rho = "
     << med_rho << " (>= 0.04)";
  return {med_rho >= 0.04 && med_cost <= 4.7, os.str()};
}

// ---------------------------------------------------------------------------
// 2. PPC converges to satisfaction in strictly fewer iterations than LIN
//    for every (N, Cmin) combination, averaged over 20 seeds.

Outcome criterion2() {
  CompareOptions options;
  options.repeats = 20;
  options.eval_rollouts = 0;
  options.bases = {BaseLawSpec::Kind::Ppc, BaseLawSpec::Kind::Linear};
  options.sample_counts = {50, 100};
  options.cmin_values = {2e-4, 2e-5};
  options.base_seed = 100;
  options.threads = g_threads;
  const std::vector<VariantResult> results =
      compare_variants(builtin_scenario("nav-simple"), options);

  bool pass = true;
  std::ostringstream os;
  for (int n : {50, 100})
    for (double cmin : {2e-4, 2e-5}) {
      auto find = [&](const std::string& base) -> const VariantResult& {
        std::ostringstream label;
        label << base << "-N" << n << "-cmin" << cmin;
        for (const VariantResult& res : results)
          if (res.label == label.str()) return res;
        throw std::logic_error("missing variant " + label.str());
      };
      const double ppc = find("ppc").mean_iterations_to_satisfaction;
      const double lin = find("lin").mean_iterations_to_satisfaction;
      pass = pass && ppc < lin;
      os << "N=" << n << " cmin=" << cmin << ": ppc " << ppc << " vs lin " << lin << "; ";
    }
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 3. Noise robustness: PPC's final-policy robustness std <= 0.04 and
//    <= LIN's, PPC mean rho >= 0.03, over 30 evaluation rollouts each.

Outcome criterion3() {
  CompareOptions options;
  options.repeats = 1;
  options.eval_rollouts = 30;
  options.bases = {BaseLawSpec::Kind::Ppc, BaseLawSpec::Kind::Linear};
  options.base_seed = 1;
  options.threads = g_threads;
  const std::vector<VariantResult> results =
      compare_variants(builtin_scenario("nav-simple-noisy"), options);
  const VariantResult& ppc = results[0];
  const VariantResult& lin = results[1];
  std::ostringstream os;
  os << "ppc rho " << ppc.eval_robustness_mean << " +- " << ppc.eval_robustness_std
     << " (mean >= 0.03, std <= 0.04), lin rho " << lin.eval_robustness_mean << " +- "
     << lin.eval_robustness_std;
  const bool pass = ppc.eval_robustness_std <= 0.04 &&
                    ppc.eval_robustness_std <= lin.eval_robustness_std &&
                    ppc.eval_robustness_mean >= 0.03;
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 4. Consensus study: median over 5 seeds reaches rho >= 0.015
//    with C in [6, 10]; the base-law-only rollout fails the task with an
//    energy near its expected initial value.

Outcome criterion4() {
  ScenarioConfig base_only = builtin_scenario("consensus-complex");
  base_only.pi2.iterations = 0;
  const RunOutput initial = run_scenario(compile(base_only), g_threads);
  const bool initial_ok = initial.result.final_robustness < 0.0 &&
                          initial.result.final_cost >= 4.87 * 0.7 &&
                          initial.result.final_cost <= 4.87 * 1.3;

  const int seeds = 5;
  std::vector<double> costs(seeds), rhos(seeds);
  parallel_for(seeds, g_threads, [&](int s) {
    ScenarioConfig cfg = builtin_scenario("consensus-complex");
    cfg.pi2.master_seed = static_cast<std::uint64_t>(s);
    const RunOutput out = run_scenario(compile(cfg), 1);
    costs[static_cast<size_t>(s)] = out.result.final_cost;
    rhos[static_cast<size_t>(s)] = out.result.final_robustness;
  });
  const double med_cost = median(costs);
  const double med_rho = median(rhos);
  std::ostringstream os;
  os << "initial rollout: C = " << initial.result.final_cost << " (in [3.41, 6.33]), rho = "
     << initial.result.final_robustness << " (< 0); median of " << seeds
     << " seeds: C = " << med_cost << " (in [6, 10]), rho = " << med_rho << " (>= 0.015)";
  const bool pass =
      initial_ok && med_rho >= 0.015 && med_cost >= 6.0 && med_cost <= 10.0;
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 5. Robustness oracle suite: 1000 randomized formula/trajectory pairs
//    match the brute-force evaluator exactly.

Outcome criterion5() {
  std::mt19937_64 rng(2024);
  FormulaGen gen{rng, 3};
  int failures = 0;
  int evaluated = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Trajectory tr = random_trajectory(rng, 3, 50);
    const Formula f = gen.gen(3);
    bool oracle_defined = true;
    double expected = 0.0;
    try {
      expected = oracle_robustness(f, tr, 0);
    } catch (const std::runtime_error&) {
      oracle_defined = false;
    }
    try {
      const double got = robustness(f, tr, tr.t0);
      if (!oracle_defined || got != expected) ++failures;
      ++evaluated;
    } catch (const std::runtime_error&) {
      if (oracle_defined) ++failures;
    }
  }
  std::ostringstream os;
  os << "1000 randomized pairs (" << evaluated << " defined), " << failures
     << " mismatches";
  return {failures == 0, os.str()};
}

// ---------------------------------------------------------------------------
// 6. Gradient suite: smooth-robustness gradients of every scenario
//    predicate match central differences to 1e-4 relative error.

Outcome criterion6() {
  std::mt19937_64 rng(77);
  int failures = 0;
  int checked = 0;
  for (const std::string& name : builtin_scenario_names()) {
    const Scenario sc = compile(builtin_scenario(name));
    const int n = sc.config.dynamics.n;
    std::uniform_real_distribution<double> coord(-1.0, 5.0);
    for (const auto& [label, pred] : sc.predicates) {
      const Formula psi = Formula::pred(pred);
      int done = 0;
      while (done < 100) {
        Vector x(n);
        for (int d = 0; d < n; ++d) x[d] = coord(rng);
        const SmoothEval eval = smooth_robustness(psi, x);
        if (eval.gradient.norm() < 1e-3) continue;  // singular point of the norm
        const Vector fd = finite_difference_gradient(
            [&](const Vector& y) { return smooth_robustness(psi, y).value; }, x);
        if ((eval.gradient - fd).norm() / fd.norm() >= 1e-4) ++failures;
        ++done;
        ++checked;
      }
    }
  }
  std::ostringstream os;
  os << checked << " gradient checks across all scenario predicates, " << failures
     << " failures";
  return {failures == 0, os.str()};
}

// ---------------------------------------------------------------------------
// 7. Transform suite: all built-in parameter triples meet every joint
//    constraint to 1e-10 and are monotone on a 1000-point grid.

Outcome criterion7() {
  const double triples[][3] = {{0.2, 2.0, 0.6},   // reference example
                               {0.8, 2.0, 0.5}, {0.1, 2.0, 0.8},   // navigation subtasks
                               {2.0, 6.0, 0.5}, {0.2, 6.0, 0.8}, {1.0, 6.0, 0.8}};
  bool pass = true;
  double worst = 0.0;
  for (const auto& t : triples) {
    const TransformFn s = solve_transform(t[0], t[1], t[2]);
    const double residuals[] = {
        s(0.0),
        t[0] / t[2] * t[2] - t[0],                                // linear piece at xi_c
        s.m + s.alpha * std::expm1(s.kappa * t[2]) - t[0],        // exponential piece there
        s.alpha * s.kappa * std::exp(s.kappa * t[2]) - t[0] / t[2],  // slope jump
        s.m + s.alpha * std::expm1(s.kappa) - t[1],               // end value
    };
    for (double r : residuals) {
      worst = std::max(worst, std::abs(r));
      pass = pass && std::abs(r) < 1e-10;
    }
    double prev = s(0.0);
    for (int i = 1; i <= 1000; ++i) {
      const double v = s(static_cast<double>(i) / 1000.0);
      pass = pass && v >= prev;
      prev = v;
    }
  }
  std::ostringstream os;
  os << "6 parameter triples, worst constraint residual " << worst;
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 8. Optimizer invariants: weight normalization, update convexity,
//    covariance floor, the momentum recurrence, and bit-exact manifest
//    replay.

Outcome criterion8() {
  std::ostringstream os;
  bool pass = true;

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> cost(-20.0, 0.0);
  double worst_sum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> costs(50);
    for (double& c : costs) c = cost(rng);
    const std::vector<double> w = pi2_weights(costs, 1.0);
    double total = 0.0;
    for (double v : w) total += v;
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }
  pass = pass && worst_sum <= 1e-12;
  os << "weight sum error " << worst_sum << "; ";

  // Convexity and covariance floor over a short navigation run.
  ScenarioConfig cfg = builtin_scenario("nav-simple");
  cfg.pi2.iterations = 3;
  cfg.pi2.samples = 40;
  cfg.pi2.master_seed = 11;
  const Scenario sc = compile(cfg);
  const Pi2Problem problem = make_problem(sc);
  Pi2State state = make_initial_state(cfg.pi2, problem.steps(), sc.model.m);
  bool hull_ok = true;
  bool floor_ok = true;
  for (int k = 0; k < cfg.pi2.iterations; ++k) {
    const std::vector<Vector> hat_before = state.theta_hat;
    const std::vector<Matrix> cov_before = state.cov;
    iterate(state, cfg.pi2, problem, g_threads);
    // Re-derive the samples from the public seed contract.
    for (int t = 0; t < problem.steps(); t += 37) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(cov_before[static_cast<size_t>(t)]);
      const Matrix chol = es.eigenvectors() *
                          es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                          es.eigenvectors().transpose();
      Vector lo = Vector::Constant(sc.model.m, std::numeric_limits<double>::infinity());
      Vector hi = -lo;
      for (int i = 0; i < cfg.pi2.samples; ++i) {
        std::mt19937_64 sample_rng(derive_seed(cfg.pi2.master_seed,
                                               static_cast<std::uint64_t>(k + 1),
                                               static_cast<std::uint64_t>(i), 0));
        std::normal_distribution<double> unit;
        Vector z(sc.model.m);
        for (int step = 0; step <= t; ++step)
          for (int d = 0; d < sc.model.m; ++d) z[d] = unit(sample_rng);
        const Vector sample = hat_before[static_cast<size_t>(t)] + chol * z;
        lo = lo.cwiseMin(sample);
        hi = hi.cwiseMax(sample);
      }
      for (int d = 0; d < sc.model.m; ++d)
        hull_ok = hull_ok && state.theta[static_cast<size_t>(t)][d] >= lo[d] - 1e-9 &&
                  state.theta[static_cast<size_t>(t)][d] <= hi[d] + 1e-9;
    }
    for (const Matrix& cov : state.cov) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(cov - cfg.pi2.cmin, Eigen::EigenvaluesOnly);
      floor_ok = floor_ok && es.eigenvalues().minCoeff() >= -1e-12;
    }
  }
  pass = pass && hull_ok && floor_ok;
  os << (hull_ok ? "updates convex" : "updates LEFT the hull") << "; "
     << (floor_ok ? "covariance floored" : "covariance UNDER floor") << "; ";

  const double alpha1 = (1.0 + std::sqrt(5.0)) / 2.0;
  const double alpha2 = (1.0 + std::sqrt(4.0 * alpha1 * alpha1 + 1.0)) / 2.0;
  Pi2State momentum = make_initial_state(cfg.pi2, problem.steps(), sc.model.m);
  const bool alpha0_ok = momentum.alpha == 1.0;
  iterate(momentum, cfg.pi2, problem, g_threads);
  const bool alpha1_ok = std::abs(momentum.alpha - alpha1) <= 1e-12;
  iterate(momentum, cfg.pi2, problem, g_threads);
  const bool alpha2_ok = std::abs(momentum.alpha - alpha2) <= 1e-12;
  pass = pass && alpha0_ok && alpha1_ok && alpha2_ok;
  os << "momentum recurrence (1, " << alpha1 << ", " << alpha2 << ") "
     << (alpha0_ok && alpha1_ok && alpha2_ok ? "matched" : "MISMATCHED") << "; ";

  // Manifest replay.
  const RunOutput original = run_scenario(sc, g_threads);
  const auto dir = std::filesystem::temp_directory_path() / "stlpi2-acceptance";
  std::filesystem::create_directories(dir);
  write_run_outputs(sc, original, dir, false);
  const ScenarioConfig replay_cfg = resolve_scenario((dir / "manifest.json").string());
  const RunOutput replay = run_scenario(compile(replay_cfg), 1);
  const bool replay_ok = replay.result.final_cost == original.result.final_cost &&
                         replay.result.final_robustness == original.result.final_robustness;
  pass = pass && replay_ok;
  os << "manifest replay " << (replay_ok ? "bit-exact" : "DIVERGED");
  return {pass, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc) only = std::atoi(argv[++i]);
    if (!std::strcmp(argv[i], "--threads") && i + 1 < argc) g_threads = std::atoi(argv[++i]);
  }

  Outcome (*criteria[])() = {criterion1, criterion2, criterion3, criterion4,
                             criterion5, criterion6, criterion7, criterion8};
  const char* names[] = {
      "noiseless navigation study",
      "PPC-vs-LIN convergence ordering",
      "noise robustness",
      "consensus study",
      "robustness oracle suite",
      "gradient suite",
      "transform-function suite",
      "optimizer invariants",
  };

  int failures = 0;
  for (int c = 1; c <= 8; ++c) {
    if (only != 0 && only != c) continue;
    Outcome outcome;
    try {
      outcome = criteria[c - 1]();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (outcome.pass ? "[PASS] " : "[FAIL] ") << c << ". " << names[c - 1]
              << ": " << outcome.detail << "\n";
    if (!outcome.pass) ++failures;
  }
  return failures;
}

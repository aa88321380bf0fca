#include "stlpi2/scenarios.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace stlpi2 {

namespace {

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.rows() == 0 || (a.array() == b.array()).all());
}

bool same_vector(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.size() == 0 || (a.array() == b.array()).all());
}

}  // namespace

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  auto same_constraints = [](const std::vector<InputConstraint>& x,
                             const std::vector<InputConstraint>& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i)
      if (x[i].indices != y[i].indices || x[i].bound != y[i].bound) return false;
    return true;
  };
  if (a.name != b.name || a.formula != b.formula || a.rho_min != b.rho_min) return false;
  const DynamicsSpec& da = a.dynamics;
  const DynamicsSpec& db = b.dynamics;
  if (da.n != db.n || da.m != db.m || da.T != db.T || da.dt != db.dt) return false;
  if (da.drift.kind != db.drift.kind || !same_matrix(da.drift.matrix, db.drift.matrix))
    return false;
  if (da.input_map.kind != db.input_map.kind ||
      !same_matrix(da.input_map.matrix, db.input_map.matrix))
    return false;
  if (!same_matrix(da.sigma_w, db.sigma_w) || !same_vector(da.x0, db.x0)) return false;
  if (!same_constraints(da.input_constraints, db.input_constraints)) return false;
  if (a.predicates.size() != b.predicates.size()) return false;
  for (size_t i = 0; i < a.predicates.size(); ++i) {
    const PredicateSpec& pa = a.predicates[i];
    const PredicateSpec& pb = b.predicates[i];
    if (pa.name != pb.name || pa.kind != pb.kind || pa.radius != pb.radius ||
        pa.distance != pb.distance || !same_vector(pa.center, pb.center) ||
        pa.indices != pb.indices || pa.first != pb.first || pa.second != pb.second ||
        pa.target != pb.target)
      return false;
  }
  if (a.subtasks.size() != b.subtasks.size()) return false;
  for (size_t i = 0; i < a.subtasks.size(); ++i) {
    const SubtaskSpec& sa = a.subtasks[i];
    const SubtaskSpec& sb = b.subtasks[i];
    if (sa.funnel.rho_max != sb.funnel.rho_max || sa.funnel.gamma0 != sb.funnel.gamma0 ||
        sa.funnel.gamma_inf != sb.funnel.gamma_inf || sa.funnel.t_c != sb.funnel.t_c ||
        sa.beta != sb.beta || sa.B != sb.B || sa.xi_c != sb.xi_c || sa.weight != sb.weight)
      return false;
  }
  if (a.base_law.kind != b.base_law.kind ||
      a.base_law.gain.has_value() != b.base_law.gain.has_value())
    return false;
  if (a.base_law.gain && !same_matrix(*a.base_law.gain, *b.base_law.gain)) return false;
  if (a.cost.kind != b.cost.kind || a.cost.formula != b.cost.formula ||
      a.cost.rho_min != b.cost.rho_min)
    return false;
  const Pi2Config& qa = a.pi2;
  const Pi2Config& qb = b.pi2;
  if (qa.iterations != qb.iterations || qa.samples != qb.samples || qa.eta != qb.eta ||
      qa.h != qb.h || qa.eliteness_percentile != qb.eliteness_percentile ||
      !same_matrix(qa.c0, qb.c0) || !same_matrix(qa.cmin, qb.cmin) ||
      qa.nesterov != qb.nesterov || qa.sample_from_initial_cov != qb.sample_from_initial_cov ||
      qa.master_seed != qb.master_seed)
    return false;
  return a.penalty.lambda0 == b.penalty.lambda0 && a.penalty.lambdaK == b.penalty.lambdaK &&
         a.penalty.spacing == b.penalty.spacing && a.penalty.rho_min == b.penalty.rho_min;
}

// ---------------------------------------------------------------------------
// Builtins

namespace {

ScenarioConfig nav_simple() {
  ScenarioConfig cfg;
  cfg.name = "nav-simple";
  cfg.dynamics.n = 2;
  cfg.dynamics.m = 2;
  cfg.dynamics.sigma_w = Matrix::Zero(2, 2);
  cfg.dynamics.x0 = Vector{{3.0, 0.3}};
  cfg.dynamics.T = 10.0;
  cfg.dynamics.dt = 0.05;
  cfg.dynamics.input_constraints = {{{0, 1}, 1.0}};

  PredicateSpec goal;
  goal.name = "goal";
  goal.kind = PredicateSpec::Kind::BallInside;
  goal.center = Vector{{1.0, 3.5}};
  goal.radius = 0.2;
  goal.indices = {0, 1};
  PredicateSpec avoid;
  avoid.name = "avoid";
  avoid.kind = PredicateSpec::Kind::BallOutside;
  avoid.center = Vector{{2.5, 2.0}};
  avoid.radius = 1.2;
  avoid.indices = {0, 1};
  cfg.predicates = {goal, avoid};

  cfg.formula = "F[0,10] goal & G[0,inf] avoid";
  cfg.subtasks = {
      {{0.2, -4.0, 0.05, 10.0}, 0.8, 2.0, 0.5, std::nullopt},
      {{1.0, 0.05, 0.05, 10.0}, 0.1, 2.0, 0.8, std::nullopt},
  };
  cfg.base_law.kind = BaseLawSpec::Kind::Ppc;
  cfg.cost.kind = CostSpec::Kind::TimeToReach;
  cfg.cost.formula = "goal";
  cfg.cost.rho_min = 0.05;
  cfg.rho_min = 0.05;

  cfg.pi2.iterations = 25;
  cfg.pi2.samples = 100;
  cfg.pi2.eliteness_percentile = 25.0;
  cfg.pi2.c0 = 2e-3 * Matrix::Identity(2, 2);
  cfg.pi2.cmin = 2e-4 * Matrix::Identity(2, 2);
  cfg.pi2.nesterov = true;

  cfg.penalty.lambda0 = 2.0;
  cfg.penalty.lambdaK = 2000.0;
  cfg.penalty.spacing = PenaltySchedule::Spacing::Logarithmic;
  cfg.penalty.rho_min = cfg.rho_min;
  return cfg;
}

ScenarioConfig nav_simple_noisy() {
  ScenarioConfig cfg = nav_simple();
  cfg.name = "nav-simple-noisy";
  // Disturbance standard deviation 0.2, i.e. 20% of the unit input bound.
  cfg.dynamics.sigma_w = 0.04 * Matrix::Identity(2, 2);
  cfg.pi2.iterations = 50;
  cfg.pi2.eliteness_percentile = 50.0;
  cfg.pi2.nesterov = false;
  cfg.penalty.lambdaK = 50000.0;
  cfg.penalty.spacing = PenaltySchedule::Spacing::Linear;
  return cfg;
}

ScenarioConfig consensus_complex() {
  ScenarioConfig cfg;
  cfg.name = "consensus-complex";
  cfg.dynamics.n = 6;
  cfg.dynamics.m = 6;
  // Complete-graph consensus coupling on three planar agents.
  Matrix laplacian{{2.0, -1.0, -1.0}, {-1.0, 2.0, -1.0}, {-1.0, -1.0, 2.0}};
  Matrix drift = Matrix::Zero(6, 6);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      drift.block<2, 2>(2 * i, 2 * j) = -0.1 * laplacian(i, j) * Matrix::Identity(2, 2);
  cfg.dynamics.drift.kind = DriftSpec::Kind::Linear;
  cfg.dynamics.drift.matrix = drift;
  cfg.dynamics.sigma_w = Matrix::Zero(6, 6);
  cfg.dynamics.x0 = Vector{{3.0, 0.8, 2.0, 0.8, 1.2, 0.7}};
  cfg.dynamics.T = 10.0;
  cfg.dynamics.dt = 0.01;
  cfg.dynamics.input_constraints = {{{0, 1}, 1.0}, {{2, 3}, 1.0}, {{4, 5}, 1.0}};

  auto ball = [](const std::string& name, PredicateSpec::Kind kind, double cx, double cy,
                 double r, std::vector<int> idx) {
    PredicateSpec p;
    p.name = name;
    p.kind = kind;
    p.center = Vector{{cx, cy}};
    p.radius = r;
    p.indices = std::move(idx);
    return p;
  };
  PredicateSpec near12;
  near12.name = "near12";
  near12.kind = PredicateSpec::Kind::PairDistanceMax;
  near12.distance = 1.1;
  near12.first = {0, 1};
  near12.second = {2, 3};
  PredicateSpec far12 = near12;
  far12.name = "far12";
  far12.kind = PredicateSpec::Kind::PairDistanceMin;
  far12.distance = 0.9;
  PredicateSpec track;
  track.name = "track";
  track.kind = PredicateSpec::Kind::MidpointBall;
  track.radius = 0.1;
  track.first = {0, 1};
  track.second = {2, 3};
  track.target = {4, 5};
  cfg.predicates = {
      ball("reach1", PredicateSpec::Kind::BallInside, 2.0, 4.2, 0.1, {0, 1}),
      ball("reach2", PredicateSpec::Kind::BallInside, 3.0, 4.2, 0.1, {2, 3}),
      near12,
      far12,
      ball("clear1", PredicateSpec::Kind::BallOutside, 2.5, 2.5, 1.2, {0, 1}),
      ball("clear2", PredicateSpec::Kind::BallOutside, 2.5, 2.5, 1.2, {2, 3}),
      track,
  };

  cfg.formula =
      "F[0,7] G[0,inf] reach1 & F[0,7] G[0,inf] reach2 & G[0,inf] near12 & "
      "G[0,inf] far12 & G[0,inf] clear1 & G[0,inf] clear2 & F[0,3] G[0,inf] track";
  // Ramp ends follow the reach deadlines; constant funnels keep t_c = T.
  cfg.subtasks = {
      {{0.1, -4.0, 0.02, 7.0}, 2.0, 6.0, 0.5, std::nullopt},
      {{0.1, -4.0, 0.02, 7.0}, 2.0, 6.0, 0.5, std::nullopt},
      {{0.1, 0.02, 0.02, 10.0}, 0.2, 6.0, 0.8, std::nullopt},
      {{0.1, 0.02, 0.02, 10.0}, 0.2, 6.0, 0.8, std::nullopt},
      {{1.0, 0.02, 0.02, 10.0}, 0.2, 6.0, 0.8, std::nullopt},
      {{1.0, 0.02, 0.02, 10.0}, 0.2, 6.0, 0.8, std::nullopt},
      {{0.1, -2.0, 0.02, 3.0}, 1.0, 6.0, 0.8, std::nullopt},
  };
  cfg.base_law.kind = BaseLawSpec::Kind::Ppc;
  cfg.cost.kind = CostSpec::Kind::InputEnergy;
  cfg.rho_min = 0.02;

  cfg.pi2.iterations = 50;
  cfg.pi2.samples = 100;
  cfg.pi2.eliteness_percentile = 80.0;
  cfg.pi2.c0 = 2e-4 * Matrix::Identity(6, 6);
  cfg.pi2.cmin = 2e-7 * Matrix::Identity(6, 6);
  // Momentum overshoots once the penalty weight gets steep on this task.
  cfg.pi2.nesterov = false;

  cfg.penalty.lambda0 = 2.0;
  cfg.penalty.lambdaK = 10000.0;
  cfg.penalty.spacing = PenaltySchedule::Spacing::Logarithmic;
  cfg.penalty.rho_min = cfg.rho_min;
  return cfg;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  return {"nav-simple", "nav-simple-noisy", "consensus-complex"};
}

ScenarioConfig builtin_scenario(const std::string& name) {
  if (name == "nav-simple") return nav_simple();
  if (name == "nav-simple-noisy") return nav_simple_noisy();
  if (name == "consensus-complex") return consensus_complex();
  throw ConfigError("unknown builtin scenario '" + name + "'");
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void check_coords(const std::vector<int>& idx, int n, const std::string& path) {
  if (idx.empty()) config_fail(path, "empty coordinate list");
  for (int i : idx)
    if (i < 0 || i >= n) config_fail(path, "state index out of range");
}

Vector gather(const Vector& x, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = x[idx[i]];
  return out;
}

void scatter_add(Vector& out, const std::vector<int>& idx, const Vector& v) {
  for (size_t i = 0; i < idx.size(); ++i) out[idx[i]] += v[static_cast<Eigen::Index>(i)];
}

Predicate build_predicate(const PredicateSpec& spec, int n, const std::string& path) {
  // Gradients of the norm terms are left zero at their singular points.
  constexpr double kTiny = 1e-12;
  Predicate p;
  p.label = spec.name;
  switch (spec.kind) {
    case PredicateSpec::Kind::BallInside:
    case PredicateSpec::Kind::BallOutside: {
      check_coords(spec.indices, n, path + ".indices");
      if (spec.center.size() != static_cast<Eigen::Index>(spec.indices.size()))
        config_fail(path + ".center", "length must match indices");
      if (!(spec.radius > 0.0)) config_fail(path + ".radius", "must be positive");
      const bool inside = spec.kind == PredicateSpec::Kind::BallInside;
      const double sign = inside ? -1.0 : 1.0;
      const Vector center = spec.center;
      const std::vector<int> idx = spec.indices;
      const double radius = spec.radius;
      p.value = [=](const Vector& x) {
        const double d = (gather(x, idx) - center).norm();
        return inside ? radius - d : d - radius;
      };
      p.gradient = [=](const Vector& x) {
        Vector grad = Vector::Zero(x.size());
        const Vector seg = gather(x, idx) - center;
        const double d = seg.norm();
        if (d > kTiny) scatter_add(grad, idx, (sign / d) * seg);
        return grad;
      };
      return p;
    }
    case PredicateSpec::Kind::PairDistanceMax:
    case PredicateSpec::Kind::PairDistanceMin: {
      check_coords(spec.first, n, path + ".first");
      check_coords(spec.second, n, path + ".second");
      if (spec.first.size() != spec.second.size())
        config_fail(path, "first/second must have equal length");
      if (!(spec.distance > 0.0)) config_fail(path + ".distance", "must be positive");
      const bool upper = spec.kind == PredicateSpec::Kind::PairDistanceMax;
      const double sign = upper ? -1.0 : 1.0;
      const std::vector<int> first = spec.first;
      const std::vector<int> second = spec.second;
      const double distance = spec.distance;
      p.value = [=](const Vector& x) {
        const double d = (gather(x, first) - gather(x, second)).norm();
        return upper ? distance - d : d - distance;
      };
      p.gradient = [=](const Vector& x) {
        Vector grad = Vector::Zero(x.size());
        const Vector seg = gather(x, first) - gather(x, second);
        const double d = seg.norm();
        if (d > kTiny) {
          scatter_add(grad, first, (sign / d) * seg);
          scatter_add(grad, second, (-sign / d) * seg);
        }
        return grad;
      };
      return p;
    }
    case PredicateSpec::Kind::MidpointBall: {
      check_coords(spec.first, n, path + ".first");
      check_coords(spec.second, n, path + ".second");
      check_coords(spec.target, n, path + ".target");
      if (spec.first.size() != spec.second.size() || spec.first.size() != spec.target.size())
        config_fail(path, "first/second/target must have equal length");
      if (!(spec.radius > 0.0)) config_fail(path + ".radius", "must be positive");
      const std::vector<int> first = spec.first;
      const std::vector<int> second = spec.second;
      const std::vector<int> target = spec.target;
      const double radius = spec.radius;
      p.value = [=](const Vector& x) {
        const Vector mid = 0.5 * (gather(x, first) + gather(x, second));
        return radius - (mid - gather(x, target)).norm();
      };
      p.gradient = [=](const Vector& x) {
        Vector grad = Vector::Zero(x.size());
        const Vector mid = 0.5 * (gather(x, first) + gather(x, second));
        const Vector seg = mid - gather(x, target);
        const double d = seg.norm();
        if (d > kTiny) {
          scatter_add(grad, first, (-0.5 / d) * seg);
          scatter_add(grad, second, (-0.5 / d) * seg);
          scatter_add(grad, target, (1.0 / d) * seg);
        }
        return grad;
      };
      return p;
    }
  }
  config_fail(path, "unknown predicate kind");
}

// Non-temporal core of a conjunct of shape G psi, F psi, or F G psi.
Formula subtask_core(const Formula& phi, const std::string& path) {
  if (phi.kind() == Formula::Kind::Always) {
    const Formula& psi = phi.children().front();
    if (!psi.is_temporal() && psi.is_ppc_fragment()) return psi;
  } else if (phi.kind() == Formula::Kind::Eventually) {
    const Formula& inner = phi.children().front();
    if (inner.kind() == Formula::Kind::Always) {
      const Formula& psi = inner.children().front();
      if (!psi.is_temporal() && psi.is_ppc_fragment()) return psi;
    } else if (!inner.is_temporal() && inner.is_ppc_fragment()) {
      return inner;
    }
  }
  config_fail(path, "conjunct must be G[a,b] psi, F[a,b] psi, or F G psi with "
                    "non-temporal psi");
}

}  // namespace

Scenario compile(const ScenarioConfig& config) {
  Scenario sc;
  sc.config = config;
  const DynamicsSpec& dyn = config.dynamics;
  if (dyn.n <= 0 || dyn.m <= 0) config_fail("dynamics", "n and m must be positive");
  if (dyn.x0.size() != dyn.n) config_fail("dynamics.x0", "length must equal n");
  if (!(dyn.dt > 0.0)) config_fail("dynamics.dt", "must be positive");
  if (!(dyn.T > 0.0)) config_fail("dynamics.T", "must be positive");
  if (dyn.sigma_w.rows() != dyn.n || dyn.sigma_w.cols() != dyn.n)
    config_fail("dynamics.sigma_w", "must be n x n");

  sc.model.n = dyn.n;
  sc.model.m = dyn.m;
  sc.model.sigma_w = dyn.sigma_w;
  sc.model.input_constraints = dyn.input_constraints;
  if (dyn.drift.kind == DriftSpec::Kind::Zero) {
    const int n = dyn.n;
    sc.model.f = [n](const Vector&) { return Vector::Zero(n); };
  } else {
    if (dyn.drift.matrix.rows() != dyn.n || dyn.drift.matrix.cols() != dyn.n)
      config_fail("dynamics.drift.matrix", "must be n x n");
    const Matrix a = dyn.drift.matrix;
    sc.model.f = [a](const Vector& x) -> Vector { return a * x; };
  }
  Matrix g_matrix;
  if (dyn.input_map.kind == InputMapSpec::Kind::Identity) {
    if (dyn.n != dyn.m) config_fail("dynamics.input_map", "identity requires n == m");
    g_matrix = Matrix::Identity(dyn.n, dyn.m);
  } else {
    if (dyn.input_map.matrix.rows() != dyn.n || dyn.input_map.matrix.cols() != dyn.m)
      config_fail("dynamics.input_map.matrix", "must be n x m");
    g_matrix = dyn.input_map.matrix;
  }
  sc.model.g = [g_matrix](const Vector&) { return g_matrix; };
  validate(sc.model);

  for (size_t i = 0; i < config.predicates.size(); ++i) {
    const PredicateSpec& spec = config.predicates[i];
    const std::string path = "predicates[" + std::to_string(i) + "]";
    if (spec.name.empty()) config_fail(path + ".name", "must not be empty");
    if (sc.predicates.count(spec.name)) config_fail(path + ".name", "duplicate name");
    sc.predicates[spec.name] = build_predicate(spec, dyn.n, path);
  }

  try {
    sc.task = parse_formula(config.formula, sc.predicates);
  } catch (const std::exception& e) {
    config_fail("formula", e.what());
  }

  std::vector<Formula> conjuncts;
  if (sc.task.kind() == Formula::Kind::And)
    conjuncts = sc.task.children();
  else
    conjuncts = {sc.task};
  if (conjuncts.size() != config.subtasks.size())
    config_fail("subtasks", "count must match the top-level conjunction arity (" +
                                std::to_string(conjuncts.size()) + ")");

  const double default_weight = 1.0 / static_cast<double>(config.subtasks.size());
  BaseLaw law;
  law.g = sc.model.g;
  for (size_t i = 0; i < config.subtasks.size(); ++i) {
    const SubtaskSpec& spec = config.subtasks[i];
    const std::string path = "subtasks[" + std::to_string(i) + "]";
    try {
      validate(spec.funnel);
    } catch (const std::exception& e) {
      config_fail(path + ".funnel", e.what());
    }
    Formula psi = subtask_core(conjuncts[i], "formula (conjunct " + std::to_string(i) + ")");
    TransformFn transform;
    try {
      transform = solve_transform(spec.beta, spec.B, spec.xi_c);
    } catch (const std::exception& e) {
      config_fail(path + ".transform", e.what());
    }
    sc.subtask_psi.push_back(psi);
    sc.funnels.push_back(spec.funnel);
    law.subtasks.push_back(
        {std::move(psi), spec.funnel, transform, spec.weight.value_or(default_weight)});
  }

  switch (config.base_law.kind) {
    case BaseLawSpec::Kind::Ppc: {
      try {
        validate(law);
      } catch (const std::exception& e) {
        config_fail("subtasks", e.what());
      }
      sc.base = std::move(law);
      break;
    }
    case BaseLawSpec::Kind::Linear: {
      Matrix gain = config.base_law.gain.value_or(Matrix::Identity(dyn.m, dyn.n));
      if (gain.rows() != dyn.m || gain.cols() != dyn.n)
        config_fail("base_law.gain", "must be m x n");
      sc.base = LinearFeedback{std::move(gain)};
      break;
    }
    case BaseLawSpec::Kind::Zero:
      sc.base = ZeroBase{};
      break;
  }

  sc.cost.kind = config.cost.kind;
  if (config.cost.kind == CostSpec::Kind::TimeToReach) {
    try {
      sc.cost.reach_psi = parse_formula(config.cost.formula, sc.predicates);
    } catch (const std::exception& e) {
      config_fail("cost.formula", e.what());
    }
    if (sc.cost.reach_psi->is_temporal())
      config_fail("cost.formula", "must be non-temporal");
    sc.cost.reach_rho_min = config.cost.rho_min;
  }

  if (config.rho_min < 0.0) config_fail("rho_min", "must be nonnegative");
  try {
    validate(config.pi2);
  } catch (const std::exception& e) {
    config_fail("pi2", e.what());
  }
  if (config.pi2.c0.rows() != dyn.m) config_fail("pi2.c0", "must be m x m");
  try {
    validate(config.penalty);
  } catch (const std::exception& e) {
    config_fail("penalty", e.what());
  }
  if (config.penalty.rho_min != config.rho_min)
    config_fail("penalty.rho_min", "must equal the scenario rho_min");
  return sc;
}

std::pair<double, double> evaluate_trajectory(const Scenario& scenario,
                                              const Trajectory& traj) {
  return {trajectory_cost(scenario.cost, traj),
          robustness(scenario.task, traj, traj.t0)};
}

Pi2Problem make_problem(const Scenario& scenario) {
  Pi2Problem problem;
  problem.model = scenario.model;
  problem.base = scenario.base;
  problem.x0 = scenario.config.dynamics.x0;
  problem.T = scenario.config.dynamics.T;
  problem.dt = scenario.config.dynamics.dt;
  problem.penalty = scenario.config.penalty;
  auto shared = std::make_shared<const Scenario>(scenario);
  problem.evaluate = [shared](const Trajectory& traj) {
    return evaluate_trajectory(*shared, traj);
  };
  return problem;
}

}  // namespace stlpi2

#pragma once

#include "stlpi2/pi2.hpp"

#include <optional>
#include <string>

namespace stlpi2 {

/// Configuration or schema violation; message carries the field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DriftSpec {
  enum class Kind { Zero, Linear };
  Kind kind = Kind::Zero;
  Matrix matrix;  // Linear only: dx = matrix * x
};

struct InputMapSpec {
  enum class Kind { Identity, Constant };
  Kind kind = Kind::Identity;
  Matrix matrix;  // Constant only: n x m
};

struct DynamicsSpec {
  int n = 0;
  int m = 0;
  DriftSpec drift;
  InputMapSpec input_map;
  Matrix sigma_w;
  Vector x0;
  double T = 0.0;
  double dt = 0.0;
  std::vector<InputConstraint> input_constraints;
};

/// Closed set of predicate shapes with analytic gradients.
struct PredicateSpec {
  enum class Kind { BallInside, BallOutside, PairDistanceMax, PairDistanceMin, MidpointBall };
  std::string name;
  Kind kind = Kind::BallInside;
  Vector center;               // ball kinds
  double radius = 0.0;         // ball kinds and midpoint-ball
  double distance = 0.0;       // pair-distance kinds
  std::vector<int> indices;    // ball kinds: state coordinates
  std::vector<int> first;      // pair/midpoint kinds
  std::vector<int> second;
  std::vector<int> target;     // midpoint-ball: tracker coordinates
};

/// Funnel, gain-map parameters, and combination weight for one conjunct of
/// the task formula, matched by position.
struct SubtaskSpec {
  Funnel funnel;
  double beta = 0.0;
  double B = 0.0;
  double xi_c = 0.0;
  std::optional<double> weight;  // default: 1/M
};

struct BaseLawSpec {
  enum class Kind { Ppc, Linear, Zero };
  Kind kind = Kind::Ppc;
  std::optional<Matrix> gain;  // Linear only; defaults to identity
};

struct CostConfig {
  CostSpec::Kind kind = CostSpec::Kind::InputEnergy;
  std::string formula;    // TimeToReach only: non-temporal formula text
  double rho_min = 0.0;   // TimeToReach only
};

struct ScenarioConfig {
  std::string name;
  DynamicsSpec dynamics;
  std::vector<PredicateSpec> predicates;
  std::string formula;
  std::vector<SubtaskSpec> subtasks;
  BaseLawSpec base_law;
  CostConfig cost;
  double rho_min = 0.0;
  Pi2Config pi2;
  PenaltySchedule penalty;
};

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

/// The built-in experiment configurations: "nav-simple",
/// "nav-simple-noisy", and "consensus-complex".
ScenarioConfig builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

/// Everything a run needs, assembled and validated from a config.
struct Scenario {
  ScenarioConfig config;
  SystemModel model;
  PolicyBase base;
  PredicateTable predicates;
  Formula task;
  std::vector<Formula> subtask_psi;  // non-temporal core of each conjunct
  std::vector<Funnel> funnels;
  CostSpec cost;
};

/// Validates the config end to end and builds the runtime objects.
/// All violations raise ConfigError naming the offending field.
Scenario compile(const ScenarioConfig& config);

/// (C, rho): target cost and exact task robustness at the trajectory start.
std::pair<double, double> evaluate_trajectory(const Scenario& scenario,
                                              const Trajectory& traj);

Pi2Problem make_problem(const Scenario& scenario);

}  // namespace stlpi2

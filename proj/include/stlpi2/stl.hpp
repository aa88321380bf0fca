#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace stlpi2 {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A scalar field over the state space together with its gradient.
/// The sign of `value` decides the truth of the predicate.
struct Predicate {
  std::string label;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// Time-gridded record of one system run: L+1 states sampled every `dt`
/// seconds starting at `t0`, and the L inputs applied between them.
struct Trajectory {
  double dt = 0.0;
  double t0 = 0.0;
  std::vector<Vector> states;
  std::vector<Vector> inputs;

  int steps() const { return static_cast<int>(inputs.size()); }
  double time_at(int i) const { return t0 + i * dt; }
  double end_time() const { return t0 + steps() * dt; }
};

/// Throws std::invalid_argument if the shapes are inconsistent
/// (states = inputs + 1, uniform dimensions, dt > 0).
void validate(const Trajectory& traj);

/// Immutable formula tree. Value-semantic handle over a shared node, so
/// copies are cheap and evaluation is safe from concurrent threads.
class Formula {
 public:
  enum class Kind { True, Pred, Not, And, Eventually, Always, Until };

  Formula();  // defaults to True

  static Formula top();
  static Formula pred(Predicate p);
  static Formula negation(Formula f);
  static Formula conjunction(std::vector<Formula> children);
  static Formula eventually(double a, double b, Formula f);
  static Formula always(double a, double b, Formula f);
  static Formula until(double a, double b, Formula lhs, Formula rhs);

  Kind kind() const;
  const Predicate& predicate() const;
  /// Window offsets in seconds for temporal nodes; upper() may be +inf,
  /// which resolves to the trajectory end at evaluation time.
  double lower() const;
  double upper() const;
  const std::vector<Formula>& children() const;

  /// True if any temporal operator occurs in the tree.
  bool is_temporal() const;
  /// True if the tree is in the controllable non-temporal fragment:
  /// predicates, negations directly above predicates, conjunctions, true.
  bool is_ppc_fragment() const;

  /// Structural equality; predicates compare by label.
  bool operator==(const Formula& other) const;

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

/// Exact spatial robustness of `formula` over the sampled trajectory at
/// time t. t must lie on the grid within dt/2. Temporal windows are taken
/// over the grid points inside [t+a, t+b], clipped to the trajectory; an
/// empty window raises std::runtime_error("window outside trajectory").
double robustness(const Formula& formula, const Trajectory& traj, double t);

/// Boolean satisfaction under the same discretized semantics.
bool satisfies(const Formula& formula, const Trajectory& traj, double t);

/// Robustness of a formula at every grid index at once. Entries above
/// `valid_hi` would need samples beyond the trajectory end and are
/// undefined; valid_hi == -1 means no index can be evaluated.
struct RobustnessSignal {
  Vector values;
  int valid_hi = -1;
};
RobustnessSignal robustness_signal(const Formula& formula,
                                   const Trajectory& traj);

struct SmoothEval {
  double value = 0.0;
  Vector gradient;
};

/// Differentiable under-approximation of the robustness of a non-temporal
/// formula at state x. Conjunctions evaluate as -ln(sum_i exp(-rho_i))
/// over all children, never exceeding the exact minimum; the gradient is
/// the softmin-weighted combination of the children's gradients.
/// Temporal nodes raise std::runtime_error("non-temporal fragment required").
SmoothEval smooth_robustness(const Formula& formula, const Vector& x);

using PredicateTable = std::map<std::string, Predicate>;

/// Parses the formula grammar
///   formula := until ; until := conj ('U[a,b]' until)?
///   conj    := unary ('&' unary)* ; unary := ('G[a,b]'|'F[a,b]'|'!')* atom
///   atom    := 'true' | name | '(' formula ')'
/// where interval bounds are nonnegative seconds and the upper bound may
/// be 'inf'. Names are bound through `predicates`. Errors carry the
/// offending position.
Formula parse_formula(const std::string& text, const PredicateTable& predicates);

/// Canonical text form; parse_formula(format_formula(f)) == f.
std::string format_formula(const Formula& formula);

}  // namespace stlpi2

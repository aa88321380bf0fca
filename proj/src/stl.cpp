#include "stlpi2/stl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace stlpi2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Slack for mapping window bounds in seconds onto grid steps.
constexpr double kGridEps = 1e-9;

}  // namespace

// ---------------------------------------------------------------------------
// Trajectory

void validate(const Trajectory& traj) {
  if (!(traj.dt > 0.0)) throw std::invalid_argument("trajectory: dt must be positive");
  if (traj.states.size() != traj.inputs.size() + 1)
    throw std::invalid_argument("trajectory: states length must be inputs length + 1");
  const Eigen::Index n = traj.states.front().size();
  for (const Vector& x : traj.states)
    if (x.size() != n) throw std::invalid_argument("trajectory: inconsistent state dimension");
  if (!traj.inputs.empty()) {
    const Eigen::Index m = traj.inputs.front().size();
    for (const Vector& u : traj.inputs)
      if (u.size() != m) throw std::invalid_argument("trajectory: inconsistent input dimension");
  }
}

// ---------------------------------------------------------------------------
// Formula

struct Formula::Node {
  Kind kind = Kind::True;
  std::optional<Predicate> pred;
  double a = 0.0;
  double b = 0.0;
  std::vector<Formula> children;
};

Formula::Formula() : node_(std::make_shared<const Node>()) {}
Formula::Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Formula Formula::top() { return Formula(); }

Formula Formula::pred(Predicate p) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Pred;
  node->pred = std::move(p);
  return Formula(std::move(node));
}

Formula Formula::negation(Formula f) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Not;
  node->children.push_back(std::move(f));
  return Formula(std::move(node));
}

Formula Formula::conjunction(std::vector<Formula> children) {
  if (children.empty()) throw std::invalid_argument("conjunction requires at least one child");
  auto node = std::make_shared<Node>();
  node->kind = Kind::And;
  node->children = std::move(children);
  return Formula(std::move(node));
}

namespace {
void check_interval(double a, double b) {
  if (!(a >= 0.0) || std::isnan(b) || a > b)
    throw std::invalid_argument("temporal interval requires 0 <= a <= b");
}
}  // namespace

Formula Formula::eventually(double a, double b, Formula f) {
  check_interval(a, b);
  auto node = std::make_shared<Node>();
  node->kind = Kind::Eventually;
  node->a = a;
  node->b = b;
  node->children.push_back(std::move(f));
  return Formula(std::move(node));
}

Formula Formula::always(double a, double b, Formula f) {
  check_interval(a, b);
  auto node = std::make_shared<Node>();
  node->kind = Kind::Always;
  node->a = a;
  node->b = b;
  node->children.push_back(std::move(f));
  return Formula(std::move(node));
}

Formula Formula::until(double a, double b, Formula lhs, Formula rhs) {
  check_interval(a, b);
  auto node = std::make_shared<Node>();
  node->kind = Kind::Until;
  node->a = a;
  node->b = b;
  node->children.push_back(std::move(lhs));
  node->children.push_back(std::move(rhs));
  return Formula(std::move(node));
}

Formula::Kind Formula::kind() const { return node_->kind; }

const Predicate& Formula::predicate() const {
  if (node_->kind != Kind::Pred) throw std::logic_error("formula node is not a predicate");
  return *node_->pred;
}

double Formula::lower() const { return node_->a; }
double Formula::upper() const { return node_->b; }
const std::vector<Formula>& Formula::children() const { return node_->children; }

bool Formula::is_temporal() const {
  switch (node_->kind) {
    case Kind::Eventually:
    case Kind::Always:
    case Kind::Until:
      return true;
    default:
      break;
  }
  for (const Formula& c : node_->children)
    if (c.is_temporal()) return true;
  return false;
}

bool Formula::is_ppc_fragment() const {
  switch (node_->kind) {
    case Kind::True:
    case Kind::Pred:
      return true;
    case Kind::Not:
      return node_->children.front().kind() == Kind::Pred;
    case Kind::And:
      return std::all_of(node_->children.begin(), node_->children.end(),
                         [](const Formula& c) { return c.is_ppc_fragment(); });
    default:
      return false;
  }
}

bool Formula::operator==(const Formula& other) const {
  if (node_ == other.node_) return true;
  if (node_->kind != other.node_->kind) return false;
  if (node_->a != other.node_->a || node_->b != other.node_->b) return false;
  if (node_->kind == Kind::Pred) return node_->pred->label == other.node_->pred->label;
  if (node_->children.size() != other.node_->children.size()) return false;
  for (size_t i = 0; i < node_->children.size(); ++i)
    if (!(node_->children[i] == other.node_->children[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Exact robustness over the sampled grid

namespace {

// Window [t+a, t+b] as grid-step offsets relative to the evaluation index.
struct WindowSteps {
  long lo = 0;
  long hi = 0;  // hi < 0 encodes an unbounded upper end (clip to the grid)
};

WindowSteps window_steps(double a, double b, double dt, int last) {
  WindowSteps w;
  const double lof = std::ceil(a / dt - kGridEps);
  w.lo = lof > static_cast<double>(last + 1) ? static_cast<long>(last) + 1
                                             : static_cast<long>(lof);
  if (std::isinf(b)) {
    w.hi = -1;
  } else {
    const double hif = std::floor(b / dt + kGridEps);
    w.hi = hif > static_cast<double>(2 * last + 2) ? static_cast<long>(2 * last) + 2
                                                   : static_cast<long>(hif);
  }
  return w;
}

// Largest evaluation index whose whole (clipped) window stays inside the
// child's defined prefix [0, child_hi]; -1 when no index qualifies. A
// bound pair enclosing no grid point leaves every index undefined.
int windowed_valid_hi(const WindowSteps& w, int child_hi, int last) {
  long valid;
  if (w.hi >= 0 && w.hi < w.lo) {
    valid = -1;
  } else if (w.hi < 0) {
    valid = (child_hi == last) ? last - w.lo : -1;
  } else if (child_hi == last) {
    valid = last - w.lo;
  } else {
    valid = std::min<long>(last - w.lo, child_hi - w.hi);
  }
  return static_cast<int>(std::clamp<long>(valid, -1, last));
}

// Sliding-window extremum of `child` over [i+lo, min(i+hi, last)] for every
// i in [0, valid_hi], using a monotonic index deque.
Vector windowed_extremum(const Vector& child, const WindowSteps& w, int valid_hi,
                         int last, bool take_min) {
  Vector out = Vector::Constant(child.size(), 0.0);
  if (valid_hi < 0) return out;
  if (w.hi < 0) {
    // Suffix scan for windows reaching the trajectory end.
    Vector suffix(child.size());
    suffix[last] = child[last];
    for (int j = last - 1; j >= 0; --j)
      suffix[j] = take_min ? std::min(child[j], suffix[j + 1])
                           : std::max(child[j], suffix[j + 1]);
    for (int i = 0; i <= valid_hi; ++i) out[i] = suffix[i + w.lo];
    return out;
  }
  std::deque<int> dq;
  long next = w.lo;
  for (int i = 0; i <= valid_hi; ++i) {
    const long s = i + w.lo;
    const long e = std::min<long>(i + w.hi, last);
    while (next <= e) {
      const int j = static_cast<int>(next);
      if (take_min)
        while (!dq.empty() && child[dq.back()] >= child[j]) dq.pop_back();
      else
        while (!dq.empty() && child[dq.back()] <= child[j]) dq.pop_back();
      dq.push_back(j);
      ++next;
    }
    while (dq.front() < s) dq.pop_front();
    out[i] = child[dq.front()];
  }
  return out;
}

RobustnessSignal eval_signal(const Formula& f, const Trajectory& traj) {
  const int last = traj.steps();
  RobustnessSignal sig;
  switch (f.kind()) {
    case Formula::Kind::True:
      sig.values = Vector::Constant(last + 1, kInf);
      sig.valid_hi = last;
      return sig;
    case Formula::Kind::Pred: {
      sig.values.resize(last + 1);
      for (int i = 0; i <= last; ++i) sig.values[i] = f.predicate().value(traj.states[i]);
      sig.valid_hi = last;
      return sig;
    }
    case Formula::Kind::Not: {
      RobustnessSignal child = eval_signal(f.children().front(), traj);
      sig.values = -child.values;
      sig.valid_hi = child.valid_hi;
      return sig;
    }
    case Formula::Kind::And: {
      sig = eval_signal(f.children().front(), traj);
      for (size_t c = 1; c < f.children().size(); ++c) {
        RobustnessSignal other = eval_signal(f.children()[c], traj);
        sig.valid_hi = std::min(sig.valid_hi, other.valid_hi);
        sig.values = sig.values.cwiseMin(other.values);
      }
      return sig;
    }
    case Formula::Kind::Eventually:
    case Formula::Kind::Always: {
      const bool take_min = f.kind() == Formula::Kind::Always;
      RobustnessSignal child = eval_signal(f.children().front(), traj);
      const WindowSteps w = window_steps(f.lower(), f.upper(), traj.dt, last);
      sig.valid_hi = windowed_valid_hi(w, child.valid_hi, last);
      sig.values = windowed_extremum(child.values, w, sig.valid_hi, last, take_min);
      return sig;
    }
    case Formula::Kind::Until: {
      RobustnessSignal lhs = eval_signal(f.children()[0], traj);
      RobustnessSignal rhs = eval_signal(f.children()[1], traj);
      const WindowSteps w = window_steps(f.lower(), f.upper(), traj.dt, last);
      sig.valid_hi = windowed_valid_hi(w, std::min(lhs.valid_hi, rhs.valid_hi), last);
      sig.values = Vector::Constant(last + 1, 0.0);
      for (int i = 0; i <= sig.valid_hi; ++i) {
        const long e = w.hi < 0 ? last : std::min<long>(i + w.hi, last);
        double best = -kInf;
        double run_min = kInf;
        for (long j = i; j <= e; ++j) {
          run_min = std::min(run_min, lhs.values[j]);
          if (j >= i + w.lo) best = std::max(best, std::min(rhs.values[j], run_min));
        }
        sig.values[i] = best;
      }
      return sig;
    }
  }
  throw std::logic_error("unreachable formula kind");
}

int grid_index(const Trajectory& traj, double t) {
  const double pos = (t - traj.t0) / traj.dt;
  const long i = std::lround(pos);
  if (i < 0 || i > traj.steps() || std::abs(pos - static_cast<double>(i)) > 0.5 + kGridEps)
    throw std::runtime_error("evaluation time not on the trajectory grid");
  return static_cast<int>(i);
}

}  // namespace

RobustnessSignal robustness_signal(const Formula& formula, const Trajectory& traj) {
  validate(traj);
  return eval_signal(formula, traj);
}

double robustness(const Formula& formula, const Trajectory& traj, double t) {
  validate(traj);
  const int i = grid_index(traj, t);
  const RobustnessSignal sig = eval_signal(formula, traj);
  if (i > sig.valid_hi) throw std::runtime_error("window outside trajectory");
  return sig.values[i];
}

// ---------------------------------------------------------------------------
// Boolean satisfaction (same window discretization, thresholded semantics)

namespace {

struct BoolSignal {
  std::vector<char> values;
  int valid_hi = -1;
};

BoolSignal eval_bool(const Formula& f, const Trajectory& traj) {
  const int last = traj.steps();
  BoolSignal sig;
  sig.values.assign(last + 1, 0);
  switch (f.kind()) {
    case Formula::Kind::True:
      std::fill(sig.values.begin(), sig.values.end(), 1);
      sig.valid_hi = last;
      return sig;
    case Formula::Kind::Pred:
      for (int i = 0; i <= last; ++i)
        sig.values[i] = f.predicate().value(traj.states[i]) >= 0.0;
      sig.valid_hi = last;
      return sig;
    case Formula::Kind::Not: {
      BoolSignal child = eval_bool(f.children().front(), traj);
      sig.valid_hi = child.valid_hi;
      for (int i = 0; i <= last; ++i) sig.values[i] = !child.values[i];
      return sig;
    }
    case Formula::Kind::And: {
      sig = eval_bool(f.children().front(), traj);
      for (size_t c = 1; c < f.children().size(); ++c) {
        BoolSignal other = eval_bool(f.children()[c], traj);
        sig.valid_hi = std::min(sig.valid_hi, other.valid_hi);
        for (int i = 0; i <= last; ++i) sig.values[i] = sig.values[i] && other.values[i];
      }
      return sig;
    }
    case Formula::Kind::Eventually:
    case Formula::Kind::Always: {
      const bool forall = f.kind() == Formula::Kind::Always;
      BoolSignal child = eval_bool(f.children().front(), traj);
      const WindowSteps w = window_steps(f.lower(), f.upper(), traj.dt, last);
      sig.valid_hi = windowed_valid_hi(w, child.valid_hi, last);
      for (int i = 0; i <= sig.valid_hi; ++i) {
        const long e = w.hi < 0 ? last : std::min<long>(i + w.hi, last);
        bool acc = forall;
        for (long j = i + w.lo; j <= e; ++j)
          acc = forall ? (acc && child.values[j]) : (acc || child.values[j]);
        sig.values[i] = acc;
      }
      return sig;
    }
    case Formula::Kind::Until: {
      BoolSignal lhs = eval_bool(f.children()[0], traj);
      BoolSignal rhs = eval_bool(f.children()[1], traj);
      const WindowSteps w = window_steps(f.lower(), f.upper(), traj.dt, last);
      sig.valid_hi = windowed_valid_hi(w, std::min(lhs.valid_hi, rhs.valid_hi), last);
      for (int i = 0; i <= sig.valid_hi; ++i) {
        const long e = w.hi < 0 ? last : std::min<long>(i + w.hi, last);
        bool ok = false;
        bool lhs_holds = true;
        for (long j = i; j <= e && !ok; ++j) {
          lhs_holds = lhs_holds && lhs.values[j];
          if (j >= i + w.lo && rhs.values[j] && lhs_holds) ok = true;
        }
        sig.values[i] = ok;
      }
      return sig;
    }
  }
  throw std::logic_error("unreachable formula kind");
}

}  // namespace

bool satisfies(const Formula& formula, const Trajectory& traj, double t) {
  validate(traj);
  const int i = grid_index(traj, t);
  const BoolSignal sig = eval_bool(formula, traj);
  if (i > sig.valid_hi) throw std::runtime_error("window outside trajectory");
  return sig.values[i];
}

// ---------------------------------------------------------------------------
// Smooth robustness

SmoothEval smooth_robustness(const Formula& formula, const Vector& x) {
  switch (formula.kind()) {
    case Formula::Kind::True:
      return {kInf, Vector::Zero(x.size())};
    case Formula::Kind::Pred:
      return {formula.predicate().value(x), formula.predicate().gradient(x)};
    case Formula::Kind::Not: {
      SmoothEval child = smooth_robustness(formula.children().front(), x);
      return {-child.value, -child.gradient};
    }
    case Formula::Kind::And: {
      std::vector<SmoothEval> evals;
      evals.reserve(formula.children().size());
      double lowest = kInf;
      for (const Formula& c : formula.children()) {
        evals.push_back(smooth_robustness(c, x));
        lowest = std::min(lowest, evals.back().value);
      }
      if (std::isinf(lowest)) return {lowest, Vector::Zero(x.size())};
      // -ln(sum exp(-rho_i)) with the dominating term factored out.
      double total = 0.0;
      Vector grad = Vector::Zero(x.size());
      for (const SmoothEval& e : evals) {
        const double w = std::exp(lowest - e.value);
        total += w;
        if (w > 0.0) grad += w * e.gradient;
      }
      return {lowest - std::log(total), grad / total};
    }
    default:
      throw std::runtime_error("non-temporal fragment required");
  }
}

// ---------------------------------------------------------------------------
// Parser / printer

namespace {

class Parser {
 public:
  Parser(const std::string& text, const PredicateTable& table)
      : text_(text), table_(table) {}

  Formula parse() {
    Formula f = parse_until();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << "formula parse error at position " << pos_ << ": " << what;
    throw std::runtime_error(os.str());
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_operator(char op) {
    // G/F/U act as operators only when immediately followed by '['.
    skip_ws();
    return pos_ + 1 < text_.size() && text_[pos_] == op && text_[pos_ + 1] == '[';
  }

  double parse_number(bool allow_inf) {
    skip_ws();
    if (allow_inf && text_.compare(pos_, 3, "inf") == 0) {
      pos_ += 3;
      return kInf;
    }
    double value = 0.0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin) fail("expected a number");
    pos_ += static_cast<size_t>(ptr - begin);
    return value;
  }

  std::pair<double, double> parse_interval() {
    skip_ws();
    const size_t start = pos_;
    if (pos_ >= text_.size() || text_[pos_] != '[') fail("expected '['");
    ++pos_;
    const double a = parse_number(false);
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != ',') fail("expected ','");
    ++pos_;
    const double b = parse_number(true);
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != ']') fail("expected ']'");
    ++pos_;
    if (a < 0.0) {
      pos_ = start;
      fail("interval bounds must be nonnegative");
    }
    if (a > b) {
      pos_ = start;
      fail("interval requires a <= b");
    }
    return {a, b};
  }

  Formula parse_until() {
    Formula lhs = parse_conj();
    if (at_operator('U')) {
      ++pos_;
      auto [a, b] = parse_interval();
      Formula rhs = parse_until();
      return Formula::until(a, b, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Formula parse_conj() {
    std::vector<Formula> children;
    children.push_back(parse_unary());
    while (true) {
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '&') {
        ++pos_;
        children.push_back(parse_unary());
      } else {
        break;
      }
    }
    if (children.size() == 1) return std::move(children.front());
    return Formula::conjunction(std::move(children));
  }

  Formula parse_unary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (at_operator('G')) {
      ++pos_;
      auto [a, b] = parse_interval();
      return Formula::always(a, b, parse_unary());
    }
    if (at_operator('F')) {
      ++pos_;
      auto [a, b] = parse_interval();
      return Formula::eventually(a, b, parse_unary());
    }
    if (text_[pos_] == '!') {
      ++pos_;
      return Formula::negation(parse_unary());
    }
    return parse_atom();
  }

  Formula parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == '(') {
      ++pos_;
      Formula f = parse_until();
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
      ++pos_;
      return f;
    }
    if (!std::isalpha(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '_')
      fail("expected a predicate name, 'true', '(', '!', or a temporal operator");
    size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name = text_.substr(start, pos_ - start);
    if (name == "true") return Formula::top();
    auto it = table_.find(name);
    if (it == table_.end()) {
      pos_ = start;
      fail("unknown predicate '" + name + "'");
    }
    return Formula::pred(it->second);
  }

  const std::string& text_;
  const PredicateTable& table_;
  size_t pos_ = 0;
};

std::string format_number(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Precedence levels: atom/unary = 2, conjunction = 1, until = 0.
int precedence(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Until:
      return 0;
    case Formula::Kind::And:
      return 1;
    default:
      return 2;
  }
}

void print(const Formula& f, int min_prec, std::string& out) {
  const bool parens = precedence(f) < min_prec;
  if (parens) out += '(';
  switch (f.kind()) {
    case Formula::Kind::True:
      out += "true";
      break;
    case Formula::Kind::Pred:
      out += f.predicate().label;
      break;
    case Formula::Kind::Not:
      out += '!';
      print(f.children().front(), 2, out);
      break;
    case Formula::Kind::And:
      for (size_t i = 0; i < f.children().size(); ++i) {
        if (i) out += " & ";
        print(f.children()[i], 2, out);
      }
      break;
    case Formula::Kind::Eventually:
    case Formula::Kind::Always:
      out += f.kind() == Formula::Kind::Always ? 'G' : 'F';
      out += '[';
      out += format_number(f.lower());
      out += ',';
      out += format_number(f.upper());
      out += "] ";
      print(f.children().front(), 2, out);
      break;
    case Formula::Kind::Until:
      print(f.children()[0], 1, out);
      out += " U[";
      out += format_number(f.lower());
      out += ',';
      out += format_number(f.upper());
      out += "] ";
      print(f.children()[1], 0, out);
      break;
  }
  if (parens) out += ')';
}

}  // namespace

Formula parse_formula(const std::string& text, const PredicateTable& predicates) {
  return Parser(text, predicates).parse();
}

std::string format_formula(const Formula& formula) {
  std::string out;
  print(formula, 0, out);
  return out;
}

}  // namespace stlpi2

#include "stlpi2/io.hpp"

#include <json.hpp>

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stlpi2 {

using nlohmann::json;

namespace {

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_ + ": " + what); }

  Reader at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    auto it = j_->find(key);
    if (it == j_->end()) fail("missing field '" + key + "'");
    return Reader(*it, path_.empty() ? key : path_ + "." + key);
  }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Reader item(size_t i) const {
    return Reader((*j_)[i], path_ + "[" + std::to_string(i) + "]");
  }

  size_t length() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }

  int integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<int>();
  }

  std::uint64_t unsigned64() const {
    if (!j_->is_number_unsigned() && !j_->is_number_integer()) fail("expected an integer");
    return j_->get<std::uint64_t>();
  }

  bool boolean() const {
    if (!j_->is_boolean()) fail("expected a boolean");
    return j_->get<bool>();
  }

  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  Vector vector() const {
    if (!j_->is_array()) fail("expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j_->size()));
    for (size_t i = 0; i < j_->size(); ++i) v[static_cast<Eigen::Index>(i)] = item(i).number();
    return v;
  }

  std::vector<int> int_list() const {
    if (!j_->is_array()) fail("expected an array of integers");
    std::vector<int> out;
    out.reserve(j_->size());
    for (size_t i = 0; i < j_->size(); ++i) out.push_back(item(i).integer());
    return out;
  }

  /// A matrix given as rows, or a scalar c meaning c * identity(dim).
  Matrix matrix(int dim_if_scalar) const {
    if (j_->is_number())
      return j_->get<double>() * Matrix::Identity(dim_if_scalar, dim_if_scalar);
    if (!j_->is_array() || j_->empty()) fail("expected a matrix (array of rows) or a scalar");
    const size_t rows = j_->size();
    const size_t cols = (*j_)[0].size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t r = 0; r < rows; ++r) {
      Reader row = item(r);
      if (row.length() != cols) row.fail("ragged matrix rows");
      for (size_t c = 0; c < cols; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.item(c).number();
    }
    return m;
  }

  const json& raw() const { return *j_; }

 private:
  const json* j_;
  std::string path_;
};

json dynamics_to_json(const DynamicsSpec& dyn) {
  json j;
  j["n"] = dyn.n;
  j["m"] = dyn.m;
  j["drift"]["kind"] = dyn.drift.kind == DriftSpec::Kind::Zero ? "zero" : "linear";
  if (dyn.drift.kind == DriftSpec::Kind::Linear) j["drift"]["matrix"] = to_json(dyn.drift.matrix);
  j["input_map"]["kind"] =
      dyn.input_map.kind == InputMapSpec::Kind::Identity ? "identity" : "constant";
  if (dyn.input_map.kind == InputMapSpec::Kind::Constant)
    j["input_map"]["matrix"] = to_json(dyn.input_map.matrix);
  j["sigma_w"] = to_json(dyn.sigma_w);
  j["x0"] = to_json(dyn.x0);
  j["T"] = dyn.T;
  j["dt"] = dyn.dt;
  json constraints = json::array();
  for (const InputConstraint& c : dyn.input_constraints)
    constraints.push_back({{"indices", c.indices}, {"bound", c.bound}});
  j["input_constraints"] = std::move(constraints);
  return j;
}

DynamicsSpec dynamics_from_json(const Reader& r) {
  DynamicsSpec dyn;
  dyn.n = r.at("n").integer();
  dyn.m = r.at("m").integer();
  const Reader drift = r.at("drift");
  const std::string drift_kind = drift.at("kind").string();
  if (drift_kind == "zero") {
    dyn.drift.kind = DriftSpec::Kind::Zero;
  } else if (drift_kind == "linear") {
    dyn.drift.kind = DriftSpec::Kind::Linear;
    dyn.drift.matrix = drift.at("matrix").matrix(dyn.n);
  } else {
    drift.at("kind").fail("must be 'zero' or 'linear'");
  }
  const Reader gmap = r.at("input_map");
  const std::string gkind = gmap.at("kind").string();
  if (gkind == "identity") {
    dyn.input_map.kind = InputMapSpec::Kind::Identity;
  } else if (gkind == "constant") {
    dyn.input_map.kind = InputMapSpec::Kind::Constant;
    dyn.input_map.matrix = gmap.at("matrix").matrix(dyn.n);
  } else {
    gmap.at("kind").fail("must be 'identity' or 'constant'");
  }
  dyn.sigma_w = r.at("sigma_w").matrix(dyn.n);
  dyn.x0 = r.at("x0").vector();
  dyn.T = r.at("T").number();
  dyn.dt = r.at("dt").number();
  const Reader constraints = r.at("input_constraints");
  for (size_t i = 0; i < constraints.length(); ++i) {
    const Reader c = constraints.item(i);
    dyn.input_constraints.push_back({c.at("indices").int_list(), c.at("bound").number()});
  }
  return dyn;
}

const char* predicate_kind_name(PredicateSpec::Kind kind) {
  switch (kind) {
    case PredicateSpec::Kind::BallInside: return "ball-inside";
    case PredicateSpec::Kind::BallOutside: return "ball-outside";
    case PredicateSpec::Kind::PairDistanceMax: return "pair-distance-max";
    case PredicateSpec::Kind::PairDistanceMin: return "pair-distance-min";
    case PredicateSpec::Kind::MidpointBall: return "midpoint-ball";
  }
  return "?";
}

json predicate_to_json(const PredicateSpec& p) {
  json j;
  j["name"] = p.name;
  j["kind"] = predicate_kind_name(p.kind);
  switch (p.kind) {
    case PredicateSpec::Kind::BallInside:
    case PredicateSpec::Kind::BallOutside:
      j["center"] = to_json(p.center);
      j["radius"] = p.radius;
      j["indices"] = p.indices;
      break;
    case PredicateSpec::Kind::PairDistanceMax:
    case PredicateSpec::Kind::PairDistanceMin:
      j["distance"] = p.distance;
      j["first"] = p.first;
      j["second"] = p.second;
      break;
    case PredicateSpec::Kind::MidpointBall:
      j["radius"] = p.radius;
      j["first"] = p.first;
      j["second"] = p.second;
      j["target"] = p.target;
      break;
  }
  return j;
}

PredicateSpec predicate_from_json(const Reader& r) {
  PredicateSpec p;
  p.name = r.at("name").string();
  const std::string kind = r.at("kind").string();
  if (kind == "ball-inside" || kind == "ball-outside") {
    p.kind = kind == "ball-inside" ? PredicateSpec::Kind::BallInside
                                   : PredicateSpec::Kind::BallOutside;
    p.center = r.at("center").vector();
    p.radius = r.at("radius").number();
    p.indices = r.at("indices").int_list();
  } else if (kind == "pair-distance-max" || kind == "pair-distance-min") {
    p.kind = kind == "pair-distance-max" ? PredicateSpec::Kind::PairDistanceMax
                                         : PredicateSpec::Kind::PairDistanceMin;
    p.distance = r.at("distance").number();
    p.first = r.at("first").int_list();
    p.second = r.at("second").int_list();
  } else if (kind == "midpoint-ball") {
    p.kind = PredicateSpec::Kind::MidpointBall;
    p.radius = r.at("radius").number();
    p.first = r.at("first").int_list();
    p.second = r.at("second").int_list();
    p.target = r.at("target").int_list();
  } else {
    r.at("kind").fail("unknown predicate kind '" + kind + "'");
  }
  return p;
}

json config_to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["dynamics"] = dynamics_to_json(cfg.dynamics);
  json preds = json::array();
  for (const PredicateSpec& p : cfg.predicates) preds.push_back(predicate_to_json(p));
  j["predicates"] = std::move(preds);
  j["formula"] = cfg.formula;
  json subtasks = json::array();
  for (const SubtaskSpec& s : cfg.subtasks) {
    json sj;
    sj["funnel"] = {{"rho_max", s.funnel.rho_max},
                    {"gamma0", s.funnel.gamma0},
                    {"gamma_inf", s.funnel.gamma_inf},
                    {"t_c", s.funnel.t_c}};
    sj["transform"] = {{"beta", s.beta}, {"B", s.B}, {"xi_c", s.xi_c}};
    if (s.weight) sj["weight"] = *s.weight;
    subtasks.push_back(std::move(sj));
  }
  j["subtasks"] = std::move(subtasks);
  switch (cfg.base_law.kind) {
    case BaseLawSpec::Kind::Ppc: j["base_law"]["kind"] = "ppc"; break;
    case BaseLawSpec::Kind::Linear: j["base_law"]["kind"] = "lin"; break;
    case BaseLawSpec::Kind::Zero: j["base_law"]["kind"] = "zero"; break;
  }
  if (cfg.base_law.gain) j["base_law"]["gain"] = to_json(*cfg.base_law.gain);
  if (cfg.cost.kind == CostSpec::Kind::TimeToReach) {
    j["cost"] = {{"kind", "time-to-reach"},
                 {"formula", cfg.cost.formula},
                 {"rho_min", cfg.cost.rho_min}};
  } else {
    j["cost"] = {{"kind", "input-energy"}};
  }
  j["rho_min"] = cfg.rho_min;
  j["pi2"] = {{"iterations", cfg.pi2.iterations},
              {"samples", cfg.pi2.samples},
              {"eta", cfg.pi2.eta},
              {"h", cfg.pi2.h},
              {"eliteness_percentile", cfg.pi2.eliteness_percentile},
              {"c0", to_json(cfg.pi2.c0)},
              {"cmin", to_json(cfg.pi2.cmin)},
              {"nesterov", cfg.pi2.nesterov},
              {"sample_from_initial_cov", cfg.pi2.sample_from_initial_cov},
              {"master_seed", cfg.pi2.master_seed}};
  j["penalty"] = {{"lambda0", cfg.penalty.lambda0},
                  {"lambdaK", cfg.penalty.lambdaK},
                  {"spacing",
                   cfg.penalty.spacing == PenaltySchedule::Spacing::Linear ? "linear"
                                                                           : "logarithmic"}};
  return j;
}

ScenarioConfig config_from_json(const Reader& r) {
  ScenarioConfig cfg;
  cfg.name = r.at("name").string();
  cfg.dynamics = dynamics_from_json(r.at("dynamics"));
  const Reader preds = r.at("predicates");
  for (size_t i = 0; i < preds.length(); ++i)
    cfg.predicates.push_back(predicate_from_json(preds.item(i)));
  cfg.formula = r.at("formula").string();
  const Reader subtasks = r.at("subtasks");
  for (size_t i = 0; i < subtasks.length(); ++i) {
    const Reader s = subtasks.item(i);
    SubtaskSpec spec;
    const Reader funnel = s.at("funnel");
    spec.funnel.rho_max = funnel.at("rho_max").number();
    spec.funnel.gamma0 = funnel.at("gamma0").number();
    spec.funnel.gamma_inf = funnel.at("gamma_inf").number();
    spec.funnel.t_c = funnel.at("t_c").number();
    const Reader transform = s.at("transform");
    spec.beta = transform.at("beta").number();
    spec.B = transform.at("B").number();
    spec.xi_c = transform.at("xi_c").number();
    if (s.has("weight")) spec.weight = s.at("weight").number();
    cfg.subtasks.push_back(spec);
  }
  const Reader base = r.at("base_law");
  const std::string base_kind = base.at("kind").string();
  if (base_kind == "ppc") {
    cfg.base_law.kind = BaseLawSpec::Kind::Ppc;
  } else if (base_kind == "lin") {
    cfg.base_law.kind = BaseLawSpec::Kind::Linear;
  } else if (base_kind == "zero") {
    cfg.base_law.kind = BaseLawSpec::Kind::Zero;
  } else {
    base.at("kind").fail("must be 'ppc', 'lin', or 'zero'");
  }
  if (base.has("gain")) cfg.base_law.gain = base.at("gain").matrix(cfg.dynamics.n);
  const Reader cost = r.at("cost");
  const std::string cost_kind = cost.at("kind").string();
  if (cost_kind == "time-to-reach") {
    cfg.cost.kind = CostSpec::Kind::TimeToReach;
    cfg.cost.formula = cost.at("formula").string();
    cfg.cost.rho_min = cost.at("rho_min").number();
  } else if (cost_kind == "input-energy") {
    cfg.cost.kind = CostSpec::Kind::InputEnergy;
  } else {
    cost.at("kind").fail("must be 'time-to-reach' or 'input-energy'");
  }
  cfg.rho_min = r.at("rho_min").number();
  const Reader pi2 = r.at("pi2");
  cfg.pi2.iterations = pi2.at("iterations").integer();
  cfg.pi2.samples = pi2.at("samples").integer();
  cfg.pi2.eta = pi2.at("eta").number();
  cfg.pi2.h = pi2.at("h").number();
  cfg.pi2.eliteness_percentile = pi2.at("eliteness_percentile").number();
  cfg.pi2.c0 = pi2.at("c0").matrix(cfg.dynamics.m);
  cfg.pi2.cmin = pi2.at("cmin").matrix(cfg.dynamics.m);
  cfg.pi2.nesterov = pi2.at("nesterov").boolean();
  if (pi2.has("sample_from_initial_cov"))
    cfg.pi2.sample_from_initial_cov = pi2.at("sample_from_initial_cov").boolean();
  cfg.pi2.master_seed = pi2.at("master_seed").unsigned64();
  const Reader penalty = r.at("penalty");
  cfg.penalty.lambda0 = penalty.at("lambda0").number();
  cfg.penalty.lambdaK = penalty.at("lambdaK").number();
  const std::string spacing = penalty.at("spacing").string();
  if (spacing == "linear") {
    cfg.penalty.spacing = PenaltySchedule::Spacing::Linear;
  } else if (spacing == "logarithmic") {
    cfg.penalty.spacing = PenaltySchedule::Spacing::Logarithmic;
  } else {
    penalty.at("spacing").fail("must be 'linear' or 'logarithmic'");
  }
  cfg.penalty.rho_min = cfg.rho_min;
  return cfg;
}

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace

std::string scenario_to_json(const ScenarioConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

ScenarioConfig scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(Reader(j, ""));
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  const json j = parse_file(path);
  if (j.contains("scenario")) return config_from_json(Reader(j.at("scenario"), "scenario"));
  return config_from_json(Reader(j, ""));
}

void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << scenario_to_json(config);
}

bool is_manifest_file(const std::filesystem::path& path) {
  return parse_file(path).contains("scenario");
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  json j;
  j["scenario"] = config_to_json(manifest.scenario);
  j["seed"] = manifest.seed;
  j["results"] = {{"final_cost", manifest.final_cost},
                  {"final_robustness", manifest.final_robustness},
                  {"iterations_run", manifest.iterations_run}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

Manifest read_manifest(const std::filesystem::path& path) {
  const json j = parse_file(path);
  const Reader r(j, "");
  Manifest manifest;
  manifest.scenario = config_from_json(r.at("scenario"));
  manifest.seed = r.at("seed").unsigned64();
  const Reader results = r.at("results");
  manifest.final_cost = results.at("final_cost").number();
  manifest.final_robustness = results.at("final_robustness").number();
  manifest.iterations_run = results.at("iterations_run").integer();
  return manifest;
}

// ---------------------------------------------------------------------------
// Trajectory table

namespace {

std::string round_trip(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<size_t>(len));
}

}  // namespace

void write_trajectory_csv(const Scenario& scenario, const Trajectory& traj,
                          const std::filesystem::path& path) {
  validate(traj);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");

  const int n = static_cast<int>(traj.states.front().size());
  const int m = traj.inputs.empty() ? scenario.model.m
                                    : static_cast<int>(traj.inputs.front().size());
  out << "t";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  for (int i = 0; i < m; ++i) out << ",u" << i;
  for (size_t s = 0; s < scenario.subtask_psi.size(); ++s) out << ",rho_psi" << s + 1;
  for (size_t s = 0; s < scenario.funnels.size(); ++s) out << ",gamma" << s + 1;
  out << "\n";

  std::vector<RobustnessSignal> signals;
  signals.reserve(scenario.subtask_psi.size());
  for (const Formula& psi : scenario.subtask_psi)
    signals.push_back(robustness_signal(psi, traj));

  for (int i = 0; i <= traj.steps(); ++i) {
    const double t = traj.time_at(i);
    out << round_trip(t);
    for (int d = 0; d < n; ++d) out << ',' << round_trip(traj.states[i][d]);
    for (int d = 0; d < m; ++d)
      out << ',' << round_trip(i < traj.steps() ? traj.inputs[i][d] : 0.0);
    for (const RobustnessSignal& sig : signals) out << ',' << round_trip(sig.values[i]);
    for (const Funnel& funnel : scenario.funnels)
      out << ',' << round_trip(funnel.gamma(t - traj.t0));
    out << "\n";
  }
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trajectory file");

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  int t_col = -1;
  std::vector<int> x_cols, u_cols;
  for (size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "t") t_col = static_cast<int>(c);
    else if (header[c].rfind('x', 0) == 0 && header[c].size() > 1 &&
             std::isdigit(static_cast<unsigned char>(header[c][1])))
      x_cols.push_back(static_cast<int>(c));
    else if (header[c].rfind('u', 0) == 0 && header[c].size() > 1 &&
             std::isdigit(static_cast<unsigned char>(header[c][1])))
      u_cols.push_back(static_cast<int>(c));
  }
  if (t_col < 0 || x_cols.empty())
    throw std::runtime_error("trajectory file needs t and x* columns");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc()) throw std::runtime_error("bad number in trajectory file: " + cell);
      row.push_back(v);
    }
    if (row.size() != header.size())
      throw std::runtime_error("trajectory row width does not match the header");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw std::runtime_error("trajectory file needs at least two rows");

  Trajectory traj;
  traj.t0 = rows.front()[static_cast<size_t>(t_col)];
  traj.dt = rows[1][static_cast<size_t>(t_col)] - traj.t0;
  for (size_t r = 0; r < rows.size(); ++r) {
    Vector x(static_cast<Eigen::Index>(x_cols.size()));
    for (size_t d = 0; d < x_cols.size(); ++d)
      x[static_cast<Eigen::Index>(d)] = rows[r][static_cast<size_t>(x_cols[d])];
    traj.states.push_back(std::move(x));
    if (r + 1 < rows.size()) {
      Vector u(static_cast<Eigen::Index>(u_cols.size()));
      for (size_t d = 0; d < u_cols.size(); ++d)
        u[static_cast<Eigen::Index>(d)] = rows[r][static_cast<size_t>(u_cols[d])];
      traj.inputs.push_back(std::move(u));
    }
  }
  validate(traj);
  return traj;
}

// ---------------------------------------------------------------------------
// History records

void write_history_jsonl(const std::vector<IterationRecord>& history,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (const IterationRecord& rec : history) {
    json j = {{"k", rec.k},
              {"lambda", rec.lambda},
              {"min_objective", rec.min_objective},
              {"mean_objective", rec.mean_objective},
              {"cost", rec.cost},
              {"robustness", rec.robustness}};
    out << j.dump() << "\n";
  }
}

std::vector<IterationRecord> read_history_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<IterationRecord> history;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    history.push_back({j.at("k").get<int>(), j.at("lambda").get<double>(),
                       j.at("min_objective").get<double>(),
                       j.at("mean_objective").get<double>(), j.at("cost").get<double>(),
                       j.at("robustness").get<double>()});
  }
  return history;
}

}  // namespace stlpi2

#include "stlpi2/experiments.hpp"

#include "stlpi2/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace stlpi2 {

ScenarioConfig apply_overrides(ScenarioConfig config, const RunOverrides& overrides) {
  if (overrides.seed) config.pi2.master_seed = *overrides.seed;
  if (overrides.iterations) config.pi2.iterations = *overrides.iterations;
  if (overrides.samples) config.pi2.samples = *overrides.samples;
  if (overrides.nesterov) config.pi2.nesterov = *overrides.nesterov;
  if (overrides.base) config.base_law.kind = *overrides.base;
  if (overrides.c0_scale) config.pi2.c0 *= *overrides.c0_scale;
  return config;
}

ScenarioConfig resolve_scenario(const std::string& ref) {
  const auto names = builtin_scenario_names();
  if (std::find(names.begin(), names.end(), ref) != names.end())
    return builtin_scenario(ref);
  if (!std::filesystem::exists(ref))
    throw ConfigError("'" + ref + "' is neither a builtin scenario nor a file");
  if (is_manifest_file(ref)) {
    Manifest manifest = read_manifest(ref);
    manifest.scenario.pi2.master_seed = manifest.seed;
    return manifest.scenario;
  }
  return load_scenario(ref);
}

RunOutput run_scenario(const Scenario& scenario, int threads) {
  RunOutput output;
  output.result = run(scenario.config.pi2, make_problem(scenario), threads);
  output.manifest.scenario = scenario.config;
  output.manifest.seed = scenario.config.pi2.master_seed;
  output.manifest.final_cost = output.result.final_cost;
  output.manifest.final_robustness = output.result.final_robustness;
  output.manifest.iterations_run = scenario.config.pi2.iterations;
  return output;
}

void write_run_outputs(const Scenario& scenario, const RunOutput& output,
                       const std::filesystem::path& dir, bool plots) {
  std::filesystem::create_directories(dir);
  write_history_jsonl(output.result.history, dir / "history.jsonl");
  write_trajectory_csv(scenario, output.result.final_trajectory, dir / "trajectory.csv");
  write_manifest(output.manifest, dir / "manifest.json");
  if (plots) {
    const std::filesystem::path plot_dir = dir / "plots";
    std::filesystem::create_directories(plot_dir);
    write_trajectory_svg(scenario, output.result.final_trajectory,
                         plot_dir / "trajectory.svg");
    write_funnel_svg(scenario, output.result.final_trajectory, plot_dir / "funnels.svg");
    write_convergence_svg(output.result.history, plot_dir / "convergence.svg");
  }
}

int iterations_to_satisfaction(double initial_robustness,
                               const std::vector<IterationRecord>& history, double rho_min) {
  if (initial_robustness >= rho_min) return 0;
  for (const IterationRecord& rec : history)
    if (rec.robustness >= rho_min) return rec.k;
  return history.empty() ? 1 : history.back().k + 1;
}

namespace {

const char* base_kind_name(BaseLawSpec::Kind kind) {
  switch (kind) {
    case BaseLawSpec::Kind::Ppc: return "ppc";
    case BaseLawSpec::Kind::Linear: return "lin";
    case BaseLawSpec::Kind::Zero: return "zero";
  }
  return "?";
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  }
  return m;
}

}  // namespace

std::vector<VariantResult> compare_variants(const ScenarioConfig& config,
                                            const CompareOptions& options) {
  if (options.repeats < 1) throw std::invalid_argument("compare: repeats must be >= 1");
  std::vector<BaseLawSpec::Kind> bases = options.bases;
  if (bases.empty()) bases = {BaseLawSpec::Kind::Ppc, BaseLawSpec::Kind::Linear};
  std::vector<bool> nesterovs = options.nesterov_settings;
  if (nesterovs.empty()) nesterovs = {config.pi2.nesterov};
  std::vector<int> sample_counts = options.sample_counts;
  if (sample_counts.empty()) sample_counts = {config.pi2.samples};
  std::vector<double> cmins = options.cmin_values;
  if (cmins.empty()) cmins = {-1.0};  // sentinel: keep the config value

  struct Variant {
    std::string label;
    ScenarioConfig config;
  };
  std::vector<Variant> variants;
  for (BaseLawSpec::Kind base : bases)
    for (bool nesterov : nesterovs)
      for (int samples : sample_counts)
        for (double cmin : cmins) {
          ScenarioConfig vc = config;
          vc.base_law.kind = base;
          vc.pi2.nesterov = nesterov;
          vc.pi2.samples = samples;
          if (cmin >= 0.0)
            vc.pi2.cmin = cmin * Matrix::Identity(vc.dynamics.m, vc.dynamics.m);
          std::ostringstream label;
          label << base_kind_name(base) << "-N" << samples;
          if (cmin >= 0.0) label << "-cmin" << cmin;
          if (nesterovs.size() > 1) label << (nesterov ? "-nesterov" : "-plain");
          variants.push_back({label.str(), std::move(vc)});
        }

  struct RepeatOutcome {
    double initial_cost = 0.0;
    double initial_robustness = 0.0;
    std::vector<IterationRecord> history;
    std::vector<double> eval_costs;
    std::vector<double> eval_rhos;
  };
  const int total_jobs = static_cast<int>(variants.size()) * options.repeats;
  std::vector<RepeatOutcome> outcomes(static_cast<size_t>(total_jobs));

  parallel_for(total_jobs, options.threads, [&](int job) {
    const int v = job / options.repeats;
    const int r = job % options.repeats;
    ScenarioConfig vc = variants[static_cast<size_t>(v)].config;
    vc.pi2.master_seed = options.base_seed + static_cast<std::uint64_t>(r);
    const Scenario scenario = compile(vc);
    const Pi2Problem problem = make_problem(scenario);
    const RunResult result = run(vc.pi2, problem, 1);

    RepeatOutcome& outcome = outcomes[static_cast<size_t>(job)];
    outcome.history = result.history;

    // Iterate 0: the rollout of the unoptimized policy.
    const Policy initial_policy{
        scenario.base,
        std::vector<Vector>(static_cast<size_t>(problem.steps()), Vector::Zero(scenario.model.m))};
    const Trajectory initial_traj =
        simulate(problem.model, initial_policy, problem.x0, problem.T, problem.dt,
                 derive_seed(vc.pi2.master_seed, 0, static_cast<std::uint64_t>(vc.pi2.samples), 1));
    const auto [initial_cost, initial_rho] = problem.evaluate(initial_traj);
    outcome.initial_cost = initial_cost;
    outcome.initial_robustness = initial_rho;
    outcome.eval_costs.reserve(static_cast<size_t>(options.eval_rollouts));
    for (int j = 0; j < options.eval_rollouts; ++j) {
      const Trajectory traj = simulate(
          problem.model, result.policy, problem.x0, problem.T, problem.dt,
          derive_seed(vc.pi2.master_seed, static_cast<std::uint64_t>(vc.pi2.iterations + 1),
                      static_cast<std::uint64_t>(j), 2));
      const auto [cost, rho] = problem.evaluate(traj);
      outcome.eval_costs.push_back(cost);
      outcome.eval_rhos.push_back(rho);
    }
  });

  std::vector<VariantResult> results;
  results.reserve(variants.size());
  for (size_t v = 0; v < variants.size(); ++v) {
    VariantResult res;
    res.label = variants[v].label;
    const int iters = variants[v].config.pi2.iterations;
    res.mean_cost_by_iteration.assign(static_cast<size_t>(iters) + 1, 0.0);
    res.mean_robustness_by_iteration.assign(static_cast<size_t>(iters) + 1, 0.0);
    std::vector<double> eval_costs, eval_rhos;
    double iter_sum = 0.0;
    for (int r = 0; r < options.repeats; ++r) {
      const RepeatOutcome& outcome =
          outcomes[v * static_cast<size_t>(options.repeats) + static_cast<size_t>(r)];
      res.mean_cost_by_iteration[0] += outcome.initial_cost;
      res.mean_robustness_by_iteration[0] += outcome.initial_robustness;
      for (const IterationRecord& rec : outcome.history) {
        res.mean_cost_by_iteration[static_cast<size_t>(rec.k)] += rec.cost;
        res.mean_robustness_by_iteration[static_cast<size_t>(rec.k)] += rec.robustness;
      }
      iter_sum += iterations_to_satisfaction(outcome.initial_robustness, outcome.history,
                                             config.rho_min);
      eval_costs.insert(eval_costs.end(), outcome.eval_costs.begin(), outcome.eval_costs.end());
      eval_rhos.insert(eval_rhos.end(), outcome.eval_rhos.begin(), outcome.eval_rhos.end());
    }
    for (double& c : res.mean_cost_by_iteration) c /= options.repeats;
    for (double& c : res.mean_robustness_by_iteration) c /= options.repeats;
    res.mean_iterations_to_satisfaction = iter_sum / options.repeats;
    const Moments cm = moments(eval_costs);
    const Moments rm = moments(eval_rhos);
    res.eval_cost_mean = cm.mean;
    res.eval_cost_std = cm.stddev;
    res.eval_robustness_mean = rm.mean;
    res.eval_robustness_std = rm.stddev;
    results.push_back(std::move(res));
  }
  return results;
}

void write_compare_csv(const std::vector<VariantResult>& results,
                       const std::filesystem::path& convergence_path,
                       const std::filesystem::path& summary_path) {
  {
    std::ofstream out(convergence_path);
    if (!out) throw std::runtime_error("cannot write '" + convergence_path.string() + "'");
    out << "variant,k,mean_cost,mean_robustness\n";
    for (const VariantResult& res : results)
      for (size_t k = 0; k < res.mean_cost_by_iteration.size(); ++k)
        out << res.label << ',' << k << ',' << res.mean_cost_by_iteration[k] << ','
            << res.mean_robustness_by_iteration[k] << "\n";
  }
  {
    std::ofstream out(summary_path);
    if (!out) throw std::runtime_error("cannot write '" + summary_path.string() + "'");
    out << "variant,mean_iterations_to_satisfaction,eval_cost_mean,eval_cost_std,"
           "eval_robustness_mean,eval_robustness_std\n";
    for (const VariantResult& res : results)
      out << res.label << ',' << res.mean_iterations_to_satisfaction << ','
          << res.eval_cost_mean << ',' << res.eval_cost_std << ','
          << res.eval_robustness_mean << ',' << res.eval_robustness_std << "\n";
  }
}

}  // namespace stlpi2

#include "stlpi2/experiments.hpp"
#include "stlpi2/plots.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>

namespace {

using namespace stlpi2;

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("STLPI2_OUT")) return env;
  return "runs";
}

BaseLawSpec::Kind parse_base_kind(const std::string& name) {
  if (name == "ppc") return BaseLawSpec::Kind::Ppc;
  if (name == "lin") return BaseLawSpec::Kind::Linear;
  if (name == "zero") return BaseLawSpec::Kind::Zero;
  throw ConfigError("--base must be one of ppc, lin, zero");
}

struct CommonFlags {
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int iterations = -1;
  int samples = -1;
  bool no_nesterov = false;
  std::string base;
  double c0_scale = 0.0;
  int threads = 0;
  bool plots = false;
};

void add_override_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--scenario", flags.scenario,
                  "Builtin name (nav-simple, nav-simple-noisy, consensus-complex), "
                  "scenario file, or manifest file")
      ->required();
  cmd->add_option("--seed", flags.seed, "Master seed")->each([&](const std::string&) {
    flags.seed_set = true;
  });
  cmd->add_option("--iterations", flags.iterations, "Override iteration count K");
  cmd->add_option("--samples", flags.samples, "Override rollout count N per iteration");
  cmd->add_flag("--no-nesterov", flags.no_nesterov, "Disable the momentum update");
  cmd->add_option("--base", flags.base, "Base law: ppc, lin, or zero");
  cmd->add_option("--c0-scale", flags.c0_scale, "Scale the initial sampling covariance");
  cmd->add_option("--threads", flags.threads, "Worker threads (0 = hardware)");
}

RunOverrides to_overrides(const CommonFlags& flags) {
  RunOverrides ov;
  if (flags.seed_set) ov.seed = flags.seed;
  if (flags.iterations >= 0) ov.iterations = flags.iterations;
  if (flags.samples > 0) ov.samples = flags.samples;
  if (flags.no_nesterov) ov.nesterov = false;
  if (!flags.base.empty()) ov.base = parse_base_kind(flags.base);
  if (flags.c0_scale > 0.0) ov.c0_scale = flags.c0_scale;
  return ov;
}

int cmd_run(const CommonFlags& flags) {
  ScenarioConfig config = apply_overrides(resolve_scenario(flags.scenario), to_overrides(flags));
  const Scenario scenario = compile(config);
  const RunOutput output = run_scenario(scenario, flags.threads);

  std::filesystem::path dir = flags.out.empty()
                                  ? default_out_dir() / (config.name + "-seed" +
                                                         std::to_string(config.pi2.master_seed))
                                  : std::filesystem::path(flags.out);
  write_run_outputs(scenario, output, dir, flags.plots);

  std::cout << "scenario=" << config.name << " seed=" << config.pi2.master_seed
            << " iterations=" << config.pi2.iterations
            << " final_cost=" << output.result.final_cost
            << " final_robustness=" << output.result.final_robustness << "\n"
            << "outputs written to " << dir.string() << "\n";
  return 0;
}

int cmd_compare(const CommonFlags& flags, int repeats, int eval_rollouts,
                const std::string& variants, const std::vector<int>& sweep_samples,
                const std::vector<double>& sweep_cmin, bool sweep_nesterov) {
  ScenarioConfig config = apply_overrides(resolve_scenario(flags.scenario), to_overrides(flags));

  CompareOptions options;
  options.repeats = repeats;
  options.eval_rollouts = eval_rollouts;
  options.base_seed = flags.seed_set ? flags.seed : config.pi2.master_seed;
  options.threads = flags.threads;
  if (!variants.empty()) {
    std::stringstream ss(variants);
    std::string item;
    while (std::getline(ss, item, ',')) options.bases.push_back(parse_base_kind(item));
  }
  options.sample_counts = sweep_samples;
  options.cmin_values = sweep_cmin;
  if (sweep_nesterov) options.nesterov_settings = {true, false};

  const std::vector<VariantResult> results = compare_variants(config, options);

  std::filesystem::path dir = flags.out.empty()
                                  ? default_out_dir() / ("compare-" + config.name)
                                  : std::filesystem::path(flags.out);
  std::filesystem::create_directories(dir);
  write_compare_csv(results, dir / "convergence.csv", dir / "summary.csv");

  std::cout << "variant  iters-to-sat  eval C (mean+-std)  eval rho (mean+-std)\n";
  for (const VariantResult& res : results)
    std::cout << res.label << "  " << res.mean_iterations_to_satisfaction << "  "
              << res.eval_cost_mean << "+-" << res.eval_cost_std << "  "
              << res.eval_robustness_mean << "+-" << res.eval_robustness_std << "\n";
  std::cout << "outputs written to " << dir.string() << "\n";
  return 0;
}

int cmd_monitor(const std::string& scenario_ref, const std::string& formula_text,
                const std::string& trajectory_file, double at_time) {
  const Scenario scenario = compile(resolve_scenario(scenario_ref));
  Formula formula;
  try {
    formula = parse_formula(formula_text, scenario.predicates);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());  // malformed input, not a runtime failure
  }
  const Trajectory traj = read_trajectory_csv(trajectory_file);

  // Robustness of the formula and every sub-formula, outermost first.
  struct Entry {
    int depth;
    Formula formula;
  };
  std::vector<Entry> entries;
  std::function<void(const Formula&, int)> walk = [&](const Formula& f, int depth) {
    entries.push_back({depth, f});
    for (const Formula& child : f.children()) walk(child, depth + 1);
  };
  walk(formula, 0);

  std::cout << std::setprecision(17);
  for (const Entry& entry : entries) {
    std::string text = format_formula(entry.formula);
    std::cout << std::string(static_cast<size_t>(entry.depth) * 2, ' ');
    try {
      std::cout << "rho = " << robustness(entry.formula, traj, traj.t0 + at_time);
    } catch (const std::exception& e) {
      std::cout << "rho = (" << e.what() << ")";
    }
    std::cout << "   " << text << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy search for STL tasks: funnel-guided PI2 experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "Optimize one scenario and write outputs");
  add_override_flags(run_cmd, run_flags);
  run_cmd->add_option("--out", run_flags.out, "Output directory");
  run_cmd->add_flag("--plots", run_flags.plots, "Also write SVG plots");

  CommonFlags cmp_flags;
  int repeats = 1;
  int eval_rollouts = 30;
  std::string variants;
  std::vector<int> sweep_samples;
  std::vector<double> sweep_cmin;
  bool sweep_nesterov = false;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "Run base-law/hyperparameter studies");
  add_override_flags(cmp_cmd, cmp_flags);
  cmp_cmd->add_option("--out", cmp_flags.out, "Output directory");
  cmp_cmd->add_option("--repeats", repeats, "Randomized repeats per variant");
  cmp_cmd->add_option("--eval-rollouts", eval_rollouts,
                      "Evaluation rollouts of each final policy");
  cmp_cmd->add_option("--variants", variants, "Comma-separated base laws (default ppc,lin)");
  cmp_cmd->add_option("--sweep-samples", sweep_samples, "Sample counts to sweep");
  cmp_cmd->add_option("--sweep-cmin", sweep_cmin, "Covariance floor diagonals to sweep");
  cmp_cmd->add_flag("--sweep-nesterov", sweep_nesterov, "Compare momentum on and off");

  std::string mon_scenario, mon_formula, mon_trajectory;
  double mon_time = 0.0;
  CLI::App* mon_cmd = app.add_subcommand("monitor", "Evaluate a formula over a trajectory file");
  mon_cmd->add_option("--scenario", mon_scenario, "Scenario providing the predicate table")
      ->required();
  mon_cmd->add_option("--formula", mon_formula, "Formula text")->required();
  mon_cmd->add_option("--trajectory", mon_trajectory, "Trajectory CSV file")->required();
  mon_cmd->add_option("--time", mon_time, "Evaluation time offset (default 0)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_flags);
    if (cmp_cmd->parsed())
      return cmd_compare(cmp_flags, repeats, eval_rollouts, variants, sweep_samples,
                         sweep_cmin, sweep_nesterov);
    if (mon_cmd->parsed()) return cmd_monitor(mon_scenario, mon_formula, mon_trajectory, mon_time);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

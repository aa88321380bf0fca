#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stlpi2/io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace stlpi2;

namespace {

std::filesystem::path work_dir() {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("stlpi2-cli-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

struct CommandResult {
  int exit_code;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  const auto out_file = work_dir() / "cli-output.txt";
  const std::string command =
      std::string(STLPI2_BIN) + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(command.c_str());
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(status), ss.str()};
}

}  // namespace

TEST_CASE("run writes outputs and reports the final measurements") {
  const auto dir = work_dir() / "run-nav";
  const CommandResult res = run_cli(
      "run --scenario nav-simple --seed 7 --iterations 3 --samples 20 --out " + dir.string());
  CAPTURE(res.output);
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("final_cost=") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "history.jsonl"));
  CHECK(std::filesystem::exists(dir / "trajectory.csv"));
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK_FALSE(std::filesystem::exists(dir / "plots"));  // only with --plots

  const Manifest manifest = read_manifest(dir / "manifest.json");
  CHECK(manifest.seed == 7);
  CHECK(manifest.scenario.pi2.iterations == 3);
  CHECK(manifest.scenario.pi2.samples == 20);

  // The emitted trajectory re-parsed through monitor agrees with the
  // manifest's robustness.
  const CommandResult mon = run_cli(
      "monitor --scenario nav-simple --formula \"F[0,10] goal & G[0,inf] avoid\" "
      "--trajectory " + (dir / "trajectory.csv").string());
  CAPTURE(mon.output);
  CHECK(mon.exit_code == 0);
  std::istringstream first_line(mon.output.substr(mon.output.find("rho = ") + 6));
  double reported = 0.0;
  first_line >> reported;
  CHECK(std::abs(reported - manifest.final_robustness) < 1e-9);
}

TEST_CASE("monitor evaluates formulas over trajectory files") {
  const auto dir = work_dir();
  // A constant trajectory parked at the goal center.
  {
    std::ofstream out(dir / "parked.csv");
    out << "t,x0,x1,u0,u1\n";
    for (int i = 0; i <= 200; ++i)
      out << i * 0.05 << ",1.0,3.5,0,0\n";
  }
  const CommandResult res = run_cli(
      "monitor --scenario nav-simple --formula \"F[0,10] goal\" --trajectory " +
      (dir / "parked.csv").string());
  CAPTURE(res.output);
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("rho = 0.2") != std::string::npos);

  // A straight line through the obstacle violates the avoidance part.
  {
    std::ofstream out(dir / "through.csv");
    out << "t,x0,x1,u0,u1\n";
    for (int i = 0; i <= 200; ++i) {
      const double s = i / 200.0;
      out << i * 0.05 << ',' << 3.0 + (1.0 - 3.0) * s << ',' << 0.3 + (3.5 - 0.3) * s
          << ",0,0\n";
    }
  }
  const CommandResult res2 = run_cli(
      "monitor --scenario nav-simple --formula \"G[0,inf] avoid\" --trajectory " +
      (dir / "through.csv").string());
  CAPTURE(res2.output);
  CHECK(res2.exit_code == 0);
  std::istringstream value(res2.output.substr(res2.output.find("rho = ") + 6));
  double rho = 0.0;
  value >> rho;
  CHECK(rho < 0.0);
}

TEST_CASE("compare emits convergence and summary tables") {
  const auto dir = work_dir() / "cmp";
  const CommandResult res = run_cli(
      "compare --scenario nav-simple --repeats 2 --eval-rollouts 2 --iterations 2 "
      "--samples 10 --out " + dir.string());
  CAPTURE(res.output);
  CHECK(res.exit_code == 0);
  CHECK(std::filesystem::exists(dir / "convergence.csv"));
  CHECK(std::filesystem::exists(dir / "summary.csv"));
  std::ifstream summary(dir / "summary.csv");
  std::string line;
  std::getline(summary, line);
  CHECK(line.find("variant") == 0);
  int rows = 0;
  while (std::getline(summary, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);  // ppc and lin
}

TEST_CASE("exit codes distinguish validation from runtime failures") {
  CHECK(run_cli("run --scenario no-such-scenario").exit_code == 1);
  CHECK(run_cli("run --scenario nav-simple --base warp").exit_code == 1);
  CHECK(run_cli("monitor --scenario nav-simple --formula \"F[0,1] goal\" "
                "--trajectory /nonexistent/file.csv").exit_code == 2);
  const CommandResult bad_formula = run_cli(
      "monitor --scenario nav-simple --formula \"G[5,3] goal\" --trajectory /dev/null");
  CHECK(bad_formula.exit_code == 1);
}

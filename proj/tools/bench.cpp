// Monte-Carlo benchmark driver.
//
//   bench --problem iiduka --d 10000 --p11 1 --runs 100 --solvers fm-hsdm,admm --seed 0 --out results
//
// Every flag may also come from a TOML file given with --config; flags on the
// command line win. Exit status: 0 success, 2 bad configuration, 3 at least one
// solver run aborted on divergence, 1 anything else.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "fmhsdm/fmhsdm.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

int exit_code_for(fmh_status status) {
  switch (status) {
    case FMH_OK:
      return 0;
    case FMH_ERR_INVALID_ARGUMENT:
    case FMH_ERR_DIMENSION_MISMATCH:
    case FMH_ERR_STEP_SIZE:
    case FMH_ERR_UNSUPPORTED:
      return kExitConfig;
    case FMH_ERR_DIVERGENCE:
      return kExitDivergence;
    default:
      return 1;
  }
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FM-HSDM benchmark harness"};
  app.set_config("--config", "", "TOML file with any of the options below");

  std::string problem = "iiduka";
  std::int64_t d = 10000;
  double p11 = 1.0;
  int runs = 100;
  std::int64_t iters = 0;
  std::vector<std::string> solvers{"fm-hsdm"};
  std::uint64_t seed = 0;
  std::string out;
  bool certificates = false;
  bool no_plots = false;
  int threads = 0;
  bool list = false;

  app.add_option("--problem", problem, "iiduka | hyperplane")->capture_default_str();
  app.add_option("--d", d, "block dimension")->capture_default_str();
  app.add_option("--p11", p11, "smallest diagonal entry of P, in (0, 1]")->capture_default_str();
  app.add_option("--runs", runs, "Monte-Carlo runs")->capture_default_str();
  app.add_option("--iters", iters, "iterations per run (0: 2000 for iiduka, 5000 for hyperplane)")
      ->capture_default_str();
  app.add_option("--solvers", solvers, "comma-separated solver names")->delimiter(',')->capture_default_str();
  app.add_option("--seed", seed, "base seed; run r uses seed + r")->capture_default_str();
  app.add_option("--out", out, "output directory for CSV files, log and plots");
  app.add_flag("--certificates", certificates, "also record Fejer and rate certificate curves");
  app.add_flag("--no-plots", no_plots, "skip SVG and gnuplot output");
  app.add_option("--threads", threads, "worker threads (0: all cores)")->capture_default_str();
  app.add_flag("--list-solvers", list, "print the solver names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (list) {
    std::cout << fmh_solver_names() << '\n';
    return 0;
  }

  fmh_experiment_config cfg;
  fmh_experiment_config_init(&cfg);
  fmh_status st = fmh_problem_kind_from_name(problem.c_str(), &cfg.problem);
  if (st != FMH_OK) {
    std::cerr << "bench: " << fmh_last_error() << '\n';
    return exit_code_for(st);
  }
  const std::string solver_list = join(solvers);
  cfg.d = d;
  cfg.p11 = p11;
  cfg.runs = runs;
  cfg.iters = iters;
  cfg.solvers = solver_list.c_str();
  cfg.base_seed = seed;
  cfg.output_dir = out.c_str();
  cfg.certificates = certificates ? 1 : 0;
  cfg.threads = threads;
  cfg.plots = no_plots ? 0 : 1;

  fmh_experiment_summary summary{};
  st = fmh_run_experiment(&cfg, &summary);
  if (st != FMH_OK) {
    std::cerr << "bench: " << fmh_status_name(st) << ": " << fmh_last_error() << '\n';
    return exit_code_for(st);
  }
  std::cout << "problem=" << problem << " d=" << d << " runs=" << runs << " iters=" << summary.iters
            << " solvers=" << solver_list << " aborted_runs=" << summary.aborted_runs << '\n';
  if (!out.empty()) std::cout << "wrote " << out << '\n';
  return summary.aborted_runs > 0 ? kExitDivergence : 0;
}

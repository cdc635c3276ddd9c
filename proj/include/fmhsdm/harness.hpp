#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fmhsdm/objective.hpp"
#include "fmhsdm/solver.hpp"

namespace fmh {

enum class ProblemKind { kIiduka, kHyperplane };

std::string_view problem_kind_name(ProblemKind kind);
std::optional<ProblemKind> parse_problem_kind(std::string_view name);

/// One random draw of a benchmark problem in both of its formulations.
struct ProblemInstance {
  ProblemKind kind;
  /// f smooth, g nonsmooth.
  Problem primary;
  /// f = 0, the quadratic handled through its resolvent inside g.
  Problem resolvent_form;
  Vector p_diagonal;

  /// Lifts a point of the primary space into the resolvent-form space.
  Vector lift(const Vector& x) const;
  /// Maps a resolvent-form point back to the primary space.
  Vector project(const Vector& x) const;
};

/// Diagonal with entry 0 equal to p11, entry d-1 equal to 10 and the rest
/// uniform in (p11, 10).
Vector make_p_diagonal(Index d, double p11, std::uint64_t seed);

/// min 1/2 x1^T P x1 over consensus triples with x2 in B[2 e1, 1] and x3 in B[0, 2].
ProblemInstance gen_problem_iiduka(Index d, double p11, std::uint64_t seed);
/// min 1/2 x^T P x over {x : x_1 = 1}.
ProblemInstance gen_problem_hyperplane(Index d, double p11, std::uint64_t seed);
ProblemInstance gen_problem(ProblemKind kind, Index d, double p11, std::uint64_t seed);

struct SolverSpec {
  std::string name;
  SolverConfig config;
  bool resolvent_form = false;
};

/// Benchmark solver names: fm-hsdm, fm-hsdm-g0, fm-hsdm-ii (alias fm-hsdm-f0),
/// fm-hsdm-iii, hsdm, hcgm, admm, pd-condat, pd-condat-ii, pd-cp, fista.
const std::vector<std::string>& known_solver_names();

/// Default parameters for a solver on a problem family. Throws kUnsupported
/// for combinations the solver cannot handle.
SolverSpec default_solver_spec(const std::string& name, ProblemKind kind, double lipschitz);

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::kIiduka;
  Index d = 10000;
  double p11 = 1.0;
  int runs = 100;
  std::int64_t iters = 0;  // 0 selects the per-problem default
  std::vector<std::string> solvers{"fm-hsdm"};
  std::uint64_t base_seed = 0;
  std::string output_dir;  // empty: keep results in memory only
  bool certificates = false;
  int threads = 0;  // 0: hardware concurrency
  bool plots = true;
};

std::int64_t default_iters(ProblemKind kind);

/// Throws kInvalidArgument / kUnsupported describing the first problem found.
void validate_experiment(const ExperimentConfig& config);

/// Per-solver, per-metric curves averaged uniformly over non-aborted runs.
struct CurveSet {
  std::vector<std::string> solvers;
  std::map<std::string, std::vector<std::string>> metrics;  // per solver, in output order
  std::map<std::string, std::map<std::string, std::vector<double>>> mean;
  std::map<std::string, int> completed_runs;

  const std::vector<double>& curve(const std::string& solver, const std::string& metric) const;
};

struct ExperimentResult {
  CurveSet curves;
  std::int64_t iters = 0;
  int diverged_runs = 0;
  std::vector<std::string> log;
};

/// Runs every solver from one shared initial point per run and averages the
/// curves. With an output directory, writes <solver>.csv, averaged.csv,
/// run_log.txt and (optionally) plots.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// 64-bit FNV-1a over the raw bytes of a vector.
std::uint64_t vector_hash(const Vector& x);

/// Shortest round-trip decimal form ("nan", "inf", "-inf" for non-finite values).
std::string format_double(double v);

/// Renders averaged.csv into one SVG plus one gnuplot script per plotted metric.
/// Returns the metrics plotted.
std::vector<std::string> emit_plots(const std::string& averaged_csv, const std::string& out_dir);

}  // namespace fmh

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.
//
// Usage: acceptance <path-to-bench> [scratch-dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "catalog_gen.hpp"
#include "fmhsdm/affine_map.hpp"
#include "fmhsdm/certificate.hpp"
#include "fmhsdm/error.hpp"
#include "fmhsdm/harness.hpp"
#include "fmhsdm/linalg.hpp"
#include "fmhsdm/rng.hpp"
#include "fmhsdm/solver.hpp"

using namespace fmh;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and horizons.
constexpr double kClosedFormTol = 1e-12;
constexpr double kClosedFormSeconds = 1e-3;
constexpr Index kConvergenceD = 200;
constexpr int kConvergenceSeeds = 10;
constexpr std::int64_t kConvergenceIters = 5000;
constexpr double kConvergenceTol = 1e-3;
constexpr double kConvergenceSeconds = 5.0;
constexpr Index kScaleD = 10000;
constexpr int kScaleRuns = 100;
constexpr std::int64_t kScaleIters = 2000;
constexpr double kScaleRatio = 1e3;
constexpr double kScaleSeconds = 600.0;
constexpr double kRoundingFloorUlps = 32.0;
constexpr double kFejerSlack = 1e-10;
constexpr double kSupRatio = 2.0;
constexpr std::int64_t kRateFrom = 10;
constexpr double kDeltaYSlack = 1e-12;
constexpr int kCatalogInstances = 200;
constexpr double kCrossResidualTol = 1e-8;
constexpr double kSqrtTol = 1e-8;
constexpr int kPositivityProbes = 100;
constexpr double kPositivitySlack = 1e-12;
constexpr double kCatalogSeconds = 30.0;
constexpr std::int64_t kAgreementIters = 5000;
constexpr double kAgreementTol = 1e-4;
constexpr double kAlpha = 0.5;
constexpr double kLambda = 0.099;
constexpr double kLambdaF0 = 100.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++g_failures;
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Vector seeded_x0(const ProblemInstance& in, std::uint64_t seed) {
  return default_initial_point(in.primary, SplitMix64::stream(seed, 1)());
}

Outcome closed_form_iterates() {
  const Problem p("constant-map", make_quadratic(SymOperator::identity(1)), make_zero_term(1),
                  AffineFneMap::create(SymOperator::zero(1), Vector::Ones(1)), {}, Vector::Ones(1),
                  Vector::Constant(1, -1.0));
  double worst_err = 0.0, worst_time = 0.0;
  for (Variant v : {Variant::kFmHsdmG0, Variant::kFmHsdm}) {
    SolverConfig c;
    c.variant = v;
    c.alpha = 0.5;
    c.lambda = 0.5;
    c.max_iters = 40;
    c.record_certificates = true;
    c.x0 = Vector::Zero(1);
    const auto t0 = Clock::now();
    const SolverTrace tr = v == Variant::kFmHsdm ? run_fm_hsdm(p, c) : run_fm_hsdm_g0(p, c);
    worst_time = std::max(worst_time, seconds_since(t0));
    for (std::size_t n = 0; n < tr.iterates.size(); ++n)
      worst_err = std::max(worst_err, std::abs(tr.iterates[n](0) - (1.0 - std::ldexp(1.0, -static_cast<int>(n)))));
    if (tr.iterates.size() != 41) return {false, "expected 41 iterates"};
  }
  return {worst_err <= kClosedFormTol && worst_time < kClosedFormSeconds,
          "max |x_n - (1 - 2^-n)| = " + fmt("%.3g", worst_err) + " (tol 1e-12) over n <= 40, g0 and general; slowest run " +
              fmt("%.3g", worst_time * 1e3) + " ms (limit 1 ms)"};
}

// Runs shared by the convergence, Fejer and rate checks.
struct ConvergenceResults {
  double worst_final = 0.0;
  double seconds = 0.0;
  bool fejer_pass = true;
  double worst_fejer_increment = 0.0;
  std::int64_t fejer_checked = 0;
  double worst_sup_ratio = 0.0;
  bool f0_monotone = true;
  double worst_delta_y_increase = 0.0;
  std::string error;
};

ConvergenceResults convergence_runs() {
  ConvergenceResults r;
  for (int seed = 0; seed < kConvergenceSeeds; ++seed) {
    const ProblemInstance in = gen_problem_iiduka(kConvergenceD, 1.0, static_cast<std::uint64_t>(seed));
    const Vector x0 = seeded_x0(in, static_cast<std::uint64_t>(seed));
    const Vector& xs = *in.primary.known_minimizer();

    SolverConfig c;
    c.variant = Variant::kFmHsdm;
    c.alpha = kAlpha;
    c.lambda = kLambda;
    c.max_iters = kConvergenceIters;
    c.record_certificates = true;
    c.x0 = x0;
    const auto t0 = Clock::now();
    const SolverTrace tr = solve(in.primary, c);
    r.seconds += seconds_since(t0);
    r.worst_final = std::max(r.worst_final, (tr.final_iterate - xs).norm());

    const OptimalPair pair = make_optimal_pair(in.primary, kLambda);
    const FejerReport f = fejer_check(tr, pair, make_theta_metric(in.primary.constraint(), kAlpha), kFejerSlack);
    r.fejer_pass = r.fejer_pass && f.passed && !f.distances.empty() && f.indices.front() == 2;
    r.worst_fejer_increment = std::max(r.worst_fejer_increment, f.max_increment);
    r.fejer_checked += static_cast<std::int64_t>(f.distances.size());

    const RateReport rate = rate_certificate(tr, in.primary, xs, kRateFrom);
    for (double s : rate.sup_ratio) r.worst_sup_ratio = std::max(r.worst_sup_ratio, s);

    SolverConfig c0 = c;
    c0.variant = Variant::kFmHsdmF0;
    c0.lambda = kLambdaF0;
    c0.x0 = in.lift(x0);
    const SolverTrace t0r = solve(in.resolvent_form, c0);
    const RateReport r0 = rate_certificate(t0r, in.resolvent_form, *in.resolvent_form.known_minimizer(), kRateFrom);
    r.f0_monotone = r.f0_monotone && r0.delta_y_monotone && r0.delta_y.size() > 1;
    r.worst_delta_y_increase = std::max(r.worst_delta_y_increase, r0.max_delta_y_increase);
  }
  return r;
}

Outcome full_scale_smoke() {
  ExperimentConfig c;
  c.problem = ProblemKind::kIiduka;
  c.d = kScaleD;
  c.p11 = 1.0;
  c.runs = kScaleRuns;
  c.iters = kScaleIters;
  c.solvers = {"fm-hsdm"};
  c.base_seed = 0;
  c.plots = false;
  const auto t0 = Clock::now();
  const ExperimentResult r = run_experiment(c);
  const double secs = seconds_since(t0);
  const std::vector<double>& dist = r.curves.curve("fm-hsdm", "distance");
  // Below this level the distance is rounding noise in x_n around x_*.
  const double floor = kRoundingFloorUlps * std::numeric_limits<double>::epsilon() * std::sqrt(3.0);
  std::int64_t rises = 0, floor_rises = 0;
  for (std::size_t n = 1; n < dist.size(); ++n) {
    if (dist[n] <= dist[n - 1]) continue;
    if (dist[n - 1] <= floor && dist[n] <= floor)
      ++floor_rises;
    else
      ++rises;
  }
  const double ratio = dist.front() / dist.back();
  const bool pass = r.diverged_runs == 0 && r.curves.completed_runs.at("fm-hsdm") == kScaleRuns && rises == 0 &&
                    ratio >= kScaleRatio && secs < kScaleSeconds &&
                    dist.size() == static_cast<std::size_t>(kScaleIters) + 1;
  return {pass, "d=10000 runs=100 iters=2000: " + fmt("%.1f", secs) + " s (limit 600), averaged distance " +
                    fmt("%.3g", dist.front()) + " -> " + fmt("%.3g", dist.back()) + ", ratio " + fmt("%.3g", ratio) +
                    " (min 1e3), " + std::to_string(rises) + " increases above the rounding floor " +
                    fmt("%.2g", floor) + " (" + std::to_string(floor_rises) + " at the floor)"};
}

Outcome operator_algebra() {
  const auto t0 = Clock::now();
  oracle::Rng rng(20240601);
  int membership_fail = 0, total = 0;
  double worst_sqrt = 0.0;
  std::string first_failure;
  for (const std::string& name : gen::constructor_names()) {
    for (int i = 0; i < kCatalogInstances; ++i) {
      const AffineFneMap t = gen::make_instance(name, rng);
      ++total;
      const MembershipReport m = validate_membership(t);
      if (!m.passed()) {
        if (first_failure.empty()) first_failure = name + ": " + m.failures.front();
        ++membership_fail;
      }
      const Matrix u = sqrt_I_minus_Q(t).to_dense();
      const Matrix iq = Matrix::Identity(t.dim(), t.dim()) - t.q().to_dense();
      worst_sqrt = std::max(worst_sqrt, (u * u - iq).cwiseAbs().maxCoeff());
    }
  }
  double worst_cross = 0.0;
  for (int i = 0; i < kCatalogInstances; ++i) {
    const gen::LsInstance in = gen::ls_instance(rng);
    worst_cross = std::max(worst_cross, gen::ls_cross_residual(in, rng, 3));
  }
  double worst_margin = HUGE_VAL;
  bool positivity = true;
  for (int i = 0; i < kCatalogInstances; ++i) {
    const gen::LsInstance in = gen::ls_instance(rng);
    const double gamma = rng.uniform(0.05, 5.0);
    const Matrix op = Matrix::Identity(in.a.cols(), in.a.cols()) + gamma * in.a.transpose() * in.a;
    const StrongPositivityReport s =
        check_strongly_positive_inverse(SymOperator::dense(op), 1.0, kPositivityProbes, static_cast<std::uint64_t>(i));
    positivity = positivity && s.passed(kPositivitySlack) && s.probes >= kPositivityProbes;
    worst_margin = std::min({worst_margin, s.norm_margin, s.lower_margin, s.upper_margin});
  }
  const double secs = seconds_since(t0);
  const bool pass = membership_fail == 0 && worst_cross <= kCrossResidualTol && worst_sqrt <= kSqrtTol &&
                    positivity && secs < kCatalogSeconds;
  std::string detail = std::to_string(total - membership_fail) + "/" + std::to_string(total) + " maps (" +
                       std::to_string(gen::constructor_names().size()) + " constructors x 200) pass membership";
  if (!first_failure.empty()) detail += " [first failure " + first_failure + "]";
  detail += "; LS cross residual " + fmt("%.3g", worst_cross) + " (tol 1e-8); |U^2 - (I - Q)| " +
            fmt("%.3g", worst_sqrt) + " (tol 1e-8); resolvent positivity min margin " + fmt("%.3g", worst_margin) +
            " (floor -1e-12, 100 probes); " + fmt("%.1f", secs) + " s (limit 30)";
  return {pass, detail};
}

Outcome cross_solver_agreement() {
  std::string detail;
  bool pass = true;
  for (ProblemKind kind : {ProblemKind::kIiduka, ProblemKind::kHyperplane}) {
    std::vector<std::string> solvers = {"fm-hsdm", "fm-hsdm-ii", "admm", "pd-condat"};
    if (kind == ProblemKind::kHyperplane) solvers.push_back("fista");
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      ExperimentConfig c;
      c.problem = kind;
      c.d = kConvergenceD;
      c.p11 = 1.0;
      c.runs = 1;
      c.iters = kAgreementIters;
      c.solvers = solvers;
      c.base_seed = seed;
      c.plots = false;
      const ExperimentResult r = run_experiment(c);
      pass = pass && r.diverged_runs == 0;
      for (const std::string& s : solvers) {
        const double d = r.curves.curve(s, "distance").back();
        if (!(d < kAgreementTol)) {
          pass = false;
          detail += std::string(problem_kind_name(kind)) + "/" + s + "/seed" + std::to_string(seed) + " at " +
                    fmt("%.3g", d) + "; ";
        }
      }
    }
  }
  if (detail.empty()) detail = "all solvers within 1e-4 of the minimizer after 5000 iterations (d=200, 3 seeds, both problems)";
  return {pass, detail};
}

Outcome step_size_gate() {
  const double l = 10.0;
  struct Case {
    Variant v;
    double alpha, lambda, lip;
    bool accept;
  };
  const std::vector<Case> cases = {
      {Variant::kFmHsdm, 0.5, 0.99 * 2.0 * (1.0 - 0.5) / l, l, true},
      {Variant::kFmHsdmG0, 0.5, 0.99 * 2.0 * (1.0 - 0.5) / l, l, true},
      {Variant::kFmHsdm, 0.5, 2.0 * (1.0 - 0.5) / l, l, false},
      {Variant::kFmHsdmIII, 0.5, 0.99 * 2.0 * (1.0 - 0.5) * (1.0 - 0.5) / l, l, true},
      {Variant::kFmHsdmIII, 0.5, 2.0 * (1.0 - 0.5) * (1.0 - 0.5) / l, l, false},
      {Variant::kFmHsdmF0, 0.5, 100.0, 0.0, true},
      {Variant::kFmHsdmF0, 0.5, 0.0, 0.0, false},
      {Variant::kFmHsdm, 0.0, 0.05, l, false},
      {Variant::kFmHsdm, 1.0, 0.05, l, false},
      {Variant::kFmHsdmF0, 1.0, 100.0, 0.0, false},
      {Variant::kFmHsdm, 0.5, 0.0, l, false},
  };
  int wrong = 0;
  for (const Case& c : cases) {
    bool accepted = true;
    try {
      validate_step_size(c.v, c.alpha, c.lambda, c.lip);
    } catch (const Error& e) {
      accepted = false;
      if (e.code() != ErrorCode::kStepSize) ++wrong;
    }
    if (accepted != c.accept) ++wrong;
  }
  return {wrong == 0, std::to_string(cases.size() - static_cast<std::size_t>(wrong)) + "/" +
                          std::to_string(cases.size()) +
                          " cases as expected (accept 0.099, 0.0495, lambda=100 for f=0 at L=10, alpha=0.5; reject "
                          "the boundaries 0.1, 0.05, lambda=0, alpha in {0, 1})"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const std::string& bench, const fs::path& scratch) {
  int compared = 0;
  for (const std::string& args :
       {std::string("--problem iiduka --d 60 --runs 6 --iters 300 --solvers fm-hsdm,fm-hsdm-ii,admm,pd-condat "
                    "--seed 42 --certificates"),
        std::string("--problem hyperplane --d 60 --p11 0.01 --runs 6 --iters 300 --solvers "
                    "fm-hsdm,fm-hsdm-iii,pd-cp,fista --seed 7")}) {
    std::vector<fs::path> dirs = {scratch / "a", scratch / "b"};
    for (const fs::path& d : dirs) {
      fs::remove_all(d);
      const std::string cmd = "\"" + bench + "\" " + args + " --out \"" + d.string() + "\" > /dev/null";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) return {false, "bench exited with status " + std::to_string(rc)};
    }
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dirs[0])) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    std::vector<std::string> other;
    for (const auto& e : fs::directory_iterator(dirs[1])) other.push_back(e.path().filename().string());
    std::sort(other.begin(), other.end());
    if (names != other) return {false, "output file sets differ"};
    for (const std::string& n : names) {
      if (n.size() < 4 || n.substr(n.size() - 4) != ".csv") continue;
      if (slurp(dirs[0] / n) != slurp(dirs[1] / n)) return {false, n + " differs between identical invocations"};
      ++compared;
    }
    for (const fs::path& d : dirs) fs::remove_all(d);
  }
  return {compared > 0, std::to_string(compared) + " CSV files byte-identical across repeated bench invocations"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <bench> [scratch-dir]\n", argv[0]);
    return 2;
  }
  const std::string bench = argv[1];
  const fs::path scratch = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "fmhsdm_acceptance";
  fs::create_directories(scratch);

  report("closed-form iterates", closed_form_iterates);

  ConvergenceResults conv;
  bool conv_ok = true;
  try {
    conv = convergence_runs();
  } catch (const std::exception& e) {
    conv_ok = false;
    conv.error = e.what();
  }
  report("exact-minimizer convergence", [&] {
    if (!conv_ok) return Outcome{false, "exception: " + conv.error};
    return Outcome{conv.worst_final < kConvergenceTol && conv.seconds < kConvergenceSeconds,
                   "d=200, 10 seeds, 5000 iterations: worst |x_n - (e1,e1,e1)| = " + fmt("%.3g", conv.worst_final) +
                       " (tol 1e-3), solve time " + fmt("%.2f", conv.seconds) + " s (limit 5)"};
  });
  report("full-scale smoke run", full_scale_smoke);
  report("Fejer certificate", [&] {
    if (!conv_ok) return Outcome{false, "exception: " + conv.error};
    return Outcome{conv.fejer_pass, std::to_string(conv.fejer_checked) + " Theta-distances from n = 2, largest increment " +
                                        fmt("%.3g", conv.worst_fejer_increment) + " (slack 1e-10 relative)"};
  });
  report("rate certificates", [&] {
    if (!conv_ok) return Outcome{false, "exception: " + conv.error};
    return Outcome{conv.worst_sup_ratio <= kSupRatio && conv.f0_monotone && conv.worst_delta_y_increase <= kDeltaYSlack,
                   "worst sup-ratio over n in [10, 5000] " + fmt("%.4g", conv.worst_sup_ratio) +
                       " (limit 2); f = 0 variant largest |dy|_Theta increase " +
                       fmt("%.3g", conv.worst_delta_y_increase) + " (slack 1e-12)"};
  });
  report("operator-algebra suite", operator_algebra);
  report("cross-solver agreement", cross_solver_agreement);
  report("step-size gate", step_size_gate);
  report("determinism", [&] { return determinism(bench, scratch); });

  std::printf("%s: %d failing\n", g_failures == 0 ? "ALL PASS" : "SOME FAIL", g_failures);
  return g_failures == 0 ? 0 : 1;
}

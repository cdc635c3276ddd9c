#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "catalog_gen.hpp"
#include "fmhsdm/error.hpp"
#include "fmhsdm/harness.hpp"
#include "fmhsdm/solver.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fmh;
using oracle::Mat;
using oracle::Vec;
using testutil::code_of;
using testutil::vec;

namespace {

/// f = x^2 / 2 on R, T = constant map to 1.
Problem constant_map_problem() {
  return Problem("constant-map", make_quadratic(SymOperator::identity(1)), make_zero_term(1),
                 AffineFneMap::create(SymOperator::zero(1), vec({1.0})), {}, vec({1.0}), vec({-1.0}));
}

SolverConfig config(Variant v, double lambda, std::int64_t iters) {
  SolverConfig c;
  c.variant = v;
  c.alpha = 0.5;
  c.lambda = lambda;
  c.max_iters = iters;
  c.record_certificates = true;
  c.x0 = Vector::Zero(1);
  return c;
}

struct RandomInstance {
  Mat q;
  Vec pi;
  Mat p;
  AffineFneMap t;
};

RandomInstance random_instance(oracle::Rng& rng, Index n) {
  const AffineFneMap t = gen::random_fne(rng, n);
  return {t.q().to_dense(), t.pi(), oracle::sym_with_spectrum(rng, n, 0.0, 4.0), t};
}

double max_iterate_gap(const SolverTrace& tr, const std::vector<Vec>& xs) {
  REQUIRE(tr.iterates.size() == xs.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k)
    worst = std::max(worst, (tr.iterates[k] - xs[k]).norm() / (1.0 + xs[k].norm()));
  return worst;
}

}  // namespace

TEST_CASE("step-size gate") {
  CHECK_NOTHROW(validate_step_size(Variant::kFmHsdm, 0.5, 0.099, 10.0));
  CHECK(code_of([] { validate_step_size(Variant::kFmHsdm, 0.5, 0.1, 10.0); }) == ErrorCode::kStepSize);
  CHECK_NOTHROW(validate_step_size(Variant::kFmHsdmIII, 0.5, 0.0495, 10.0));
  CHECK(code_of([] { validate_step_size(Variant::kFmHsdmIII, 0.5, 0.05, 10.0); }) == ErrorCode::kStepSize);
  CHECK_NOTHROW(validate_step_size(Variant::kFmHsdmF0, 0.5, 100.0, 10.0));
  CHECK(code_of([] { validate_step_size(Variant::kFmHsdmF0, 0.5, 0.0, 10.0); }) == ErrorCode::kStepSize);
  CHECK(code_of([] { validate_step_size(Variant::kFmHsdmG0, 0.4, 0.01, 10.0); }) == ErrorCode::kStepSize);
  CHECK(code_of([] { validate_step_size(Variant::kFmHsdm, 1.0, 0.01, 10.0); }) == ErrorCode::kStepSize);
  try {
    validate_step_size(Variant::kFmHsdm, 0.5, 0.1, 10.0);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("2 (1 - alpha) / L") != std::string::npos);
  }
  CHECK(code_of([] { (void)run_fm_hsdm(constant_map_problem(), config(Variant::kFmHsdm, 1.0, 5)); }) ==
        ErrorCode::kStepSize);
}

TEST_CASE("constant map closed form") {
  const Problem p = constant_map_problem();
  for (Variant v : {Variant::kFmHsdmG0, Variant::kFmHsdm}) {
    const SolverTrace tr = solve(p, config(v, 0.5, 40));
    REQUIRE(tr.iterates.size() == 41);
    for (int n = 0; n <= 40; ++n) CHECK(std::abs(tr.iterates[n](0) - (1.0 - std::ldexp(1.0, -n))) <= 1e-12);
    CHECK(tr.records.size() == 41);
    CHECK(tr.iterations() == 40);
  }
}

TEST_CASE("identity prox reproduces the g = 0 variant bit for bit") {
  oracle::Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = rng.integer(1, 12);
    const RandomInstance in = random_instance(rng, n);
    const Problem prob("r", make_quadratic(SymOperator::dense(in.p)), make_zero_term(n), in.t);
    SolverConfig c = config(Variant::kFmHsdm, 0.9 / make_quadratic(SymOperator::dense(in.p))->lipschitz(), 60);
    c.x0 = rng.vec(n);
    const SolverTrace a = run_fm_hsdm(prob, c);
    const SolverTrace b = run_fm_hsdm_g0(prob, c);
    REQUIRE(a.iterates.size() == b.iterates.size());
    for (std::size_t k = 0; k < a.iterates.size(); ++k) CHECK(a.iterates[k] == b.iterates[k]);
    CHECK(a.final_iterate == b.final_iterate);
  }
}

TEST_CASE("zero gradient reproduces the f = 0 variant") {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = rng.integer(1, 12);
    const RandomInstance in = random_instance(rng, n);
    const Problem prob("r", make_zero_term(n), make_ball_indicator(rng.vec(n), 1.0), in.t);
    SolverConfig c = config(Variant::kFmHsdm, rng.uniform(0.1, 10.0), 60);
    c.x0 = rng.vec(n);
    const SolverTrace a = run_fm_hsdm(prob, c);
    const SolverTrace b = run_fm_hsdm_f0(prob, c);
    REQUIRE(a.iterates.size() == b.iterates.size());
    for (std::size_t k = 0; k < a.iterates.size(); ++k) CHECK((a.iterates[k] - b.iterates[k]).norm() <= 1e-14);
  }
}

TEST_CASE("all FM variants match a literal transcription") {
  oracle::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = rng.integer(1, 10);
    const RandomInstance in = random_instance(rng, n);
    const double lip = oracle::max_abs_eig(in.p);
    const double alpha = rng.uniform(0.5, 0.95);
    const Vec c = rng.vec(n);
    const double r = rng.uniform(0.5, 2.0);
    const Vec x0 = rng.vec(n);
    const int iters = 80;

    oracle::FmTranscription o{in.q, in.pi, [&](const Vec& x) { return Vec(in.p * x); },
                              [&](double, const Vec& x) { return oracle::project_ball(c, r, x); }, alpha, 0.0, 0};
    std::vector<Vec> xs, halves;

    SolverConfig cfg;
    cfg.alpha = alpha;
    cfg.max_iters = iters;
    cfg.record_certificates = true;
    cfg.x0 = x0;

    // Full variant: gradient at x_n, ball prox.
    o.lambda = cfg.lambda = 0.9 * 2.0 * (1.0 - alpha) / lip;
    o.run(x0, iters, xs, halves);
    const Problem full("r", make_quadratic(SymOperator::dense(in.p)), make_ball_indicator(c, r), in.t);
    CHECK(max_iterate_gap(run_fm_hsdm(full, cfg), xs) <= 1e-12);

    // f = 0.
    o.mode = 1;
    o.lambda = cfg.lambda = rng.uniform(0.1, 100.0);
    o.run(x0, iters, xs, halves);
    const Problem nof("r", make_zero_term(n), make_ball_indicator(c, r), in.t);
    CHECK(max_iterate_gap(run_fm_hsdm_f0(nof, cfg), xs) <= 1e-12);

    // g = 0, gradient at T_alpha x.
    o.mode = 2;
    o.prox = [](double, const Vec& x) { return x; };
    o.lambda = cfg.lambda = 0.9 * 2.0 * (1.0 - alpha) * (1.0 - alpha) / lip;
    o.run(x0, iters, xs, halves);
    const Problem nog("r", make_quadratic(SymOperator::dense(in.p)), make_zero_term(n), in.t);
    const SolverTrace t3 = run_fm_hsdm_iii(nog, cfg);
    CHECK(max_iterate_gap(t3, xs) <= 1e-12);
    REQUIRE(t3.half_iterates.size() >= halves.size());
    for (std::size_t k = 0; k < halves.size(); ++k)
      CHECK((t3.half_iterates[k] - halves[k]).norm() <= 1e-12 * (1.0 + halves[k].norm()));
  }
}

TEST_CASE("variant III on the constant map, three steps by hand") {
  // T_a x = 0.5 x + 0.5, grad f(y) = y.
  // x_{1/2} = T_a 0 - 0.25 T_a 0 = 0.375;  x_1 = 0.375
  // x_{3/2} = 0.375 - (0.5 - 0.125) + (1 - 0.25 (0.5 * 0.375 + 0.5)) = 0.828125
  const SolverTrace tr = run_fm_hsdm_iii(constant_map_problem(), config(Variant::kFmHsdmIII, 0.25, 3));
  CHECK(tr.iterates[1](0) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(tr.iterates[2](0) == doctest::Approx(0.828125).epsilon(1e-15));
  const double x3 = 0.828125 - (0.5 * 0.375 + 0.5 - 0.25 * (0.5 * 0.375 + 0.5)) +
                    (1.0 - 0.25 * (0.5 * 0.828125 + 0.5));
  CHECK(tr.iterates[3](0) == doctest::Approx(x3).epsilon(1e-15));
}

TEST_CASE("variant III with T = identity is gradient descent") {
  oracle::Rng rng(4);
  const Index n = 5;
  const Mat p = oracle::sym_with_spectrum(rng, n, 0.0, 2.0);
  const Problem prob("gd", make_quadratic(SymOperator::dense(p)), make_zero_term(n), AffineFneMap::identity(n));
  SolverConfig c = config(Variant::kFmHsdmIII, 0.2, 30);
  c.x0 = rng.vec(n);
  const SolverTrace tr = run_fm_hsdm_iii(prob, c);
  Vec x = *c.x0 - c.lambda * p * *c.x0;
  CHECK((tr.iterates[1] - x).norm() < 1e-14);
  for (int k = 2; k <= 30; ++k) {
    x = x - c.lambda * p * x;
    CHECK((tr.iterates[static_cast<std::size_t>(k)] - x).norm() < 1e-12);
  }
}

TEST_CASE("f = 0 and T = identity keeps the g = 0 iterate fixed") {
  const Problem p("still", make_zero_term(3), make_zero_term(3), AffineFneMap::identity(3));
  SolverConfig c = config(Variant::kFmHsdmG0, 0.5, 20);
  c.x0 = vec({1, 2, 3});
  const SolverTrace tr = run_fm_hsdm_g0(p, c);
  for (const auto& x : tr.iterates) CHECK(x == *c.x0);
}

TEST_CASE("f = 0, T = identity, ball prox: projection then stationary") {
  const Problem p("ball", make_zero_term(2), make_ball_indicator(Vector::Zero(2), 1.0), AffineFneMap::identity(2));
  SolverConfig c = config(Variant::kFmHsdmF0, 100.0, 20);
  c.x0 = vec({3, 4});
  const SolverTrace tr = run_fm_hsdm_f0(p, c);
  for (std::size_t k = 1; k < tr.iterates.size(); ++k) CHECK((tr.iterates[k] - vec({0.6, 0.8})).norm() < 1e-15);
}

TEST_CASE("g0 and f0 reject the wrong problem shape") {
  const Problem p("ball", make_quadratic(SymOperator::identity(2)), make_ball_indicator(Vector::Zero(2), 1.0),
                  AffineFneMap::identity(2));
  CHECK(code_of([&] { (void)run_fm_hsdm_g0(p, config(Variant::kFmHsdmG0, 0.5, 5)); }) != testutil::kNoError);
  CHECK(code_of([&] { (void)run_fm_hsdm_iii(p, config(Variant::kFmHsdmIII, 0.1, 5)); }) != testutil::kNoError);
  CHECK(code_of([&] { (void)run_fm_hsdm_f0(p, config(Variant::kFmHsdmF0, 1.0, 5)); }) != testutil::kNoError);
}

TEST_CASE("HSDM by hand") {
  SolverConfig c = config(Variant::kHsdm, 0.0, 3);
  c.hsdm_c = 1.0;
  const SolverTrace tr = run_hsdm(constant_map_problem(), c);
  REQUIRE(tr.iterates.size() == 4);
  CHECK(tr.iterates[1](0) == doctest::Approx(0.0));
  CHECK(tr.iterates[2](0) == doctest::Approx(0.5));
  CHECK(tr.iterates[3](0) == doctest::Approx(2.0 / 3.0));

  c.hsdm_c = 0.0;
  oracle::Rng rng(5);
  const AffineFneMap t = gen::random_fne(rng, 4);
  const Problem prob("fp", make_quadratic(SymOperator::identity(4)), make_zero_term(4), t);
  c.x0 = rng.vec(4);
  c.max_iters = 10;
  const SolverTrace fp = run_hsdm(prob, c);
  Vec x = *c.x0;
  for (int k = 1; k <= 10; ++k) {
    x = t.apply(x);
    CHECK((fp.iterates[static_cast<std::size_t>(k)] - x).norm() < 1e-13);
  }
}

TEST_CASE("HCGM by hand") {
  SolverConfig c = config(Variant::kHcgm, 0.0, 3);
  c.hcgm_mu = 1.0;
  const SolverTrace tr = run_hcgm(constant_map_problem(), c);
  CHECK(tr.iterates[1](0) == 1.0);
  for (const auto& x : tr.iterates) CHECK(std::isfinite(x(0)));
}

TEST_CASE("FISTA with zero smooth part is feasible after one step") {
  const Problem p("fista", make_zero_term(2), make_zero_term(2), make_hyperplane_projection(vec({1, 1}), 1.0));
  SolverConfig c = config(Variant::kFista, 0.0, 5);
  c.x0 = vec({3, -7});
  c.fista_step = 1.0;
  const SolverTrace tr = run_baseline(p, c);
  for (std::size_t k = 1; k < tr.iterates.size(); ++k) CHECK(std::abs(tr.iterates[k].sum() - 1.0) < 1e-14);
}

TEST_CASE("divergence is reported with its iteration") {
  const ProblemInstance in = gen_problem_hyperplane(10, 1.0, 7);
  SolverConfig c;
  c.variant = Variant::kHsdm;
  c.hsdm_c = 1e3;
  c.max_iters = 200;
  try {
    (void)solve(in.primary, c);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.code() == ErrorCode::kDivergence);
    CHECK(e.iteration() > 0);
    CHECK(e.iteration() < 200);
  }
}

TEST_CASE("benchmark problems: every solver reaches the minimizer") {
  for (ProblemKind kind : {ProblemKind::kIiduka, ProblemKind::kHyperplane}) {
    const ProblemInstance in = gen_problem(kind, 20, 1.0, 11);
    const Vector x0 = default_initial_point(in.primary, 99);
    for (const auto& name : known_solver_names()) {
      if (name == "hsdm" || name == "hcgm") continue;
      SolverSpec spec;
      try {
        spec = default_solver_spec(name, kind, in.primary.smooth().lipschitz());
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kUnsupported);
        continue;
      }
      const Problem& prob = spec.resolvent_form ? in.resolvent_form : in.primary;
      spec.config.x0 = spec.resolvent_form ? in.lift(x0) : x0;
      spec.config.max_iters = 10000;
      const SolverTrace tr = solve(prob, spec.config);
      const Vector x = spec.resolvent_form ? in.project(tr.final_iterate) : tr.final_iterate;
      INFO(problem_kind_name(kind), " ", name);
      CHECK((x - *in.primary.known_minimizer()).norm() < 1e-4);
      CHECK(fixed_point_residual(prob.constraint(), tr.final_iterate) < 1e-6);
    }
  }
}

TEST_CASE("HSDM and HCGM make progress on the benchmark problems") {
  for (ProblemKind kind : {ProblemKind::kIiduka, ProblemKind::kHyperplane}) {
    const ProblemInstance in = gen_problem(kind, 20, 1.0, 12);
    for (const std::string name : {"hsdm", "hcgm"}) {
      SolverSpec spec = default_solver_spec(name, kind, in.primary.smooth().lipschitz());
      spec.config.max_iters = 2000;
      spec.config.x0 = default_initial_point(in.primary, 1);
      const SolverTrace tr = solve(in.primary, spec.config);
      INFO(problem_kind_name(kind), " ", name);
      CHECK(tr.records.back().distance < 0.5 * tr.records.front().distance);
    }
  }
}

TEST_CASE("identical configuration gives identical traces") {
  const ProblemInstance in = gen_problem_iiduka(30, 0.5, 3);
  for (const std::string name : {"fm-hsdm", "admm", "pd-condat", "pd-cp"}) {
    SolverSpec spec = default_solver_spec(name, ProblemKind::kIiduka, in.primary.smooth().lipschitz());
    const Problem& prob = spec.resolvent_form ? in.resolvent_form : in.primary;
    spec.config.max_iters = 200;
    spec.config.record_certificates = true;
    spec.config.seed = 17;
    const SolverTrace a = solve(prob, spec.config);
    const SolverTrace b = solve(prob, spec.config);
    REQUIRE(a.iterates.size() == b.iterates.size());
    for (std::size_t k = 0; k < a.iterates.size(); ++k) CHECK(a.iterates[k] == b.iterates[k]);
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      CHECK(a.records[k].distance == b.records[k].distance);
      CHECK(a.records[k].objective == b.records[k].objective);
    }
  }
}

TEST_CASE("early stop ends the run once both residuals are small") {
  const Problem p = constant_map_problem();
  SolverConfig c = config(Variant::kFmHsdmG0, 0.5, 1000);
  c.early_stop_tol = 1e-9;
  const SolverTrace tr = solve(p, c);
  CHECK(tr.iterations() < 1000);
  CHECK(std::abs(tr.final_iterate(0) - 1.0) < 1e-8);
}

TEST_CASE("observer sees every iterate") {
  const Problem p = constant_map_problem();
  std::vector<double> seen;
  int halves = 0, duals = 0;
  SolverConfig c = config(Variant::kFmHsdmG0, 0.5, 10);
  c.track_duals = true;
  (void)solve(p, c, [&](std::int64_t n, const Vector& x, const Vector* h, const Vector* v) {
    CHECK(n == static_cast<std::int64_t>(seen.size()));
    seen.push_back(x(0));
    halves += h != nullptr;
    duals += v != nullptr;
  });
  CHECK(seen.size() == 11);
  CHECK(halves == 10);
  CHECK(duals == 10);
}

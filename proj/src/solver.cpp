#include "fmhsdm/solver.hpp"

#include <cmath>
#include <string>

#include "fmhsdm/error.hpp"
#include "fmhsdm/rng.hpp"
#include "solver_common.hpp"

namespace fmh {

namespace {

constexpr double kDivergenceNorm = 1e12;

struct VariantName {
  Variant variant;
  std::string_view name;
};

constexpr VariantName kVariantNames[] = {
    {Variant::kFmHsdm, "fm-hsdm"},       {Variant::kFmHsdmG0, "fm-hsdm-g0"},
    {Variant::kFmHsdmF0, "fm-hsdm-f0"},  {Variant::kFmHsdmIII, "fm-hsdm-iii"},
    {Variant::kHsdm, "hsdm"},            {Variant::kHcgm, "hcgm"},
    {Variant::kAdmm, "admm"},            {Variant::kPdCondat, "pd-condat"},
    {Variant::kPdCp, "pd-cp"},           {Variant::kFista, "fista"},
};

enum class GradientMode { kNone, kAtIterate, kAtAveraged };

void require_zero_prox(const Problem& p, Variant v) {
  require(p.prox().is_zero(), ErrorCode::kUnsupported,
          std::string(variant_name(v)) + " requires the nonsmooth term to be zero");
}

void require_zero_smooth(const Problem& p, Variant v) {
  require(p.smooth().is_zero(), ErrorCode::kUnsupported,
          std::string(variant_name(v)) + " requires the smooth term to be zero");
}

void require_iters(const SolverConfig& c) {
  require(c.max_iters > 0, ErrorCode::kInvalidArgument, "max_iters must be positive");
}

// x_{1/2} = T_a x_0 - lam g_0,  x_1 = prox(x_{1/2}),
// x_{n+3/2} = x_{n+1/2} - [T_a x_n - lam g_n] + [T x_{n+1} - lam g_{n+1}],  x_{n+2} = prox(x_{n+3/2}),
// where g_k is grad f(x_k), grad f(T_a x_k) or absent.
SolverTrace fm_kernel(const Problem& p, const SolverConfig& c, bool use_prox, GradientMode mode,
                      const IterationObserver& observer) {
  require_iters(c);
  const double alpha = c.alpha;
  const double lambda = c.lambda;
  const AffineFneMap& t = p.constraint();
  detail::Recorder rec(p, c, observer, true);

  Vector x = detail::initial_point(p, c);
  Vector tx, txa, g, a_prev, b, half, next;

  auto evaluate = [&](const Vector& at) {
    t.apply(at, tx);
    txa = alpha * tx + (1.0 - alpha) * at;
    switch (mode) {
      case GradientMode::kNone:
        break;
      case GradientMode::kAtIterate:
        p.smooth().gradient(at, g);
        break;
      case GradientMode::kAtAveraged:
        p.smooth().gradient(txa, g);
        break;
    }
  };
  auto prox = [&](const Vector& in, Vector& out) {
    if (use_prox)
      p.prox().prox(lambda, in, out);
    else
      out = in;
  };

  evaluate(x);
  rec.record(0, x, &tx, nullptr);
  if (mode == GradientMode::kNone)
    a_prev = txa;
  else
    a_prev = txa - lambda * g;
  half = a_prev;
  prox(half, next);

  for (std::int64_t n = 1;; ++n) {
    x.swap(next);
    evaluate(x);
    const bool stop = rec.record(n, x, &tx, &half);
    if (stop || n == c.max_iters) break;
    if (mode == GradientMode::kNone) {
      half = (half - a_prev) + tx;
      a_prev = txa;
    } else {
      b = tx - lambda * g;
      half = (half - a_prev) + b;
      a_prev = txa - lambda * g;
    }
    prox(half, next);
  }
  SolverTrace trace = rec.finish(x);
  trace.alpha = alpha;
  trace.lambda = lambda;
  return trace;
}

// T followed by prox_g (unit parameter) when g is present.
void apply_feasibility_map(const Problem& p, const Vector& x, Vector& tx, Vector& out) {
  p.constraint().apply(x, tx);
  if (p.prox().is_zero())
    out = tx;
  else
    p.prox().prox(1.0, tx, out);
}

}  // namespace

std::string_view variant_name(Variant v) {
  for (const auto& e : kVariantNames)
    if (e.variant == v) return e.name;
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (const auto& e : kVariantNames)
    if (e.name == name) return e.variant;
  return std::nullopt;
}

bool is_fm_hsdm(Variant v) {
  return v == Variant::kFmHsdm || v == Variant::kFmHsdmG0 || v == Variant::kFmHsdmF0 || v == Variant::kFmHsdmIII;
}

void validate_step_size(Variant variant, double alpha, double lambda, double lipschitz) {
  if (!is_fm_hsdm(variant)) return;
  if (!(std::isfinite(alpha) && alpha >= 0.5 && alpha < 1.0))
    fail(ErrorCode::kStepSize, "alpha = " + num(alpha) + " violates alpha in [0.5, 1)");
  if (!(std::isfinite(lambda) && lambda > 0.0))
    fail(ErrorCode::kStepSize, "lambda = " + num(lambda) + " violates lambda > 0");
  if (variant == Variant::kFmHsdmF0) return;
  if (!(std::isfinite(lipschitz) && lipschitz > 0.0))
    fail(ErrorCode::kStepSize, "Lipschitz constant must be positive and finite");
  const double one_minus = 1.0 - alpha;
  if (variant == Variant::kFmHsdmIII) {
    const double bound = 2.0 * one_minus * one_minus / lipschitz;
    if (!(lambda < bound))
      fail(ErrorCode::kStepSize, "lambda = " + num(lambda) +
                                     " violates lambda < 2 (1 - alpha)^2 / L = " + num(bound));
    return;
  }
  const double bound = 2.0 * one_minus / lipschitz;
  if (!(lambda < bound))
    fail(ErrorCode::kStepSize,
         "lambda = " + num(lambda) + " violates lambda < 2 (1 - alpha) / L = " + num(bound));
}

Vector default_initial_point(const Problem& problem, std::uint64_t seed) {
  const Index n = problem.dim();
  if (!problem.known_minimizer()) return Vector::Zero(n);
  SplitMix64 rng(seed);
  Vector dir(n);
  double norm = 0.0;
  while (norm == 0.0) {
    for (Index i = 0; i < n; ++i) dir(i) = rng.normal();
    norm = dir.norm();
  }
  return *problem.known_minimizer() + dir / norm;
}

namespace detail {

Vector initial_point(const Problem& problem, const SolverConfig& config) {
  if (!config.x0) return default_initial_point(problem, config.seed);
  require(config.x0->size() == problem.dim(), ErrorCode::kDimensionMismatch, "initial point dimension mismatch");
  require_finite(*config.x0, "initial point");
  return *config.x0;
}

Recorder::Recorder(const Problem& problem, const SolverConfig& config, const IterationObserver& observer,
                   bool supports_duals)
    : problem_(problem), config_(config), observer_(observer), start_(std::chrono::steady_clock::now()) {
  trace_.variant = config.variant;
  trace_.alpha = config.alpha;
  trace_.lambda = config.lambda;
  trace_.records.reserve(static_cast<std::size_t>(config.max_iters) + 1);
  if (supports_duals && (config.record_certificates || config.track_duals))
    dual_ = make_dual_state(problem.constraint(), config.alpha);
}

bool Recorder::record(std::int64_t n, const Vector& x, const Vector* tx, const Vector* half) {
  const double xnorm = x.norm();
  if (!std::isfinite(xnorm) || xnorm > kDivergenceNorm)
    throw DivergenceError(std::string(variant_name(config_.variant)) + " diverged at iteration " +
                              std::to_string(n),
                          n);
  if (!tx) {
    problem_.constraint().apply(x, scratch_);
    tx = &scratch_;
  }
  IterationRecord r;
  r.n = n;
  r.fixed_point_residual = (*tx - x).norm();
  r.distance = problem_.known_minimizer() ? (x - *problem_.known_minimizer()).norm()
                                          : std::numeric_limits<double>::quiet_NaN();
  r.objective = problem_.objective(x);
  r.infeasible = problem_.infeasible(x);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  trace_.records.push_back(r);

  const Vector* v = nullptr;
  if (dual_ && n >= 1) {
    advance_dual(*dual_, x);
    v = &dual_->v;
  }
  if (config_.record_certificates) {
    trace_.iterates.push_back(x);
    if (half) trace_.half_iterates.push_back(*half);
    trace_.duals.push_back(v ? *v : Vector());
  }
  if (observer_) observer_(n, x, half, v);

  bool stop = false;
  if (config_.early_stop_tol > 0.0) {
    if (n >= 1 && (x - prev_x_).norm() <= config_.early_stop_tol &&
        r.fixed_point_residual <= config_.early_stop_tol)
      stop = true;
    prev_x_ = x;
  }
  return stop;
}

SolverTrace Recorder::finish(const Vector& x_final) {
  trace_.final_iterate = x_final;
  return std::move(trace_);
}

}  // namespace detail

SolverTrace run_fm_hsdm(const Problem& problem, SolverConfig config, const IterationObserver& observer) {
  config.variant = Variant::kFmHsdm;
  validate_step_size(config.variant, config.alpha, config.lambda, problem.smooth().lipschitz());
  return fm_kernel(problem, config, true, GradientMode::kAtIterate, observer);
}

SolverTrace run_fm_hsdm_g0(const Problem& problem, SolverConfig config, const IterationObserver& observer) {
  config.variant = Variant::kFmHsdmG0;
  require_zero_prox(problem, config.variant);
  validate_step_size(config.variant, config.alpha, config.lambda, problem.smooth().lipschitz());
  return fm_kernel(problem, config, false, GradientMode::kAtIterate, observer);
}

SolverTrace run_fm_hsdm_f0(const Problem& problem, SolverConfig config, const IterationObserver& observer) {
  config.variant = Variant::kFmHsdmF0;
  require_zero_smooth(problem, config.variant);
  validate_step_size(config.variant, config.alpha, config.lambda, problem.smooth().lipschitz());
  return fm_kernel(problem, config, true, GradientMode::kNone, observer);
}

SolverTrace run_fm_hsdm_iii(const Problem& problem, SolverConfig config, const IterationObserver& observer) {
  config.variant = Variant::kFmHsdmIII;
  require_zero_prox(problem, config.variant);
  validate_step_size(config.variant, config.alpha, config.lambda, problem.smooth().lipschitz());
  return fm_kernel(problem, config, false, GradientMode::kAtAveraged, observer);
}

// x_{n+1} = T' x_n - lambda_n grad f(T' x_n), T' = prox_g o T.
SolverTrace run_hsdm(const Problem& problem, SolverConfig config, const IterationObserver& observer) {
  config.variant = Variant::kHsdm;
  require_iters(config);
  double c = config.hsdm_c;
  if (std::isnan(c)) c = 2.0 * (1.0 - config.alpha) / problem.smooth().lipschitz();
  require(std::isfinite(c) && c >= 0.0, ErrorCode::kInvalidArgument, "HSDM step scale must be nonnegative");
  detail::Recorder rec(problem, config, observer, false);

  Vector x = detail::initial_point(problem, config);
  Vector tx, y, g;
  for (std::int64_t n = 0;; ++n) {
    apply_feasibility_map(problem, x, tx, y);
    if (rec.record(n, x, &tx, nullptr) || n == config.max_iters) break;
    const double step = c / static_cast<double>(n + 1);
    problem.smooth().gradient(y, g);
    x = y - step * g;
  }
  return rec.finish(x);
}

// x_{n+1} = T'(x_n + mu lambda_n d_n), d_{n+1} = -grad f(x_{n+1}) + beta_{n+1} d_n.
SolverTrace run_hcgm(const Problem& problem, SolverConfig config, const IterationObserver& observer) {
  config.variant = Variant::kHcgm;
  require_iters(config);
  double mu = config.hcgm_mu;
  if (std::isnan(mu)) mu = 1.0 / problem.smooth().lipschitz();
  require(std::isfinite(mu) && mu > 0.0, ErrorCode::kInvalidArgument, "HCGM mu must be positive");
  detail::Recorder rec(problem, config, observer, false);

  Vector x = detail::initial_point(problem, config);
  Vector d, tx, probe, next, g;
  problem.smooth().gradient(x, d);
  d = -d;
  for (std::int64_t n = 0;; ++n) {
    if (rec.record(n, x, nullptr, nullptr) || n == config.max_iters) break;
    const double lam = 1.0 / static_cast<double>(n + 1);
    probe = x + (mu * lam) * d;
    apply_feasibility_map(problem, probe, tx, next);
    x.swap(next);
    problem.smooth().gradient(x, g);
    const double beta = 1.0 / (static_cast<double>(n + 2) * static_cast<double>(n + 2));
    d = beta * d - g;
  }
  return rec.finish(x);
}

SolverTrace solve(const Problem& problem, const SolverConfig& config, const IterationObserver& observer) {
  switch (config.variant) {
    case Variant::kFmHsdm:
      return run_fm_hsdm(problem, config, observer);
    case Variant::kFmHsdmG0:
      return run_fm_hsdm_g0(problem, config, observer);
    case Variant::kFmHsdmF0:
      return run_fm_hsdm_f0(problem, config, observer);
    case Variant::kFmHsdmIII:
      return run_fm_hsdm_iii(problem, config, observer);
    case Variant::kHsdm:
      return run_hsdm(problem, config, observer);
    case Variant::kHcgm:
      return run_hcgm(problem, config, observer);
    case Variant::kAdmm:
    case Variant::kPdCondat:
    case Variant::kPdCp:
    case Variant::kFista:
      return run_baseline(problem, config, observer);
  }
  fail(ErrorCode::kInternal, "unhandled solver variant");
}

}  // namespace fmh

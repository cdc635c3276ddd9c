#include <cmath>
#include <string>

#include "fmhsdm/error.hpp"
#include "fmhsdm/solver.hpp"
#include "solver_common.hpp"

namespace fmh {

namespace {

void require_projection(const Problem& p, Variant v) {
  require(is_idempotent(p.constraint().q()), ErrorCode::kUnsupported,
          std::string(variant_name(v)) + " needs the constraint map to be a projection");
}

double positive_or(double value, double fallback, const char* name) {
  if (std::isnan(value)) return fallback;
  require(std::isfinite(value) && value > 0.0, ErrorCode::kInvalidArgument, std::string(name) + " must be positive");
  return value;
}

// Scaled-form ADMM on min g(x) + i_{Fix T}(z) s.t. x = z; reports z.
SolverTrace run_admm(const Problem& p, const SolverConfig& c, const IterationObserver& observer) {
  require(p.smooth().is_zero(), ErrorCode::kUnsupported,
          "admm needs the smooth part folded into the nonsmooth term (resolvent form)");
  require_projection(p, c.variant);
  const double rho = positive_or(c.admm_rho, 1.0, "admm_rho");
  detail::Recorder rec(p, c, observer, false);

  Vector z = detail::initial_point(p, c);
  Vector u = Vector::Zero(z.size());
  Vector x, w;
  for (std::int64_t n = 0;; ++n) {
    if (rec.record(n, z, nullptr, nullptr) || n == c.max_iters) break;
    w = z - u;
    p.prox().prox(1.0 / rho, w, x);
    w = x + u;
    p.constraint().apply(w, z);
    u += x - z;
  }
  return rec.finish(z);
}

// Condat-Vu primal-dual splitting for min f(x) + g(x) + i_{Fix T}(x) with the
// identity as linear operator.
SolverTrace run_pd_condat(const Problem& p, const SolverConfig& c, const IterationObserver& observer) {
  require_projection(p, c.variant);
  const double lf = p.smooth().is_zero() ? 0.0 : p.smooth().lipschitz();
  const double sigma = positive_or(c.pd_sigma, lf > 0.0 ? lf : 1.0, "pd_sigma");
  const double tau = positive_or(c.pd_tau, 0.99 / (sigma + 0.5 * lf), "pd_tau");
  require(1.0 / tau - sigma >= 0.5 * lf * (1.0 - 1e-12), ErrorCode::kStepSize,
          "pd steps violate 1/tau - sigma >= L/2");
  const double relax = c.pd_relax;
  require(std::isfinite(relax) && relax > 0.0 && relax <= 1.0, ErrorCode::kInvalidArgument,
          "pd_relax must lie in (0, 1]");
  detail::Recorder rec(p, c, observer, false);

  Vector x = detail::initial_point(p, c);
  Vector y = Vector::Zero(x.size());
  Vector grad, xt, w, proj, yt;
  for (std::int64_t n = 0;; ++n) {
    if (rec.record(n, x, nullptr, nullptr) || n == c.max_iters) break;
    if (p.smooth().is_zero())
      grad = Vector::Zero(x.size());
    else
      p.smooth().gradient(x, grad);
    w = x - tau * (grad + y);
    p.prox().prox(tau, w, xt);
    w = y + sigma * (2.0 * xt - x);
    p.constraint().apply(w / sigma, proj);
    yt = w - sigma * proj;
    if (relax == 1.0) {
      x.swap(xt);
      y.swap(yt);
    } else {
      x = relax * xt + (1.0 - relax) * x;
      y = relax * yt + (1.0 - relax) * y;
    }
  }
  return rec.finish(x);
}

// Accelerated Chambolle-Pock on a consensus problem: the first block's term is
// G, the remaining blocks' terms form F(Ku) with K stacking identities.
SolverTrace run_pd_cp(const Problem& p, const SolverConfig& c, const IterationObserver& observer) {
  require(p.smooth().is_zero(), ErrorCode::kUnsupported,
          "pd-cp needs the smooth part folded into the nonsmooth term (resolvent form)");
  const auto* avg = std::get_if<SymOperator::BlockAverage>(&p.constraint().q().form());
  require(avg && avg->c == 0.0 && avg->s == 1.0 && avg->blocks >= 2, ErrorCode::kUnsupported,
          "pd-cp needs a consensus constraint over at least two blocks");
  const auto* sum = dynamic_cast<const SeparableSum*>(&p.prox());
  require(sum && sum->layout().num_blocks() == avg->blocks, ErrorCode::kUnsupported,
          "pd-cp needs a separable nonsmooth term matching the consensus blocks");

  const Index blocks = avg->blocks, bd = avg->block_dim;
  const double knorm = std::sqrt(static_cast<double>(blocks - 1));
  double tau = positive_or(c.cp_tau, 1.0 / knorm, "cp_tau");
  double sigma = positive_or(c.cp_sigma, 1.0 / (tau * knorm * knorm), "cp_sigma");
  double gamma = c.cp_gamma;
  if (std::isnan(gamma)) {
    const auto* quad = dynamic_cast<const QuadraticProx*>(&sum->term(0));
    gamma = quad ? std::max(min_eigenvalue(quad->matrix()), 0.0) : 0.0;
  }
  require(std::isfinite(gamma) && gamma >= 0.0, ErrorCode::kInvalidArgument, "cp_gamma must be nonnegative");
  detail::Recorder rec(p, c, observer, false);

  const Vector x0 = detail::initial_point(p, c);
  Vector u = Vector::Zero(bd);
  for (Index j = 0; j < blocks; ++j) u += x0.segment(j * bd, bd);
  u /= static_cast<double>(blocks);
  Vector ubar = u;
  std::vector<Vector> y(static_cast<std::size_t>(blocks - 1), Vector::Zero(bd));
  Vector w, pw, ysum, unew, full(blocks * bd);

  auto replicate = [&](const Vector& v) {
    for (Index j = 0; j < blocks; ++j) full.segment(j * bd, bd) = v;
    return full;
  };

  for (std::int64_t n = 0;; ++n) {
    if (rec.record(n, replicate(u), nullptr, nullptr) || n == c.max_iters) break;
    ysum = Vector::Zero(bd);
    for (Index j = 1; j < blocks; ++j) {
      Vector& yj = y[static_cast<std::size_t>(j - 1)];
      w = yj + sigma * ubar;
      sum->term(j).prox(1.0 / sigma, w / sigma, pw);
      yj = w - sigma * pw;
      ysum += yj;
    }
    w = u - tau * ysum;
    sum->term(0).prox(tau, w, unew);
    const double theta = 1.0 / std::sqrt(1.0 + 2.0 * gamma * tau);
    tau *= theta;
    sigma /= theta;
    ubar = unew + theta * (unew - u);
    u.swap(unew);
  }
  return rec.finish(replicate(u));
}

// FISTA with the constraint projection as proximal step.
SolverTrace run_fista(const Problem& p, const SolverConfig& c, const IterationObserver& observer) {
  require(p.prox().is_zero(), ErrorCode::kUnsupported, "fista needs a zero nonsmooth term");
  require_projection(p, c.variant);
  const double step = positive_or(c.fista_step, 1.0 / p.smooth().lipschitz(), "fista_step");
  detail::Recorder rec(p, c, observer, false);

  Vector x = detail::initial_point(p, c);
  Vector y = x, g, w, next;
  double t = 1.0;
  for (std::int64_t n = 0;; ++n) {
    if (rec.record(n, x, nullptr, nullptr) || n == c.max_iters) break;
    p.smooth().gradient(y, g);
    w = y - step * g;
    p.constraint().apply(w, next);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - x);
    x.swap(next);
    t = t_next;
  }
  return rec.finish(x);
}

}  // namespace

SolverTrace run_baseline(const Problem& problem, const SolverConfig& config, const IterationObserver& observer) {
  require(config.max_iters > 0, ErrorCode::kInvalidArgument, "max_iters must be positive");
  switch (config.variant) {
    case Variant::kAdmm:
      return run_admm(problem, config, observer);
    case Variant::kPdCondat:
      return run_pd_condat(problem, config, observer);
    case Variant::kPdCp:
      return run_pd_cp(problem, config, observer);
    case Variant::kFista:
      return run_fista(problem, config, observer);
    default:
      fail(ErrorCode::kInvalidArgument, std::string(variant_name(config.variant)) + " is not a baseline solver");
  }
}

}  // namespace fmh

#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "fmhsdm/certificate.hpp"
#include "fmhsdm/objective.hpp"
#include "fmhsdm/trace.hpp"

namespace fmh {

struct SolverConfig {
  Variant variant = Variant::kFmHsdm;
  double alpha = 0.5;
  double lambda = 0.0;
  std::int64_t max_iters = 1000;
  /// Keep iterates, half-iterates and duals in the trace.
  bool record_certificates = false;
  /// Track duals for the observer without storing them.
  bool track_duals = false;
  std::optional<Vector> x0;
  std::uint64_t seed = 0;
  /// Stop once |x_{n+1} - x_n| and |(I - T) x_{n+1}| are both below this; 0 disables.
  double early_stop_tol = 0.0;

  // HSDM: lambda_n = hsdm_c / (n + 1); NaN selects 2 (1 - alpha) / L.
  double hsdm_c = std::numeric_limits<double>::quiet_NaN();
  // HCGM: x_{n+1} = T(x_n + mu lambda_n d_n); NaN selects 1 / L.
  double hcgm_mu = std::numeric_limits<double>::quiet_NaN();
  // ADMM penalty.
  double admm_rho = 1.0;
  // Condat-Vu primal/dual steps and relaxation; NaN selects defaults from L.
  double pd_tau = std::numeric_limits<double>::quiet_NaN();
  double pd_sigma = std::numeric_limits<double>::quiet_NaN();
  double pd_relax = 1.0;
  // Chambolle-Pock initial steps and strong-convexity modulus; NaN selects defaults.
  double cp_tau = std::numeric_limits<double>::quiet_NaN();
  double cp_sigma = std::numeric_limits<double>::quiet_NaN();
  double cp_gamma = std::numeric_limits<double>::quiet_NaN();
  // FISTA step; NaN selects 1 / L.
  double fista_step = std::numeric_limits<double>::quiet_NaN();
};

/// Admissible (alpha, lambda) for the FM-HSDM family; throws kStepSize naming the bound.
/// Other variants are accepted unchanged.
void validate_step_size(Variant variant, double alpha, double lambda, double lipschitz);

/// A point drawn uniformly from the unit sphere around the known minimizer, else zero.
Vector default_initial_point(const Problem& problem, std::uint64_t seed);

/// Runs the configured variant. Throws DivergenceError on a non-finite iterate
/// or one with norm above 1e12.
SolverTrace solve(const Problem& problem, const SolverConfig& config, const IterationObserver& observer = {});

SolverTrace run_fm_hsdm(const Problem& problem, SolverConfig config, const IterationObserver& observer = {});
SolverTrace run_fm_hsdm_g0(const Problem& problem, SolverConfig config, const IterationObserver& observer = {});
SolverTrace run_fm_hsdm_f0(const Problem& problem, SolverConfig config, const IterationObserver& observer = {});
SolverTrace run_fm_hsdm_iii(const Problem& problem, SolverConfig config, const IterationObserver& observer = {});
SolverTrace run_hsdm(const Problem& problem, SolverConfig config, const IterationObserver& observer = {});
SolverTrace run_hcgm(const Problem& problem, SolverConfig config, const IterationObserver& observer = {});
/// ADMM, Condat-Vu, Chambolle-Pock or FISTA according to config.variant.
SolverTrace run_baseline(const Problem& problem, const SolverConfig& config, const IterationObserver& observer = {});

}  // namespace fmh

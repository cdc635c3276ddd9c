#include "fmhsdm/fmhsdm.h"

#include <cmath>
#include <exception>
#include <limits>
#include <new>
#include <sstream>
#include <string>

#include "fmhsdm/certificate.hpp"
#include "fmhsdm/error.hpp"
#include "fmhsdm/harness.hpp"
#include "fmhsdm/solver.hpp"

struct fmh_problem {
  fmh::Problem problem;
};

struct fmh_trace {
  fmh::SolverTrace trace;
};

namespace {

thread_local std::string g_last_error;

fmh_status set_error(fmh_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
fmh_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return FMH_OK;
  } catch (const fmh::Error& e) {
    return set_error(static_cast<fmh_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(FMH_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(FMH_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(FMH_ERR_INTERNAL, "unknown failure");
  }
}

void require_ptr(const void* p, const char* what) {
  fmh::require(p != nullptr, fmh::ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

fmh::Vector copy_in(const double* data, int64_t n) { return Eigen::Map<const fmh::Vector>(data, n); }

void copy_out(const fmh::Vector& v, double* out, int64_t len) {
  require_ptr(out, "output buffer");
  fmh::require(len == v.size(), fmh::ErrorCode::kDimensionMismatch,
               "output buffer holds " + std::to_string(len) + " entries, need " + std::to_string(v.size()));
  Eigen::Map<fmh::Vector>(out, len) = v;
}

fmh::Variant to_variant(fmh_variant v) {
  fmh::require(v >= FMH_FM_HSDM && v <= FMH_FISTA, fmh::ErrorCode::kInvalidArgument, "unknown variant");
  return static_cast<fmh::Variant>(v);
}

}  // namespace

extern "C" {

const char* fmh_last_error(void) { return g_last_error.c_str(); }

const char* fmh_status_name(fmh_status status) {
  switch (status) {
    case FMH_OK: return "ok";
    case FMH_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FMH_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case FMH_ERR_STEP_SIZE: return "step size out of range";
    case FMH_ERR_DIVERGENCE: return "divergence";
    case FMH_ERR_NOT_PSD: return "not positive semidefinite";
    case FMH_ERR_ESTIMATOR_FAILURE: return "estimator failure";
    case FMH_ERR_EMPTY_FIXED_POINT_SET: return "empty fixed-point set";
    case FMH_ERR_UNSUPPORTED: return "unsupported";
    case FMH_ERR_METRIC_CORRUPTION: return "metric corruption";
    case FMH_ERR_MISSING_DATA: return "missing data";
    case FMH_ERR_IO: return "i/o error";
    case FMH_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fmh_version(void) { return "1.0.0"; }

fmh_status fmh_problem_benchmark(fmh_problem_kind kind, int64_t d, double p11, uint64_t seed, int resolvent_form,
                                 fmh_problem** out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = nullptr;
    fmh::require(kind == FMH_PROBLEM_IIDUKA || kind == FMH_PROBLEM_HYPERPLANE, fmh::ErrorCode::kInvalidArgument,
                 "unknown problem kind");
    const auto k = kind == FMH_PROBLEM_IIDUKA ? fmh::ProblemKind::kIiduka : fmh::ProblemKind::kHyperplane;
    fmh::ProblemInstance inst = fmh::gen_problem(k, d, p11, seed);
    *out = new fmh_problem{resolvent_form ? std::move(inst.resolvent_form) : std::move(inst.primary)};
  });
}

fmh_status fmh_problem_quadratic(int64_t n, const double* p_diag, const double* q, const double* pi,
                                 const double* x_star, const double* dual_witness, fmh_problem** out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = nullptr;
    require_ptr(p_diag, "p_diag");
    require_ptr(q, "q");
    require_ptr(pi, "pi");
    fmh::require(n >= 1, fmh::ErrorCode::kInvalidArgument, "dimension must be positive");
    const fmh::Matrix qm = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(q, n, n);
    fmh::AffineFneMap t = fmh::AffineFneMap::create(fmh::SymOperator::dense(qm), copy_in(pi, n));
    std::optional<fmh::Vector> xs, w;
    if (x_star) xs = copy_in(x_star, n);
    if (dual_witness) w = copy_in(dual_witness, n);
    fmh::Problem p("quadratic", fmh::make_quadratic(fmh::SymOperator::diagonal(copy_in(p_diag, n))),
                   fmh::make_zero_term(n), std::move(t), fmh::BlockLayout::uniform(1, n), std::move(xs),
                   std::move(w));
    *out = new fmh_problem{std::move(p)};
  });
}

void fmh_problem_free(fmh_problem* problem) { delete problem; }

int64_t fmh_problem_dim(const fmh_problem* problem) { return problem ? problem->problem.dim() : 0; }

double fmh_problem_lipschitz(const fmh_problem* problem) {
  return problem ? problem->problem.smooth().lipschitz() : std::numeric_limits<double>::quiet_NaN();
}

fmh_status fmh_problem_minimizer(const fmh_problem* problem, double* out, int64_t len) {
  return guarded([&] {
    require_ptr(problem, "problem");
    const auto& xs = problem->problem.known_minimizer();
    fmh::require(xs.has_value(), fmh::ErrorCode::kMissingData, "problem has no known minimizer");
    copy_out(*xs, out, len);
  });
}

void fmh_solver_config_init(fmh_solver_config* config) {
  if (!config) return;
  const fmh::SolverConfig d;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  *config = fmh_solver_config{};
  config->variant = FMH_FM_HSDM;
  config->alpha = d.alpha;
  config->lambda = nan;
  config->max_iters = d.max_iters;
  config->record_certificates = 0;
  config->seed = d.seed;
  config->early_stop_tol = d.early_stop_tol;
  config->x0 = nullptr;
  config->hsdm_c = d.hsdm_c;
  config->hcgm_mu = d.hcgm_mu;
  config->admm_rho = d.admm_rho;
  config->pd_tau = d.pd_tau;
  config->pd_sigma = d.pd_sigma;
  config->pd_relax = d.pd_relax;
  config->cp_tau = d.cp_tau;
  config->cp_sigma = d.cp_sigma;
  config->cp_gamma = d.cp_gamma;
  config->fista_step = d.fista_step;
}

const char* fmh_variant_name(fmh_variant variant) {
  if (variant < FMH_FM_HSDM || variant > FMH_FISTA) return "unknown";
  return fmh::variant_name(static_cast<fmh::Variant>(variant)).data();
}

fmh_status fmh_variant_from_name(const char* name, fmh_variant* out) {
  return guarded([&] {
    require_ptr(name, "name");
    require_ptr(out, "out");
    const auto v = fmh::parse_variant(name);
    fmh::require(v.has_value(), fmh::ErrorCode::kInvalidArgument, std::string("unknown variant '") + name + "'");
    *out = static_cast<fmh_variant>(*v);
  });
}

fmh_status fmh_validate_step_size(fmh_variant variant, double alpha, double lambda, double lipschitz) {
  return guarded([&] { fmh::validate_step_size(to_variant(variant), alpha, lambda, lipschitz); });
}

fmh_status fmh_solve(const fmh_problem* problem, const fmh_solver_config* config, fmh_trace** out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = nullptr;
    require_ptr(problem, "problem");
    require_ptr(config, "config");
    const fmh::Problem& p = problem->problem;
    fmh::SolverConfig c;
    c.variant = to_variant(config->variant);
    c.alpha = config->alpha;
    c.lambda = config->lambda;
    if (std::isnan(c.lambda) && fmh::is_fm_hsdm(c.variant)) {
      const double l = p.smooth().lipschitz();
      if (c.variant == fmh::Variant::kFmHsdmF0)
        c.lambda = 100.0;
      else if (c.variant == fmh::Variant::kFmHsdmIII)
        c.lambda = 0.99 * 2.0 * (1.0 - c.alpha) * (1.0 - c.alpha) / l;
      else
        c.lambda = 0.99 * 2.0 * (1.0 - c.alpha) / l;
    }
    c.max_iters = config->max_iters;
    c.record_certificates = config->record_certificates != 0;
    c.seed = config->seed;
    c.early_stop_tol = config->early_stop_tol;
    if (config->x0) c.x0 = copy_in(config->x0, p.dim());
    c.hsdm_c = config->hsdm_c;
    c.hcgm_mu = config->hcgm_mu;
    c.admm_rho = config->admm_rho;
    c.pd_tau = config->pd_tau;
    c.pd_sigma = config->pd_sigma;
    c.pd_relax = config->pd_relax;
    c.cp_tau = config->cp_tau;
    c.cp_sigma = config->cp_sigma;
    c.cp_gamma = config->cp_gamma;
    c.fista_step = config->fista_step;
    *out = new fmh_trace{fmh::solve(p, c)};
  });
}

void fmh_trace_free(fmh_trace* trace) { delete trace; }

int64_t fmh_trace_length(const fmh_trace* trace) {
  return trace ? static_cast<int64_t>(trace->trace.records.size()) : 0;
}

fmh_status fmh_trace_record(const fmh_trace* trace, int64_t n, fmh_iteration_record* out) {
  return guarded([&] {
    require_ptr(trace, "trace");
    require_ptr(out, "out");
    const auto& recs = trace->trace.records;
    fmh::require(n >= 0 && n < static_cast<int64_t>(recs.size()), fmh::ErrorCode::kInvalidArgument,
                 "record index out of range");
    const fmh::IterationRecord& r = recs[static_cast<std::size_t>(n)];
    *out = fmh_iteration_record{r.n, r.distance, r.objective, r.infeasible ? 1 : 0, r.fixed_point_residual,
                                r.seconds};
  });
}

fmh_status fmh_trace_final_iterate(const fmh_trace* trace, double* out, int64_t len) {
  return guarded([&] {
    require_ptr(trace, "trace");
    copy_out(trace->trace.final_iterate, out, len);
  });
}

fmh_status fmh_trace_iterate(const fmh_trace* trace, int64_t n, double* out, int64_t len) {
  return guarded([&] {
    require_ptr(trace, "trace");
    const auto& it = trace->trace.iterates;
    fmh::require(!it.empty(), fmh::ErrorCode::kMissingData, "trace was recorded without certificates");
    fmh::require(n >= 0 && n < static_cast<int64_t>(it.size()), fmh::ErrorCode::kInvalidArgument,
                 "iterate index out of range");
    copy_out(it[static_cast<std::size_t>(n)], out, len);
  });
}

fmh_status fmh_fejer_check(const fmh_problem* problem, const fmh_trace* trace, double slack, fmh_fejer_report* out) {
  return guarded([&] {
    require_ptr(problem, "problem");
    require_ptr(trace, "trace");
    require_ptr(out, "out");
    const fmh::SolverTrace& t = trace->trace;
    const fmh::Problem& p = problem->problem;
    const fmh::OptimalPair pair = fmh::make_optimal_pair(p, t.lambda);
    const fmh::ThetaMetric metric = fmh::make_theta_metric(p.constraint(), t.alpha, fmh::metric_kind_for(t.variant));
    const fmh::FejerReport r = fmh::fejer_check(t, pair, metric, std::isnan(slack) ? 1e-10 : slack);
    out->passed = r.passed ? 1 : 0;
    out->checked = static_cast<int64_t>(r.distances.size());
    out->max_increment = r.max_increment;
    out->worst_index = r.worst_index;
    out->first_distance = r.distances.empty() ? 0.0 : r.distances.front();
    out->last_distance = r.distances.empty() ? 0.0 : r.distances.back();
  });
}

fmh_status fmh_rate_certificate(const fmh_problem* problem, const fmh_trace* trace, int64_t from,
                                fmh_rate_report* out) {
  return guarded([&] {
    require_ptr(problem, "problem");
    require_ptr(trace, "trace");
    require_ptr(out, "out");
    const fmh::Problem& p = problem->problem;
    fmh::require(p.known_minimizer().has_value(), fmh::ErrorCode::kMissingData, "problem has no known minimizer");
    const fmh::RateReport r = fmh::rate_certificate(trace->trace, p, *p.known_minimizer(), from);
    for (int i = 0; i < 3; ++i) out->sup_ratio[i] = r.sup_ratio[static_cast<std::size_t>(i)];
    out->scaled_fixed_point_ratio = r.scaled_fixed_point_ratio;
    out->delta_y_monotone = r.delta_y_monotone ? 1 : 0;
    out->max_delta_y_increase = r.max_delta_y_increase;
  });
}

void fmh_experiment_config_init(fmh_experiment_config* config) {
  if (!config) return;
  const fmh::ExperimentConfig d;
  *config = fmh_experiment_config{};
  config->problem = FMH_PROBLEM_IIDUKA;
  config->d = d.d;
  config->p11 = d.p11;
  config->runs = d.runs;
  config->iters = d.iters;
  config->solvers = "fm-hsdm";
  config->base_seed = d.base_seed;
  config->output_dir = nullptr;
  config->certificates = 0;
  config->threads = d.threads;
  config->plots = 1;
}

const char* fmh_solver_names(void) {
  static const std::string names = [] {
    std::string s;
    for (const auto& n : fmh::known_solver_names()) s += (s.empty() ? "" : ",") + n;
    return s;
  }();
  return names.c_str();
}

fmh_status fmh_problem_kind_from_name(const char* name, fmh_problem_kind* out) {
  return guarded([&] {
    require_ptr(name, "name");
    require_ptr(out, "out");
    const auto k = fmh::parse_problem_kind(name);
    fmh::require(k.has_value(), fmh::ErrorCode::kInvalidArgument,
                 std::string("unknown problem '") + name + "' (expected iiduka or hyperplane)");
    *out = *k == fmh::ProblemKind::kIiduka ? FMH_PROBLEM_IIDUKA : FMH_PROBLEM_HYPERPLANE;
  });
}

fmh_status fmh_run_experiment(const fmh_experiment_config* config, fmh_experiment_summary* summary) {
  return guarded([&] {
    require_ptr(config, "config");
    fmh::ExperimentConfig c;
    fmh::require(config->problem == FMH_PROBLEM_IIDUKA || config->problem == FMH_PROBLEM_HYPERPLANE,
                 fmh::ErrorCode::kInvalidArgument, "unknown problem kind");
    c.problem = config->problem == FMH_PROBLEM_IIDUKA ? fmh::ProblemKind::kIiduka : fmh::ProblemKind::kHyperplane;
    c.d = config->d;
    c.p11 = config->p11;
    c.runs = config->runs;
    c.iters = config->iters;
    c.solvers.clear();
    if (config->solvers) {
      std::istringstream in(config->solvers);
      std::string item;
      while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) c.solvers.push_back(item.substr(b, e - b + 1));
      }
    }
    c.base_seed = config->base_seed;
    c.output_dir = config->output_dir ? config->output_dir : "";
    c.certificates = config->certificates != 0;
    c.threads = config->threads;
    c.plots = config->plots != 0;
    const fmh::ExperimentResult r = fmh::run_experiment(c);
    if (summary) *summary = fmh_experiment_summary{r.iters, r.diverged_runs};
  });
}

fmh_status fmh_emit_plots(const char* averaged_csv, const char* out_dir) {
  return guarded([&] {
    require_ptr(averaged_csv, "averaged_csv");
    require_ptr(out_dir, "out_dir");
    fmh::emit_plots(averaged_csv, out_dir);
  });
}

}  // extern "C"

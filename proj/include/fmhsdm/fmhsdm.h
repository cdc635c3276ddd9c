#ifndef FMHSDM_H
#define FMHSDM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FMHSDM_BUILDING)
#define FMH_API __declspec(dllexport)
#else
#define FMH_API __declspec(dllimport)
#endif
#else
#define FMH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fmh_status {
  FMH_OK = 0,
  FMH_ERR_INVALID_ARGUMENT = 1,
  FMH_ERR_DIMENSION_MISMATCH = 2,
  FMH_ERR_STEP_SIZE = 3,
  FMH_ERR_DIVERGENCE = 4,
  FMH_ERR_NOT_PSD = 5,
  FMH_ERR_ESTIMATOR_FAILURE = 6,
  FMH_ERR_EMPTY_FIXED_POINT_SET = 7,
  FMH_ERR_UNSUPPORTED = 8,
  FMH_ERR_METRIC_CORRUPTION = 9,
  FMH_ERR_MISSING_DATA = 10,
  FMH_ERR_IO = 11,
  FMH_ERR_INTERNAL = 99
} fmh_status;

typedef enum fmh_variant {
  FMH_FM_HSDM = 0,
  FMH_FM_HSDM_G0 = 1,
  FMH_FM_HSDM_F0 = 2,
  FMH_FM_HSDM_III = 3,
  FMH_HSDM = 4,
  FMH_HCGM = 5,
  FMH_ADMM = 6,
  FMH_PD_CONDAT = 7,
  FMH_PD_CP = 8,
  FMH_FISTA = 9
} fmh_variant;

typedef enum fmh_problem_kind { FMH_PROBLEM_IIDUKA = 0, FMH_PROBLEM_HYPERPLANE = 1 } fmh_problem_kind;

/* Opaque handles. */
typedef struct fmh_problem fmh_problem;
typedef struct fmh_trace fmh_trace;

/* Message of the last failure on the calling thread ("" if none). */
FMH_API const char* fmh_last_error(void);
FMH_API const char* fmh_status_name(fmh_status status);
FMH_API const char* fmh_version(void);

/* ---- problems ---- */

/* Benchmark problem; resolvent_form != 0 selects the f = 0 recasting. */
FMH_API fmh_status fmh_problem_benchmark(fmh_problem_kind kind, int64_t d, double p11, uint64_t seed,
                                         int resolvent_form, fmh_problem** out);

/* min 1/2 x^T diag(p) x over Fix(Q x + pi). q is n x n row-major and symmetric.
   x_star and dual_witness (at unit step size) are optional. */
FMH_API fmh_status fmh_problem_quadratic(int64_t n, const double* p_diag, const double* q, const double* pi,
                                         const double* x_star, const double* dual_witness, fmh_problem** out);

FMH_API void fmh_problem_free(fmh_problem* problem);
FMH_API int64_t fmh_problem_dim(const fmh_problem* problem);
FMH_API double fmh_problem_lipschitz(const fmh_problem* problem);
/* Copies the known minimizer; FMH_ERR_MISSING_DATA when there is none. */
FMH_API fmh_status fmh_problem_minimizer(const fmh_problem* problem, double* out, int64_t len);

/* ---- solvers ---- */

/* NaN parameters select defaults. */
typedef struct fmh_solver_config {
  fmh_variant variant;
  double alpha;
  double lambda;
  int64_t max_iters;
  int record_certificates;
  uint64_t seed;
  double early_stop_tol;
  const double* x0; /* optional, problem dimension */
  double hsdm_c;
  double hcgm_mu;
  double admm_rho;
  double pd_tau;
  double pd_sigma;
  double pd_relax;
  double cp_tau;
  double cp_sigma;
  double cp_gamma;
  double fista_step;
} fmh_solver_config;

FMH_API void fmh_solver_config_init(fmh_solver_config* config);
FMH_API const char* fmh_variant_name(fmh_variant variant);
FMH_API fmh_status fmh_variant_from_name(const char* name, fmh_variant* out);

/* FMH_OK when (alpha, lambda) is admissible for the variant, else FMH_ERR_STEP_SIZE. */
FMH_API fmh_status fmh_validate_step_size(fmh_variant variant, double alpha, double lambda, double lipschitz);

FMH_API fmh_status fmh_solve(const fmh_problem* problem, const fmh_solver_config* config, fmh_trace** out);

typedef struct fmh_iteration_record {
  int64_t n;
  double distance;
  double objective;
  int infeasible;
  double fixed_point_residual;
  double seconds;
} fmh_iteration_record;

FMH_API void fmh_trace_free(fmh_trace* trace);
/* Number of records: iterations executed plus the initial state. */
FMH_API int64_t fmh_trace_length(const fmh_trace* trace);
FMH_API fmh_status fmh_trace_record(const fmh_trace* trace, int64_t n, fmh_iteration_record* out);
FMH_API fmh_status fmh_trace_final_iterate(const fmh_trace* trace, double* out, int64_t len);
/* Needs record_certificates. */
FMH_API fmh_status fmh_trace_iterate(const fmh_trace* trace, int64_t n, double* out, int64_t len);

/* ---- certificates ---- */

typedef struct fmh_fejer_report {
  int passed;
  int64_t checked;
  double max_increment;
  int64_t worst_index;
  double first_distance;
  double last_distance;
} fmh_fejer_report;

typedef struct fmh_rate_report {
  double sup_ratio[3]; /* fixed-set gap, dual residual, fixed-point gap */
  double scaled_fixed_point_ratio;
  int delta_y_monotone;
  double max_delta_y_increase;
} fmh_rate_report;

/* Theta-distance monotonicity against the problem's known optimal pair. */
FMH_API fmh_status fmh_fejer_check(const fmh_problem* problem, const fmh_trace* trace, double slack,
                                   fmh_fejer_report* out);
FMH_API fmh_status fmh_rate_certificate(const fmh_problem* problem, const fmh_trace* trace, int64_t from,
                                        fmh_rate_report* out);

/* ---- experiments ---- */

typedef struct fmh_experiment_config {
  fmh_problem_kind problem;
  int64_t d;
  double p11;
  int runs;
  int64_t iters; /* 0: per-problem default */
  const char* solvers; /* comma-separated names */
  uint64_t base_seed;
  const char* output_dir; /* NULL or "": no files */
  int certificates;
  int threads; /* 0: hardware concurrency */
  int plots;
} fmh_experiment_config;

typedef struct fmh_experiment_summary {
  int64_t iters;
  int aborted_runs;
} fmh_experiment_summary;

FMH_API void fmh_experiment_config_init(fmh_experiment_config* config);
/* Comma-separated list of solver names accepted by fmh_run_experiment. */
FMH_API const char* fmh_solver_names(void);
FMH_API fmh_status fmh_problem_kind_from_name(const char* name, fmh_problem_kind* out);
/* summary may be NULL. Aborted runs are reported in the summary, not as an error. */
FMH_API fmh_status fmh_run_experiment(const fmh_experiment_config* config, fmh_experiment_summary* summary);
FMH_API fmh_status fmh_emit_plots(const char* averaged_csv, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif

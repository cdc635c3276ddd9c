#include "fmhsdm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "fmhsdm/certificate.hpp"
#include "fmhsdm/error.hpp"
#include "fmhsdm/rng.hpp"

namespace fmh {

namespace {

constexpr double kPMax = 10.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kBaseMetrics = {"distance", "objective_gap", "fixed_point_residual", "infeasible"};
const std::vector<std::string> kCertificateMetrics = {"fejer_distance", "upsilon_residual", "rate_fixed_set_gap",
                                                      "rate_dual_residual", "rate_fixed_point_gap"};

void check_generator_args(Index d, double p11) {
  require(d >= 2, ErrorCode::kInvalidArgument, "d must be at least 2");
  require(std::isfinite(p11) && p11 > 0.0 && p11 <= 1.0, ErrorCode::kInvalidArgument, "p11 must lie in (0, 1]");
}

Vector unit(Index d, Index i) {
  Vector e = Vector::Zero(d);
  e(i) = 1.0;
  return e;
}

Vector stack(std::initializer_list<Vector> parts) {
  Index n = 0;
  for (const auto& p : parts) n += p.size();
  Vector out(n);
  Index off = 0;
  for (const auto& p : parts) {
    out.segment(off, p.size()) = p;
    off += p.size();
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

void append_double(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  if (std::isinf(v)) {
    out += v > 0 ? "inf" : "-inf";
    return;
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "failed writing " + path.string());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[v & 0xF];
    v >>= 4;
  }
  return std::string(buf, 16);
}

struct SolverRun {
  bool aborted = false;
  std::string message;
  std::vector<std::vector<double>> values;  // per metric, iters + 1 entries
};

struct RunOutput {
  std::uint64_t x0_hash = 0;
  std::vector<SolverRun> solvers;
};

std::vector<std::string> metrics_for(const SolverSpec& spec, bool certificates) {
  std::vector<std::string> m = kBaseMetrics;
  if (certificates && is_fm_hsdm(spec.config.variant)) m.insert(m.end(), kCertificateMetrics.begin(), kCertificateMetrics.end());
  return m;
}

SolverRun run_one(const ProblemInstance& inst, const SolverSpec& spec, const Vector& x0, std::int64_t iters,
                  bool certificates) {
  const Problem& own = spec.resolvent_form ? inst.resolvent_form : inst.primary;
  const Problem& view = inst.primary;
  const Vector& x_star = *view.known_minimizer();
  const double f_star = view.objective(x_star);
  const bool certify = certificates && is_fm_hsdm(spec.config.variant);

  SolverConfig cfg = spec.config;
  cfg.max_iters = iters;
  cfg.x0 = spec.resolvent_form ? inst.lift(x0) : x0;
  cfg.track_duals = certify;

  SolverRun out;
  const std::size_t n_metrics = kBaseMetrics.size() + (certify ? kCertificateMetrics.size() : 0);
  out.values.assign(n_metrics, std::vector<double>(static_cast<std::size_t>(iters) + 1, kNaN));

  std::optional<OptimalPair> pair;
  std::optional<ThetaMetric> metric;
  std::optional<RateTracker> rates;
  std::shared_ptr<const SymOperator> u;
  if (certify) {
    pair = make_optimal_pair(own, cfg.lambda);
    metric = make_theta_metric(own.constraint(), cfg.alpha, metric_kind_for(cfg.variant));
    u = own.constraint().sqrt_cache() ? own.constraint().sqrt_cache()
                                      : std::make_shared<const SymOperator>(sqrt_I_minus_Q(own.constraint()));
    rates.emplace(own, pair->x_star, cfg.variant, cfg.alpha, cfg.lambda, u);
  }

  Vector px, tpx;
  auto observer = [&](std::int64_t n, const Vector& x, const Vector* half, const Vector* v) {
    const auto k = static_cast<std::size_t>(n);
    const Vector* xv = &x;
    if (spec.resolvent_form && x.size() != view.dim()) {
      px = inst.project(x);
      xv = &px;
    }
    view.constraint().apply(*xv, tpx);
    out.values[0][k] = (*xv - x_star).norm();
    out.values[1][k] = std::abs(view.objective(*xv) - f_star);
    out.values[2][k] = (tpx - *xv).norm();
    out.values[3][k] = view.infeasible(*xv) ? 1.0 : 0.0;
    if (!certify) return;
    if (n >= 2 && v) out.values[4][k] = theta_norm(*metric, x - pair->x_star, *v - pair->v_star);
    if (n >= 1 && v) out.values[5][k] = upsilon_residual(x, *v, cfg.lambda, own, *u);
    rates->observe(n, x, half, v);
    if (n >= 1) {
      const RateReport& r = rates->partial();
      out.values[6][k] = r.fixed_set_gap.back();
      out.values[7][k] = r.dual_residual.back();
      out.values[8][k] = r.fixed_point_gap.back();
    }
  };

  try {
    solve(own, cfg, observer);
  } catch (const DivergenceError& e) {
    out.aborted = true;
    out.message = e.what();
  }
  return out;
}

RunOutput run_instance(const ExperimentConfig& config, const std::vector<SolverSpec>& specs, std::int64_t iters,
                       int r) {
  const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(r);
  const ProblemInstance inst = gen_problem(config.problem, config.d, config.p11, seed);
  const Vector x0 = default_initial_point(inst.primary, SplitMix64::stream(seed, 1)());
  RunOutput out;
  out.x0_hash = vector_hash(x0);
  out.solvers.reserve(specs.size());
  for (const auto& spec : specs) out.solvers.push_back(run_one(inst, spec, x0, iters, config.certificates));
  return out;
}

}  // namespace

std::string_view problem_kind_name(ProblemKind kind) {
  return kind == ProblemKind::kIiduka ? "iiduka" : "hyperplane";
}

std::optional<ProblemKind> parse_problem_kind(std::string_view name) {
  if (name == "iiduka") return ProblemKind::kIiduka;
  if (name == "hyperplane") return ProblemKind::kHyperplane;
  return std::nullopt;
}

Vector ProblemInstance::lift(const Vector& x) const {
  if (kind == ProblemKind::kIiduka) return x;
  return stack({x, x});
}

Vector ProblemInstance::project(const Vector& x) const {
  if (kind == ProblemKind::kIiduka) return x;
  const Index d = p_diagonal.size();
  require(x.size() == 2 * d, ErrorCode::kDimensionMismatch, "resolvent-form point has the wrong dimension");
  return 0.5 * (x.head(d) + x.tail(d));
}

Vector make_p_diagonal(Index d, double p11, std::uint64_t seed) {
  check_generator_args(d, p11);
  SplitMix64 rng = SplitMix64::stream(seed, 0);
  Vector p(d);
  p(0) = p11;
  p(d - 1) = kPMax;
  for (Index i = 1; i + 1 < d; ++i) {
    double u = rng.uniform();
    while (u == 0.0) u = rng.uniform();
    p(i) = p11 + (kPMax - p11) * u;
  }
  return p;
}

ProblemInstance gen_problem_iiduka(Index d, double p11, std::uint64_t seed) {
  Vector p = make_p_diagonal(d, p11, seed);
  const Vector e1 = unit(d, 0);
  const Vector zero = Vector::Zero(d);
  const BlockLayout layout = BlockLayout::uniform(3, d);
  const AffineFneMap t = make_consensus_projection(3, d).with_sqrt_cache();
  const Vector x_star = stack({e1, e1, e1});
  const Vector witness = stack({-p11 * e1, p11 * e1, zero});

  auto ball2 = make_ball_indicator(2.0 * e1, 1.0);
  auto ball3 = make_ball_indicator(zero, 2.0);

  auto f = make_quadratic(SymOperator::diagonal(stack({p, zero, zero})));
  auto g = make_separable_sum({make_zero_term(d), ball2, ball3}, layout);
  Problem primary("iiduka", f, g, t, layout, x_star, witness);

  auto g_res = make_separable_sum({make_quadratic_prox(SymOperator::diagonal(p)), ball2, ball3}, layout);
  Problem resolvent("iiduka-resolvent", make_zero_term(3 * d), g_res, t, layout, x_star, witness);
  return ProblemInstance{ProblemKind::kIiduka, std::move(primary), std::move(resolvent), std::move(p)};
}

ProblemInstance gen_problem_hyperplane(Index d, double p11, std::uint64_t seed) {
  Vector p = make_p_diagonal(d, p11, seed);
  const Vector e1 = unit(d, 0);
  const AffineFneMap v = make_hyperplane_projection(e1, 1.0);
  Problem primary("hyperplane", make_quadratic(SymOperator::diagonal(p)), make_zero_term(d), v.with_sqrt_cache(),
                  BlockLayout::uniform(1, d), e1, Vector(-p11 * e1));

  const BlockLayout layout = BlockLayout::uniform(2, d);
  auto g_res = make_separable_sum({make_quadratic_prox(SymOperator::diagonal(p)), make_affine_set_indicator(v)}, layout);
  Problem resolvent("hyperplane-resolvent", make_zero_term(2 * d), g_res,
                    make_consensus_projection(2, d).with_sqrt_cache(), layout, stack({e1, e1}),
                    stack({-p11 * e1, p11 * e1}));
  return ProblemInstance{ProblemKind::kHyperplane, std::move(primary), std::move(resolvent), std::move(p)};
}

ProblemInstance gen_problem(ProblemKind kind, Index d, double p11, std::uint64_t seed) {
  return kind == ProblemKind::kIiduka ? gen_problem_iiduka(d, p11, seed) : gen_problem_hyperplane(d, p11, seed);
}

const std::vector<std::string>& known_solver_names() {
  static const std::vector<std::string> names = {"fm-hsdm", "fm-hsdm-g0", "fm-hsdm-ii", "fm-hsdm-f0",
                                                 "fm-hsdm-iii", "hsdm", "hcgm", "admm",
                                                 "pd-condat", "pd-condat-ii", "pd-cp", "fista"};
  return names;
}

SolverSpec default_solver_spec(const std::string& name, ProblemKind kind, double lipschitz) {
  require(std::isfinite(lipschitz) && lipschitz > 0.0, ErrorCode::kInvalidArgument,
          "Lipschitz constant must be positive");
  const bool hyperplane = kind == ProblemKind::kHyperplane;
  auto needs_hyperplane = [&](const char* why) {
    require(hyperplane, ErrorCode::kUnsupported,
            "solver " + name + " is not available on the " + std::string(problem_kind_name(kind)) + " problem (" +
                why + ")");
  };

  SolverSpec s;
  s.name = name;
  SolverConfig& c = s.config;
  c.alpha = 0.5;
  const double step = 0.99 * 2.0 * (1.0 - c.alpha) / lipschitz;
  if (name == "fm-hsdm") {
    c.variant = Variant::kFmHsdm;
    c.lambda = step;
  } else if (name == "fm-hsdm-g0") {
    needs_hyperplane("needs a zero nonsmooth term");
    c.variant = Variant::kFmHsdmG0;
    c.lambda = step;
  } else if (name == "fm-hsdm-ii" || name == "fm-hsdm-f0") {
    c.variant = Variant::kFmHsdmF0;
    c.lambda = 100.0;
    s.resolvent_form = true;
  } else if (name == "fm-hsdm-iii") {
    needs_hyperplane("needs a zero nonsmooth term");
    c.variant = Variant::kFmHsdmIII;
    c.lambda = 0.99 * 2.0 * (1.0 - c.alpha) * (1.0 - c.alpha) / lipschitz;
  } else if (name == "hsdm") {
    c.variant = Variant::kHsdm;
  } else if (name == "hcgm") {
    c.variant = Variant::kHcgm;
  } else if (name == "admm") {
    c.variant = Variant::kAdmm;
    c.admm_rho = 3.0;
    s.resolvent_form = true;
  } else if (name == "pd-condat") {
    c.variant = Variant::kPdCondat;
  } else if (name == "pd-condat-ii") {
    c.variant = Variant::kPdCondat;
    s.resolvent_form = true;
  } else if (name == "pd-cp") {
    c.variant = Variant::kPdCp;
    s.resolvent_form = true;
  } else if (name == "fista") {
    needs_hyperplane("needs a zero nonsmooth term");
    c.variant = Variant::kFista;
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown solver '" + name + "'");
  }
  return s;
}

std::int64_t default_iters(ProblemKind kind) { return kind == ProblemKind::kIiduka ? 2000 : 5000; }

void validate_experiment(const ExperimentConfig& config) {
  check_generator_args(config.d, config.p11);
  require(config.runs >= 1, ErrorCode::kInvalidArgument, "runs must be at least 1");
  require(config.iters >= 0, ErrorCode::kInvalidArgument, "iters must be positive");
  require(config.threads >= 0, ErrorCode::kInvalidArgument, "threads must be nonnegative");
  require(!config.solvers.empty(), ErrorCode::kInvalidArgument, "solver list is empty");
  for (std::size_t i = 0; i < config.solvers.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j)
      require(config.solvers[i] != config.solvers[j], ErrorCode::kInvalidArgument,
              "solver '" + config.solvers[i] + "' listed twice");
    const SolverSpec spec = default_solver_spec(config.solvers[i], config.problem, kPMax);
    validate_step_size(spec.config.variant, spec.config.alpha, spec.config.lambda, kPMax);
  }
}

const std::vector<double>& CurveSet::curve(const std::string& solver, const std::string& metric) const {
  const auto s = mean.find(solver);
  require(s != mean.end(), ErrorCode::kMissingData, "no curves for solver '" + solver + "'");
  const auto m = s->second.find(metric);
  require(m != s->second.end(), ErrorCode::kMissingData,
          "solver '" + solver + "' has no metric '" + metric + "'");
  return m->second;
}

std::uint64_t vector_hash(const Vector& x) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (Index i = 0; i < x.size(); ++i) {
    unsigned char bytes[sizeof(double)];
    const double v = x(i);
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

std::string format_double(double v) {
  std::string s;
  append_double(s, v);
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_experiment(config);
  const std::int64_t iters = config.iters > 0 ? config.iters : default_iters(config.problem);

  std::vector<SolverSpec> specs;
  for (const auto& name : config.solvers) specs.push_back(default_solver_spec(name, config.problem, kPMax));

  std::vector<RunOutput> outputs(static_cast<std::size_t>(config.runs));
  int threads = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, config.runs);

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (int r = next++; r < config.runs; r = next++) {
      try {
        outputs[static_cast<std::size_t>(r)] = run_instance(config, specs, iters, r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = config.runs;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  ExperimentResult result;
  result.iters = iters;
  CurveSet& curves = result.curves;
  curves.solvers = config.solvers;
  const auto len = static_cast<std::size_t>(iters) + 1;

  auto& log = result.log;
  log.push_back("problem=" + std::string(problem_kind_name(config.problem)));
  log.push_back("d=" + std::to_string(config.d));
  log.push_back("p11=" + format_double(config.p11));
  log.push_back("runs=" + std::to_string(config.runs));
  log.push_back("iters=" + std::to_string(iters) + (config.iters > 0 ? "" : " (default)"));
  log.push_back("seed=" + std::to_string(config.base_seed));
  log.push_back("solvers=" + join(config.solvers));
  log.push_back(std::string("certificates=") + (config.certificates ? "on" : "off"));
  for (const auto& spec : specs) {
    const SolverConfig& c = spec.config;
    std::string line = "solver " + spec.name + ": variant=" + std::string(variant_name(c.variant));
    if (is_fm_hsdm(c.variant)) line += " alpha=" + format_double(c.alpha) + " lambda=" + format_double(c.lambda);
    if (c.variant == Variant::kAdmm) line += " rho=" + format_double(c.admm_rho);
    line += spec.resolvent_form ? " form=resolvent" : " form=primary";
    log.push_back(line);
  }

  for (std::size_t s = 0; s < specs.size(); ++s) {
    const std::string& name = specs[s].name;
    const auto metrics = metrics_for(specs[s], config.certificates);
    curves.metrics[name] = metrics;
    auto& means = curves.mean[name];
    int completed = 0;
    for (const auto& m : metrics) means[m].assign(len, 0.0);
    for (const auto& out : outputs) {
      const SolverRun& run = out.solvers[s];
      if (run.aborted) continue;
      ++completed;
      for (std::size_t m = 0; m < metrics.size(); ++m) {
        auto& acc = means[metrics[m]];
        for (std::size_t k = 0; k < len; ++k) acc[k] += run.values[m][k];
      }
    }
    for (const auto& m : metrics)
      for (auto& v : means[m]) v = completed > 0 ? v / completed : kNaN;
    curves.completed_runs[name] = completed;
  }

  for (int r = 0; r < config.runs; ++r) {
    const RunOutput& out = outputs[static_cast<std::size_t>(r)];
    log.push_back("run " + std::to_string(r) + " seed=" + std::to_string(config.base_seed + static_cast<std::uint64_t>(r)) +
                  " x0_fnv1a=" + hex64(out.x0_hash));
    for (std::size_t s = 0; s < specs.size(); ++s) {
      if (!out.solvers[s].aborted) continue;
      ++result.diverged_runs;
      log.push_back("run " + std::to_string(r) + " solver " + specs[s].name + " aborted: " + out.solvers[s].message);
    }
  }
  log.push_back("aborted_runs=" + std::to_string(result.diverged_runs));

  if (config.output_dir.empty()) return result;

  const std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create output directory " + dir.string() + ": " + ec.message());

  for (std::size_t s = 0; s < specs.size(); ++s) {
    const std::string& name = specs[s].name;
    const auto& metrics = curves.metrics[name];
    std::string csv = "solver,run,iter,metric,value\n";
    csv.reserve(static_cast<std::size_t>(config.runs) * metrics.size() * len * 40);
    for (int r = 0; r < config.runs; ++r) {
      const SolverRun& run = outputs[static_cast<std::size_t>(r)].solvers[s];
      if (run.aborted) continue;
      const std::string prefix = name + ',' + std::to_string(r) + ',';
      for (std::size_t m = 0; m < metrics.size(); ++m) {
        for (std::size_t k = 0; k < len; ++k) {
          csv += prefix;
          csv += std::to_string(k);
          csv += ',';
          csv += metrics[m];
          csv += ',';
          append_double(csv, run.values[m][k]);
          csv += '\n';
        }
      }
    }
    write_file(dir / (name + ".csv"), csv);
  }

  std::string avg = "solver,iter,metric,mean\n";
  for (const auto& name : curves.solvers) {
    for (const auto& metric : curves.metrics[name]) {
      const auto& values = curves.mean[name][metric];
      for (std::size_t k = 0; k < len; ++k) {
        avg += name;
        avg += ',';
        avg += std::to_string(k);
        avg += ',';
        avg += metric;
        avg += ',';
        append_double(avg, values[k]);
        avg += '\n';
      }
    }
  }
  const auto averaged = dir / "averaged.csv";
  write_file(averaged, avg);

  std::string log_text;
  for (const auto& line : log) log_text += line + '\n';
  write_file(dir / "run_log.txt", log_text);

  if (config.plots) emit_plots(averaged.string(), dir.string());
  return result;
}

}  // namespace fmh

#include "fmhsdm/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fmhsdm/error.hpp"

namespace fmh {

namespace {

double sup_ratio(const std::vector<double>& series, std::int64_t from) {
  const auto start = static_cast<std::size_t>(from);
  require(series.size() > start, ErrorCode::kMissingData,
          "trace too short for a rate certificate starting at n = " + std::to_string(from));
  const double base = series[start];
  const double sup = *std::max_element(series.begin() + static_cast<std::ptrdiff_t>(start), series.end());
  if (base > 0.0) return sup / base;
  return sup > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

std::shared_ptr<const SymOperator> sqrt_of(const AffineFneMap& map) {
  if (map.sqrt_cache()) return map.sqrt_cache();
  return std::make_shared<const SymOperator>(sqrt_I_minus_Q(map));
}

}  // namespace

DualState make_dual_state(const AffineFneMap& map, double alpha, std::optional<Vector> w_star) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument,
          "alpha must lie in (0, 1)");
  DualState s;
  s.alpha = alpha;
  s.w_star = w_star ? std::move(*w_star) : fixed_point_witness(map);
  require(s.w_star.size() == map.dim(), ErrorCode::kDimensionMismatch, "fixed-point witness dimension mismatch");
  require(fixed_point_residual(map, s.w_star) <= 1e-8 * (1.0 + map.pi().norm()), ErrorCode::kInvalidArgument,
          "dual anchor is not a fixed point of the constraint map");
  s.u = sqrt_of(map);
  return s;
}

void advance_dual(DualState& state, const Vector& x_next) {
  require(x_next.size() == state.w_star.size(), ErrorCode::kDimensionMismatch, "dual update dimension mismatch");
  Vector step = state.u->operator*(x_next - state.w_star);
  if (state.started())
    state.v += (1.0 - state.alpha) * step;
  else
    state.v = (1.0 - state.alpha) * step;
}

DualState update_dual(const DualState& state, const Vector& x_next) {
  DualState next = state;
  advance_dual(next, x_next);
  return next;
}

ThetaMetric make_theta_metric(const AffineFneMap& map, double alpha, MetricKind kind) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument,
          "alpha must lie in (0, 1)");
  SymOperator qa = map.q().affine(alpha, 1.0 - alpha);
  const double lo = min_eigenvalue(qa);
  require(lo >= (1.0 - alpha) - 1e-10, ErrorCode::kMetricCorruption,
          "averaged linear part is not strongly positive (min eigenvalue " + num(lo) + ")");
  return ThetaMetric{std::move(qa), alpha, kind};
}

MetricKind metric_kind_for(Variant v) { return v == Variant::kFmHsdmIII ? MetricKind::kUpsilon : MetricKind::kTheta; }

double theta_norm(const ThetaMetric& metric, const Vector& x, const Vector& v) {
  require(x.size() == metric.q_alpha.dim() && v.size() == x.size(), ErrorCode::kDimensionMismatch,
          "metric dimension mismatch");
  const Vector qx = metric.q_alpha * x;
  const double scale = 1.0 / (1.0 - metric.alpha);
  double sq = 0.0;
  if (metric.kind == MetricKind::kTheta)
    sq = x.dot(qx) + scale * v.squaredNorm();
  else
    sq = qx.squaredNorm() + scale * v.dot(metric.q_alpha * v);
  if (sq < -1e-12) fail(ErrorCode::kMetricCorruption, "negative squared metric norm " + num(sq));
  return std::sqrt(std::max(sq, 0.0));
}

double upsilon_residual(const Vector& x, const Vector& v, double lambda, const Problem& problem,
                        const SymOperator& u) {
  require(x.size() == problem.dim() && v.size() == problem.dim(), ErrorCode::kDimensionMismatch,
          "residual argument dimension mismatch");
  const double fixed = fixed_point_residual(problem.constraint(), x);
  Vector w = x - u * v;
  if (!problem.smooth().is_zero()) w -= lambda * problem.smooth().gradient(x);
  const Vector z = problem.prox().prox(lambda, w);
  return fixed + (x - z).norm();
}

double upsilon_residual(const Vector& x, const Vector& v, double lambda, const Problem& problem) {
  return upsilon_residual(x, v, lambda, problem, *sqrt_of(problem.constraint()));
}

OptimalPair make_optimal_pair(const Problem& problem, double lambda) {
  require(problem.known_minimizer().has_value(), ErrorCode::kMissingData, "problem has no known minimizer");
  require(problem.known_dual_witness().has_value(), ErrorCode::kMissingData, "problem has no known dual witness");
  require(std::isfinite(lambda) && lambda > 0.0, ErrorCode::kInvalidArgument, "lambda must be positive");
  OptimalPair pair{*problem.known_minimizer(), lambda * *problem.known_dual_witness(), lambda};
  const double fixed = fixed_point_residual(problem.constraint(), pair.x_star);
  require(fixed <= 1e-8, ErrorCode::kInvalidArgument, "optimal point is not in Fix T");
  const double res = upsilon_residual(pair.x_star, pair.v_star, lambda, problem);
  require(res <= 1e-6, ErrorCode::kInvalidArgument,
          "optimal pair fails the membership test (residual " + num(res) + ")");
  return pair;
}

FejerTracker::FejerTracker(OptimalPair pair, ThetaMetric metric, double slack)
    : pair_(std::move(pair)), metric_(std::move(metric)), slack_(slack) {}

void FejerTracker::observe(std::int64_t n, const Vector& x, const Vector& v) {
  if (n < 2) return;
  const double d = theta_norm(metric_, x - pair_.x_star, v - pair_.v_star);
  if (!report_.distances.empty()) {
    const double prev = report_.distances.back();
    const double inc = d - prev;
    if (inc > report_.max_increment) {
      report_.max_increment = inc;
      report_.worst_index = n;
    }
    if (inc > slack_ * (1.0 + d)) report_.passed = false;
  }
  report_.indices.push_back(n);
  report_.distances.push_back(d);
}

FejerReport fejer_check(const SolverTrace& trace, const OptimalPair& pair, const ThetaMetric& metric, double slack) {
  require(trace.has_duals() && trace.duals.size() == trace.iterates.size(), ErrorCode::kMissingData,
          "trace carries no dual sequence; run with certificates on");
  FejerTracker tracker(pair, metric, slack);
  for (std::size_t n = 2; n < trace.iterates.size(); ++n)
    tracker.observe(static_cast<std::int64_t>(n), trace.iterates[n], trace.duals[n]);
  return tracker.report();
}

RateTracker::RateTracker(const Problem& problem, Vector x_star, Variant variant, double alpha, double lambda,
                         std::shared_ptr<const SymOperator> u)
    : problem_(&problem),
      x_star_(std::move(x_star)),
      variant_(variant),
      alpha_(alpha),
      lambda_(lambda),
      u_(u ? std::move(u) : sqrt_of(problem.constraint())),
      i_minus_q_(problem.constraint().q().affine(-1.0, 1.0)),
      metric_(make_theta_metric(problem.constraint(), alpha, MetricKind::kTheta)) {
  require(x_star_.size() == problem.dim(), ErrorCode::kDimensionMismatch, "optimal point dimension mismatch");
}

void RateTracker::observe(std::int64_t n, const Vector& x, const Vector* half, const Vector* v) {
  if (n >= 1 && has_prev_) {
    require(v != nullptr, ErrorCode::kMissingData, "rate certificate needs the dual sequence");
    require(half != nullptr, ErrorCode::kMissingData, "rate certificate needs half-iterates");
    const double nu1 = static_cast<double>(n);  // nu + 1

    const Vector d = x - x_star_;
    sums_[0] += d.dot(i_minus_q_ * d);

    Vector r = *u_ * *v;
    r += *half - x;
    if (!problem_->smooth().is_zero()) {
      if (variant_ == Variant::kFmHsdmIII) {
        const Vector at = alpha_ * problem_->constraint().apply(prev_x_) + (1.0 - alpha_) * prev_x_;
        r += lambda_ * problem_->smooth().gradient(at);
      } else {
        r += lambda_ * problem_->smooth().gradient(prev_x_);
      }
    }
    sums_[1] += r.squaredNorm();

    const double fp = fixed_point_residual(problem_->constraint(), x);
    sums_[2] += fp * fp;

    acc_.fixed_set_gap.push_back(sums_[0]);
    acc_.dual_residual.push_back(sums_[1]);
    acc_.fixed_point_gap.push_back(sums_[2]);
    acc_.scaled_fixed_point.push_back(nu1 * fp * fp);

    if (prev_v_.size() > 0) acc_.delta_y.push_back(theta_norm(metric_, x - prev_x_, *v - prev_v_));
  }
  prev_x_ = x;
  if (v) prev_v_ = *v;
  has_prev_ = true;
}

RateReport RateTracker::report(std::int64_t from, double monotone_slack) const {
  RateReport rep = acc_;
  rep.sup_ratio = {sup_ratio(rep.fixed_set_gap, from), sup_ratio(rep.dual_residual, from),
                   sup_ratio(rep.fixed_point_gap, from)};
  rep.scaled_fixed_point_ratio = sup_ratio(rep.scaled_fixed_point, from);
  rep.max_delta_y_increase = 0.0;
  rep.delta_y_monotone = true;
  for (std::size_t k = 1; k < rep.delta_y.size(); ++k) {
    const double inc = rep.delta_y[k] - rep.delta_y[k - 1];
    rep.max_delta_y_increase = std::max(rep.max_delta_y_increase, inc);
    if (inc > monotone_slack * (1.0 + rep.delta_y[k - 1])) rep.delta_y_monotone = false;
  }
  return rep;
}

RateReport rate_certificate(const SolverTrace& trace, const Problem& problem, const Vector& x_star,
                            std::int64_t from) {
  require(trace.has_duals() && trace.duals.size() == trace.iterates.size(), ErrorCode::kMissingData,
          "trace carries no dual sequence; run with certificates on");
  require(trace.half_iterates.size() + 1 == trace.iterates.size(), ErrorCode::kMissingData,
          "trace carries no half-iterates");
  RateTracker tracker(problem, x_star, trace.variant, trace.alpha, trace.lambda, nullptr);
  for (std::size_t n = 0; n < trace.iterates.size(); ++n) {
    const Vector* half = n >= 1 ? &trace.half_iterates[n - 1] : nullptr;
    const Vector* v = n >= 1 ? &trace.duals[n] : nullptr;
    tracker.observe(static_cast<std::int64_t>(n), trace.iterates[n], half, v);
  }
  return tracker.report(from);
}

}  // namespace fmh

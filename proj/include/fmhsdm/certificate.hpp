#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "fmhsdm/affine_map.hpp"
#include "fmhsdm/objective.hpp"
#include "fmhsdm/trace.hpp"

namespace fmh {

/// Dual sequence v_{n+1} = v_n + (1 - alpha) U (x_{n+1} - w_*), with v_1 = (1 - alpha) U (x_1 - w_*).
struct DualState {
  Vector v;  // empty until the first update
  Vector w_star;
  double alpha = 0.5;
  std::shared_ptr<const SymOperator> u;

  bool started() const { return v.size() > 0; }
};

/// `w_star` defaults to fixed_point_witness(map).
DualState make_dual_state(const AffineFneMap& map, double alpha, std::optional<Vector> w_star = std::nullopt);
DualState update_dual(const DualState& state, const Vector& x_next);
void advance_dual(DualState& state, const Vector& x_next);

enum class MetricKind {
  kTheta,    // <x, Q_a x> + |v|^2 / (1 - a)
  kUpsilon,  // <x, Q_a^2 x> + <v, Q_a v> / (1 - a)
};

struct ThetaMetric {
  SymOperator q_alpha;
  double alpha;
  MetricKind kind;
};

ThetaMetric make_theta_metric(const AffineFneMap& map, double alpha, MetricKind kind = MetricKind::kTheta);
MetricKind metric_kind_for(Variant v);

/// Throws kMetricCorruption when the squared norm is below -1e-12.
double theta_norm(const ThetaMetric& metric, const Vector& x, const Vector& v);

struct OptimalPair {
  Vector x_star;
  Vector v_star;
  double lambda;
};

/// (x_*, lambda * dual witness) from the problem's known data; checks membership.
OptimalPair make_optimal_pair(const Problem& problem, double lambda);

/// |(I - T) x| + |x - prox_{lambda g}(x - lambda grad f(x) - U v)|.
double upsilon_residual(const Vector& x, const Vector& v, double lambda, const Problem& problem,
                        const SymOperator& u);
double upsilon_residual(const Vector& x, const Vector& v, double lambda, const Problem& problem);

struct FejerReport {
  std::vector<std::int64_t> indices;
  std::vector<double> distances;
  double max_increment = 0.0;
  std::int64_t worst_index = -1;
  bool passed = true;
};

/// Streams Theta-distances to an optimal pair from n = 2 on.
class FejerTracker {
 public:
  FejerTracker(OptimalPair pair, ThetaMetric metric, double slack = 1e-10);
  void observe(std::int64_t n, const Vector& x, const Vector& v);
  const FejerReport& report() const { return report_; }

 private:
  OptimalPair pair_;
  ThetaMetric metric_;
  double slack_;
  FejerReport report_;
};

/// Requires a trace recorded with certificates.
FejerReport fejer_check(const SolverTrace& trace, const OptimalPair& pair, const ThetaMetric& metric,
                        double slack = 1e-10);

struct RateReport {
  // Entry k holds (k + 1) times the running average over nu = 0..k.
  std::vector<double> fixed_set_gap;     // <x_{nu+1} - x_*, (I - Q)(x_{nu+1} - x_*)>
  std::vector<double> dual_residual;     // |U v_{nu+1} + lambda (grad f(x_nu) + xi_{nu+1})|^2
  std::vector<double> fixed_point_gap;   // |(I - T) x_{nu+1}|^2
  std::array<double, 3> sup_ratio{};     // sup over k >= from of series[k] / series[from]

  // Per-iterate quantities, meaningful for the gradient-free variant.
  std::vector<double> scaled_fixed_point;  // (nu + 1) |(I - T) x_{nu+1}|^2
  double scaled_fixed_point_ratio = 0.0;   // max over nu >= from / value at from
  std::vector<double> delta_y;             // |y_{n+1} - y_n|_Theta, n >= 1
  double max_delta_y_increase = 0.0;
  bool delta_y_monotone = true;

  bool sup_ratio_within(double bound) const {
    return sup_ratio[0] <= bound && sup_ratio[1] <= bound && sup_ratio[2] <= bound;
  }
};

/// Streams the running-average rate quantities.
class RateTracker {
 public:
  RateTracker(const Problem& problem, Vector x_star, Variant variant, double alpha, double lambda,
              std::shared_ptr<const SymOperator> u);
  void observe(std::int64_t n, const Vector& x, const Vector* half, const Vector* v);
  RateReport report(std::int64_t from = 10, double monotone_slack = 1e-12) const;
  /// Series accumulated so far, without the summary fields.
  const RateReport& partial() const { return acc_; }

 private:
  const Problem* problem_;
  Vector x_star_;
  Variant variant_;
  double alpha_;
  double lambda_;
  std::shared_ptr<const SymOperator> u_;
  SymOperator i_minus_q_;
  ThetaMetric metric_;
  Vector prev_x_, prev_v_;
  bool has_prev_ = false;
  double sums_[3] = {0.0, 0.0, 0.0};
  RateReport acc_;
};

RateReport rate_certificate(const SolverTrace& trace, const Problem& problem, const Vector& x_star,
                            std::int64_t from = 10);

}  // namespace fmh

#include "fmhsdm/affine_map.hpp"

#include <cmath>
#include <string>

#include "fmhsdm/error.hpp"
#include "fmhsdm/rng.hpp"

namespace fmh {

namespace {

constexpr double kSpectralSlack = 1e-10;
constexpr double kWitnessTol = 1e-8;

double witness_tolerance(const Vector& pi) { return kWitnessTol * (1.0 + pi.norm()); }

bool is_fixed_by(const AffineFneMap& map, const Vector& w) {
  return fixed_point_residual(map, w) <= witness_tolerance(map.pi());
}

bool is_exact_identity(const AffineMap& m) {
  const auto* s = std::get_if<SymOperator::ScaledIdentity>(&m.q.form());
  return s && s->c == 1.0 && m.pi.cwiseAbs().maxCoeff() == 0.0;
}

void check_weights(std::span<const double> weights, std::size_t count, bool allow_one) {
  require(weights.size() == count, ErrorCode::kDimensionMismatch, "weight count does not match map count");
  double sum = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w > 0.0 && (allow_one ? w <= 1.0 : w < 1.0), ErrorCode::kInvalidArgument,
            std::string("weights must lie in (0, 1") + (allow_one ? "]" : ")"));
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-12, ErrorCode::kInvalidArgument, "weights must sum to 1");
}

void check_unit_interval(double v, const char* name) {
  require(std::isfinite(v) && v > 0.0 && v <= 1.0, ErrorCode::kInvalidArgument,
          std::string(name) + " must lie in (0, 1]");
}

void check_system(const Matrix& a, const Vector& b) {
  require(a.rows() > 0 && a.cols() > 0, ErrorCode::kInvalidArgument, "system matrix is empty");
  require(a.rows() == b.size(), ErrorCode::kDimensionMismatch, "matrix rows and right-hand side differ");
  require(a.allFinite() && b.allFinite(), ErrorCode::kInvalidArgument, "system has non-finite entries");
}

// (1 - mix) Id + mix * sum_k w_k P_k over the hyperplanes {<row_k, x> = rhs_k};
// zero rows contribute the identity.
AffineFneMap hyperplane_average(const Matrix& rows, const Vector& rhs, const std::vector<double>& weights,
                                double mix) {
  const Index n = rows.cols();
  std::vector<AffineFneMap> maps;
  maps.reserve(static_cast<std::size_t>(rows.rows()));
  for (Index k = 0; k < rows.rows(); ++k) {
    const Vector row = rows.row(k).transpose();
    if (row.cwiseAbs().maxCoeff() == 0.0)
      maps.push_back(AffineFneMap::identity(n));
    else
      maps.push_back(make_hyperplane_projection(row, rhs(k)));
  }
  AffineFneMap avg = convex_combine(maps, weights);
  if (mix == 1.0) return avg;
  const std::vector<AffineFneMap> pair{avg, AffineFneMap::identity(n)};
  const std::vector<double> w{mix, 1.0 - mix};
  return convex_combine(pair, w);
}

std::vector<double> resolve_weights(const std::vector<double>& given, Index count) {
  if (given.empty()) return std::vector<double>(static_cast<std::size_t>(count), 1.0 / static_cast<double>(count));
  require(static_cast<Index>(given.size()) == count, ErrorCode::kDimensionMismatch,
          "expected " + std::to_string(count) + " weights");
  check_weights(given, given.size(), count == 1);
  return given;
}

AffineFneMap grad_step_map(const Matrix& a, const Vector& b, double rho, double mu) {
  check_unit_interval(mu, "mu");
  const Matrix gram = a.transpose() * a;
  const double na2 = a.size() == 0 ? 0.0 : spectral_norm(SymOperator::dense(0.5 * (gram + gram.transpose())));
  if (rho <= 0.0) rho = na2 > 0.0 ? na2 : 1.0;
  require(std::isfinite(rho) && rho >= na2 * (1.0 - 1e-10), ErrorCode::kInvalidArgument,
          "rho must be at least |A|^2 = " + num(na2));
  const double t = mu / rho;
  const Index n = a.cols();
  Matrix q = Matrix::Identity(n, n) - t * gram;
  return AffineFneMap::create(SymOperator::dense(0.5 * (q + q.transpose())), t * (a.transpose() * b));
}

AffineFneMap ker_projection_map(const Matrix& a, const Vector& b) {
  const Matrix ap = pseudoinverse(a);
  const Index n = a.cols();
  Matrix q = Matrix::Identity(n, n) - row_space_projector(a);
  Vector pi = ap * b;
  return AffineFneMap::create(SymOperator::dense(0.5 * (q + q.transpose())), pi, pi);
}

AffineFneMap resolvent_map(const Matrix& a, const Vector& b, double gamma) {
  require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::kInvalidArgument, "gamma must be positive");
  const Index n = a.cols();
  Matrix m = Matrix::Identity(n, n) + gamma * (a.transpose() * a);
  const SymOperator r = inverse(SymOperator::dense(0.5 * (m + m.transpose())));
  Vector pi = gamma * (r * Vector(a.transpose() * b));
  return AffineFneMap::create(r, std::move(pi));
}

}  // namespace

Vector AffineMap::apply(const Vector& x) const {
  Vector out = q * x;
  out += pi;
  return out;
}

AffineFneMap AffineFneMap::create(SymOperator q, Vector pi, std::optional<Vector> witness) {
  require(pi.size() == q.dim(), ErrorCode::kDimensionMismatch, "offset and operator dimensions differ");
  require_finite(pi, "offset");
  const auto [lo, hi] = eigenvalue_range(q);
  require(lo >= -kSpectralSlack, ErrorCode::kInvalidArgument,
          "linear part has a negative eigenvalue " + num(lo));
  require(std::max(std::abs(lo), std::abs(hi)) <= 1.0 + kSpectralSlack, ErrorCode::kInvalidArgument,
          "linear part has spectral norm above 1: " + num(std::max(std::abs(lo), std::abs(hi))));
  AffineFneMap map;
  map.q_ = std::make_shared<const SymOperator>(std::move(q));
  map.pi_ = std::move(pi);
  if (witness) return map.with_witness(std::move(*witness));
  return map;
}

AffineFneMap AffineFneMap::identity(Index n) {
  return create(SymOperator::identity(n), Vector::Zero(n), Vector::Zero(n));
}

void AffineFneMap::apply(const Vector& x, Vector& out) const {
  q_->apply(x, out);
  out += pi_;
}

Vector AffineFneMap::apply(const Vector& x) const {
  Vector out;
  apply(x, out);
  return out;
}

AffineFneMap AffineFneMap::with_sqrt_cache() const {
  AffineFneMap copy = *this;
  if (!copy.u_) copy.u_ = std::make_shared<const SymOperator>(psd_sqrt(q_->affine(-1.0, 1.0)));
  return copy;
}

AffineFneMap AffineFneMap::with_witness(Vector w) const {
  require(w.size() == dim(), ErrorCode::kDimensionMismatch, "witness dimension mismatch");
  require_finite(w, "witness");
  AffineFneMap copy = *this;
  const double res = fixed_point_residual(copy, w);
  require(res <= witness_tolerance(pi_), ErrorCode::kInvalidArgument,
          "witness is not a fixed point (residual " + num(res) + ")");
  copy.witness_ = std::move(w);
  return copy;
}

MembershipReport validate_membership(const SymOperator& q, const Vector& pi, int pairs, std::uint64_t seed) {
  MembershipReport rep;
  if (pi.size() != q.dim()) {
    rep.failures.push_back("offset and operator dimensions differ");
    return rep;
  }
  if (const auto* d = std::get_if<SymOperator::Dense>(&q.form())) {
    const double scale = std::max(1.0, d->m.cwiseAbs().maxCoeff());
    rep.symmetric = (d->m - d->m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
    if (!rep.symmetric) rep.failures.push_back("linear part is not symmetric");
  }
  const auto [lo, hi] = eigenvalue_range(q);
  rep.min_eigenvalue = lo;
  rep.spectral_norm = std::max(std::abs(lo), std::abs(hi));
  rep.positive = lo >= -kSpectralSlack;
  if (!rep.positive) rep.failures.push_back("negative eigenvalue " + num(lo));
  rep.norm_bounded = rep.spectral_norm <= 1.0 + kSpectralSlack;
  if (!rep.norm_bounded) rep.failures.push_back("spectral norm " + num(rep.spectral_norm) + " above 1");

  SplitMix64 rng(seed);
  const Index n = q.dim();
  Vector x(n), y(n), tx, ty;
  rep.worst_fne_violation = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < pairs; ++k) {
    for (Index i = 0; i < n; ++i) {
      x(i) = 2.0 * rng.uniform() - 1.0;
      y(i) = 2.0 * rng.uniform() - 1.0;
    }
    q.apply(x, tx);
    tx += pi;
    q.apply(y, ty);
    ty += pi;
    const Vector dt = tx - ty;
    const double gap = dt.squaredNorm() - (x - y).dot(dt);
    rep.worst_fne_violation = std::max(rep.worst_fne_violation, gap);
  }
  rep.firmly_nonexpansive = rep.worst_fne_violation <= 1e-8;
  if (!rep.firmly_nonexpansive)
    rep.failures.push_back("firm nonexpansiveness violated by " + num(rep.worst_fne_violation));
  return rep;
}

MembershipReport validate_membership(const AffineFneMap& map, int pairs, std::uint64_t seed) {
  return validate_membership(map.q(), map.pi(), pairs, seed);
}

AffineFneMap averaged(const AffineFneMap& map, double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument,
          "averaging parameter must lie in (0, 1)");
  return AffineFneMap::create(map.q().affine(alpha, 1.0 - alpha), alpha * map.pi(), map.witness());
}

AffineFneMap convex_combine(std::span<const AffineFneMap> maps, std::span<const double> weights) {
  require(!maps.empty(), ErrorCode::kInvalidArgument, "convex combination of no maps");
  check_weights(weights, maps.size(), true);
  const Index n = maps.front().dim();
  std::vector<SymOperator> qs;
  qs.reserve(maps.size());
  Vector pi = Vector::Zero(n);
  for (std::size_t j = 0; j < maps.size(); ++j) {
    require(maps[j].dim() == n, ErrorCode::kDimensionMismatch, "maps have different dimensions");
    qs.push_back(maps[j].q());
    pi += weights[j] * maps[j].pi();
  }
  AffineFneMap out = AffineFneMap::create(linear_combination(qs, weights), std::move(pi));

  for (const auto& m : maps) {
    if (!m.witness()) continue;
    bool common = true;
    for (const auto& other : maps)
      if (!is_fixed_by(other, *m.witness())) common = false;
    if (common && is_fixed_by(out, *m.witness())) return out.with_witness(*m.witness());
    break;
  }
  return out;
}

AffineFneMap sandwich_compose(const AffineFneMap& core, std::span<const AffineMap> outer) {
  const Index n = core.dim();
  std::vector<const AffineMap*> chain;
  for (const auto& m : outer) {
    require(m.dim() == n && m.pi.size() == n, ErrorCode::kDimensionMismatch, "outer map dimension mismatch");
    const double norm = spectral_norm(m.q);
    require(norm <= 1.0 + kSpectralSlack, ErrorCode::kInvalidArgument,
            "outer map has spectral norm " + num(norm) + " above 1");
    if (!is_exact_identity(m)) chain.push_back(&m);
  }
  if (chain.empty()) return core;

  const std::size_t J = chain.size();
  auto q_of = [&](std::size_t j) -> const SymOperator& { return j == 0 ? core.q() : chain[j - 1]->q; };
  auto pi_of = [&](std::size_t j) -> const Vector& { return j == 0 ? core.pi() : chain[j - 1]->pi; };

  // Q = Q_J ... Q_1 Q_0 Q_1 ... Q_J
  std::vector<SymOperator> ops;
  for (std::size_t j = J; j >= 1; --j) ops.push_back(q_of(j));
  ops.push_back(q_of(0));
  for (std::size_t j = 1; j <= J; ++j) ops.push_back(q_of(j));
  Matrix q = dense_product(ops);

  // pi = sum_j Q_J..Q_1 Q_0 Q_1..Q_{j-1} pi_j + sum_j Q_J..Q_j pi_{j-1} + pi_J
  Vector pi = pi_of(J);
  for (std::size_t j = 1; j <= J; ++j) {
    Vector v = pi_of(j);
    for (std::size_t k = j - 1; k >= 1; --k) v = q_of(k) * v;
    v = q_of(0) * v;
    for (std::size_t k = 1; k <= J; ++k) v = q_of(k) * v;
    pi += v;

    Vector w = pi_of(j - 1);
    for (std::size_t k = j; k <= J; ++k) w = q_of(k) * w;
    pi += w;
  }

  AffineFneMap out = AffineFneMap::create(SymOperator::dense(0.5 * (q + q.transpose())), std::move(pi));
  if (core.witness()) {
    const Vector& w = *core.witness();
    bool common = is_fixed_by(out, w);
    for (const AffineMap* m : chain)
      if ((m->apply(w) - w).norm() > witness_tolerance(m->pi)) common = false;
    if (common) return out.with_witness(w);
  }
  return out;
}

double fixed_point_residual(const AffineFneMap& map, const Vector& x) {
  Vector tx;
  map.apply(x, tx);
  return (tx - x).norm();
}

Vector fixed_point_witness(const AffineFneMap& map) {
  if (map.witness()) return *map.witness();
  const SymOperator i_minus_q = map.q().affine(-1.0, 1.0);
  Vector w = sym_pseudoinverse(i_minus_q, 1e-10) * map.pi();
  const double res = (i_minus_q * w - map.pi()).norm();
  if (!(res <= witness_tolerance(map.pi())))
    fail(ErrorCode::kEmptyFixedPointSet,
         "map has no fixed point: offset is outside range(I - Q) (residual " + num(res) + ")");
  return w;
}

SymOperator sqrt_I_minus_Q(const AffineFneMap& map) {
  if (map.sqrt_cache()) return *map.sqrt_cache();
  return psd_sqrt(map.q().affine(-1.0, 1.0));
}

AffineFneMap make_consensus_projection(Index num_blocks, Index block_dim) {
  const SymOperator q = SymOperator::block_average(num_blocks, block_dim);
  const Index n = q.dim();
  return AffineFneMap::create(q, Vector::Zero(n), Vector::Zero(n));
}

AffineFneMap make_hyperplane_projection(const Vector& a, double b) {
  require_finite(a, "hyperplane normal");
  require(std::isfinite(b), ErrorCode::kInvalidArgument, "hyperplane offset must be finite");
  const double na2 = a.squaredNorm();
  require(na2 > 0.0, ErrorCode::kInvalidArgument, "hyperplane normal must be nonzero");
  Vector w = (b / na2) * a;
  return AffineFneMap::create(SymOperator::hyperplane_projection(a), w, w);
}

AffineFneMap make_affine_set_projection(const Matrix& a0, const Vector& b0) {
  check_system(a0, b0);
  const Matrix p = pseudoinverse(a0);
  Vector w = p * b0;
  const double res = (a0 * w - b0).norm();
  if (!(res <= kWitnessTol * (1.0 + b0.norm())))
    fail(ErrorCode::kEmptyFixedPointSet, "constraint set {x : A0 x = b0} is empty");
  const Index n = a0.cols();
  Matrix q = Matrix::Identity(n, n) - row_space_projector(a0);
  return AffineFneMap::create(SymOperator::dense(0.5 * (q + q.transpose())), w, w);
}

AffineFneMap make_ls_map(const Matrix& a, const Vector& b, LsVariant variant, const LsParams& params) {
  check_system(a, b);
  const Index n = a.cols();
  const Vector ls_solution = pseudoinverse(a) * b;
  AffineFneMap map = AffineFneMap::identity(n);
  switch (variant) {
    case LsVariant::kGradStep:
      map = grad_step_map(a, b, params.rho, params.mu);
      break;
    case LsVariant::kKerProjection:
      return ker_projection_map(a, b);
    case LsVariant::kGramProjection: {
      const Matrix g = a.transpose() * a;
      const Matrix gp = pseudoinverse(g);
      Matrix q = Matrix::Identity(n, n) - row_space_projector(g);
      map = AffineFneMap::create(SymOperator::dense(0.5 * (q + q.transpose())), gp * (a.transpose() * b));
      break;
    }
    case LsVariant::kResolvent:
      map = resolvent_map(a, b, params.gamma);
      break;
    case LsVariant::kRowHyperplaneAverage: {
      check_unit_interval(params.beta, "beta");
      const double frob2 = a.squaredNorm();
      if (frob2 == 0.0) return AffineFneMap::identity(n);
      std::vector<Index> kept;
      for (Index m = 0; m < a.rows(); ++m)
        if (a.row(m).squaredNorm() > 0.0) kept.push_back(m);
      Matrix rows(static_cast<Index>(kept.size()), n);
      Vector rhs(static_cast<Index>(kept.size()));
      std::vector<double> w;
      double total = 0.0;
      for (std::size_t k = 0; k < kept.size(); ++k) {
        rows.row(static_cast<Index>(k)) = a.row(kept[k]);
        rhs(static_cast<Index>(k)) = b(kept[k]);
        w.push_back(a.row(kept[k]).squaredNorm() / frob2);
        total += w.back();
      }
      for (double& x : w) x /= total;
      map = hyperplane_average(rows, rhs, w, params.beta);
      break;
    }
    case LsVariant::kNormalHyperplaneAverage: {
      check_unit_interval(params.theta, "theta");
      const Matrix g = a.transpose() * a;
      const Vector c = a.transpose() * b;
      map = hyperplane_average(g, c, resolve_weights(params.weights, n), params.theta);
      break;
    }
  }
  return map.with_witness(ls_solution);
}

LiftedSystem lifted_system(const Matrix& a, const Vector& b, const Matrix& a0, const Vector& b0) {
  check_system(a, b);
  require(a0.rows() > 0, ErrorCode::kInvalidArgument, "constraint matrix has no rows");
  check_system(a0, b0);
  require(a0.cols() == a.cols(), ErrorCode::kDimensionMismatch, "constraint and system column counts differ");
  const Index d = a.cols(), m0 = a0.rows();
  LiftedSystem sys{Matrix::Zero(d + m0, d + m0), Vector(d + m0)};
  sys.l.topLeftCorner(d, d) = a.transpose() * a;
  sys.l.topRightCorner(d, m0) = a0.transpose();
  sys.l.bottomLeftCorner(m0, d) = a0;
  sys.e.head(d) = a.transpose() * b;
  sys.e.tail(m0) = b0;
  return sys;
}

AffineFneMap make_constrained_ls_map(const Matrix& a, const Vector& b, const Matrix& a0, const Vector& b0,
                                     ConstrainedLsVariant variant, const ConstrainedLsParams& params) {
  const LiftedSystem sys = lifted_system(a, b, a0, b0);
  const AffineFneMap pk = make_affine_set_projection(a0, b0);
  const Vector lifted_solution = pseudoinverse(sys.l) * sys.e;
  const Index d = a.cols();

  AffineFneMap map = AffineFneMap::identity(sys.l.cols());
  switch (variant) {
    case ConstrainedLsVariant::kLiftedGrad:
      map = grad_step_map(sys.l, sys.e, params.rho, params.mu);
      break;
    case ConstrainedLsVariant::kLiftedProjection:
      return ker_projection_map(sys.l, sys.e);
    case ConstrainedLsVariant::kLiftedResolvent:
      map = resolvent_map(sys.l, sys.e, params.gamma);
      break;
    case ConstrainedLsVariant::kLiftedHyperplaneAverage:
      check_unit_interval(params.theta, "theta");
      map = hyperplane_average(sys.l, sys.e, resolve_weights(params.weights, sys.l.rows()), params.theta);
      break;
    case ConstrainedLsVariant::kProjectedComposition: {
      check_unit_interval(params.beta, "beta");
      LsParams inner;
      inner.beta = 1.0;
      const AffineFneMap avg = make_ls_map(a, b, LsVariant::kRowHyperplaneAverage, inner);
      const std::vector<AffineMap> outer{AffineMap{pk.q(), pk.pi()}};
      const AffineFneMap sandwiched = sandwich_compose(avg, outer);
      if (params.beta == 1.0) {
        map = sandwiched;
      } else {
        const std::vector<AffineFneMap> parts{pk, sandwiched};
        const std::vector<double> w{1.0 - params.beta, params.beta};
        map = convex_combine(parts, w);
      }
      return map.with_witness(lifted_solution.head(d));
    }
  }
  return map.with_witness(lifted_solution);
}

}  // namespace fmh

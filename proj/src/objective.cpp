#include "fmhsdm/objective.hpp"

#include <cmath>
#include <limits>

#include "fmhsdm/error.hpp"

namespace fmh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIndicatorSlack = 1e-10;

void require_psd(const SymOperator& p, const char* what) {
  const double lo = min_eigenvalue(p);
  if (lo < -1e-10) throw NotPsdError(std::string(what) + " is not positive semidefinite", lo);
}

void require_lambda(double lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, ErrorCode::kInvalidArgument, "prox parameter must be positive");
}

}  // namespace

QuadraticTerm::QuadraticTerm(SymOperator p) : p_(std::move(p)) {
  require_psd(p_, "quadratic matrix");
  lipschitz_ = std::max(spectral_norm(p_), ZeroTerm::kLipschitzFloor);
}

double QuadraticTerm::value(const Vector& x) const { return 0.5 * x.dot(p_ * x); }

void QuadraticTerm::gradient(const Vector& x, Vector& out) const { p_.apply(x, out); }

QuadraticProx::QuadraticProx(SymOperator p) : p_(std::move(p)) {
  require_psd(p_, "quadratic matrix");
  if (const auto* d = std::get_if<SymOperator::Dense>(&p_.form())) eig_ = jacobi_eigen(d->m);
}

double QuadraticProx::value(const Vector& x) const { return 0.5 * x.dot(p_ * x); }

void QuadraticProx::prox(double lambda, const Vector& x, Vector& out) const {
  require_lambda(lambda);
  require(x.size() == p_.dim(), ErrorCode::kDimensionMismatch, "prox argument dimension mismatch");
  if (const auto* d = std::get_if<SymOperator::Diagonal>(&p_.form())) {
    out = x.array() / (1.0 + lambda * d->d.array());
    return;
  }
  if (const auto* s = std::get_if<SymOperator::ScaledIdentity>(&p_.form())) {
    out = x / (1.0 + lambda * s->c);
    return;
  }
  if (eig_) {
    const Vector coeffs = eig_->vectors.transpose() * x;
    const Vector scaled = coeffs.array() / (1.0 + lambda * eig_->values.array().max(0.0));
    out = eig_->vectors * scaled;
    return;
  }
  const SymOperator r = spectral_function(p_, [lambda](double l) { return 1.0 / (1.0 + lambda * std::max(l, 0.0)); });
  r.apply(x, out);
}

BallIndicator::BallIndicator(Vector center, double radius) : center_(std::move(center)), radius_(radius) {
  require_finite(center_, "ball center");
  require(std::isfinite(radius) && radius > 0.0, ErrorCode::kInvalidArgument, "ball radius must be positive");
}

double BallIndicator::value(const Vector& x) const {
  require(x.size() == center_.size(), ErrorCode::kDimensionMismatch, "ball indicator dimension mismatch");
  return (x - center_).norm() <= radius_ + kIndicatorSlack ? 0.0 : kInf;
}

void BallIndicator::prox(double lambda, const Vector& x, Vector& out) const {
  require_lambda(lambda);
  require(x.size() == center_.size(), ErrorCode::kDimensionMismatch, "ball indicator dimension mismatch");
  const double r = (x - center_).norm();
  const double scale = radius_ / std::max(r, radius_);
  out = center_ + scale * (x - center_);
}

AffineSetIndicator::AffineSetIndicator(AffineFneMap projection) : projection_(std::move(projection)) {
  require(is_idempotent(projection_.q()), ErrorCode::kInvalidArgument,
          "affine-set indicator needs a projection map");
}

double AffineSetIndicator::value(const Vector& x) const {
  return fixed_point_residual(projection_, x) <= kIndicatorSlack * (1.0 + x.norm()) ? 0.0 : kInf;
}

void AffineSetIndicator::prox(double lambda, const Vector& x, Vector& out) const {
  require_lambda(lambda);
  projection_.apply(x, out);
}

SeparableSum::SeparableSum(std::vector<std::shared_ptr<const ProxTerm>> terms, BlockLayout layout)
    : terms_(std::move(terms)), layout_(std::move(layout)) {
  require(static_cast<Index>(terms_.size()) == layout_.num_blocks(), ErrorCode::kDimensionMismatch,
          "separable sum needs one term per block");
  for (Index j = 0; j < layout_.num_blocks(); ++j) {
    const auto& t = terms_[static_cast<std::size_t>(j)];
    require(t != nullptr, ErrorCode::kInvalidArgument, "separable sum term is null");
    require(t->dim() == 0 || t->dim() == layout_.block_dim(j), ErrorCode::kDimensionMismatch,
            "separable sum term " + std::to_string(j) + " does not match its block");
  }
}

double SeparableSum::value(const Vector& x) const {
  require(x.size() == layout_.total(), ErrorCode::kDimensionMismatch, "separable sum dimension mismatch");
  double s = 0.0;
  for (Index j = 0; j < layout_.num_blocks(); ++j) s += term(j).value(layout_.block(x, j));
  return s;
}

double SeparableSum::finite_value(const Vector& x) const {
  require(x.size() == layout_.total(), ErrorCode::kDimensionMismatch, "separable sum dimension mismatch");
  double s = 0.0;
  for (Index j = 0; j < layout_.num_blocks(); ++j) s += term(j).finite_value(layout_.block(x, j));
  return s;
}

void SeparableSum::prox(double lambda, const Vector& x, Vector& out) const {
  require_lambda(lambda);
  require(x.size() == layout_.total(), ErrorCode::kDimensionMismatch, "separable sum dimension mismatch");
  Vector result(x.size());
  Vector block_in, block_out;
  for (Index j = 0; j < layout_.num_blocks(); ++j) {
    block_in = layout_.block(x, j);
    term(j).prox(lambda, block_in, block_out);
    layout_.block(result, j) = block_out;
  }
  out = std::move(result);
}

bool SeparableSum::is_zero() const {
  for (const auto& t : terms_)
    if (!t->is_zero()) return false;
  return true;
}

std::shared_ptr<const QuadraticTerm> make_quadratic(SymOperator p) {
  return std::make_shared<const QuadraticTerm>(std::move(p));
}

std::shared_ptr<const QuadraticProx> make_quadratic_prox(SymOperator p) {
  return std::make_shared<const QuadraticProx>(std::move(p));
}

std::shared_ptr<const BallIndicator> make_ball_indicator(Vector center, double radius) {
  return std::make_shared<const BallIndicator>(std::move(center), radius);
}

std::shared_ptr<const AffineSetIndicator> make_affine_set_indicator(AffineFneMap projection) {
  return std::make_shared<const AffineSetIndicator>(std::move(projection));
}

std::shared_ptr<const SeparableSum> make_separable_sum(std::vector<std::shared_ptr<const ProxTerm>> terms,
                                                       BlockLayout layout) {
  return std::make_shared<const SeparableSum>(std::move(terms), std::move(layout));
}

std::shared_ptr<const ZeroTerm> make_zero_term(Index n) { return std::make_shared<const ZeroTerm>(n); }

Problem::Problem(std::string name, std::shared_ptr<const SmoothTerm> smooth, std::shared_ptr<const ProxTerm> prox,
                 AffineFneMap constraint, BlockLayout layout, std::optional<Vector> minimizer,
                 std::optional<Vector> dual_witness)
    : name_(std::move(name)),
      smooth_(std::move(smooth)),
      prox_(std::move(prox)),
      constraint_(std::move(constraint)),
      layout_(std::move(layout)),
      minimizer_(std::move(minimizer)),
      dual_witness_(std::move(dual_witness)) {
  require(smooth_ && prox_, ErrorCode::kInvalidArgument, "problem terms must be non-null");
  const Index n = constraint_.dim();
  if (layout_.num_blocks() == 0) layout_ = BlockLayout({n});
  require(layout_.total() == n, ErrorCode::kDimensionMismatch, "block layout does not cover the constraint space");
  require(smooth_->dim() == 0 || smooth_->dim() == n, ErrorCode::kDimensionMismatch,
          "smooth term dimension differs from the constraint map");
  require(prox_->dim() == 0 || prox_->dim() == n, ErrorCode::kDimensionMismatch,
          "prox term dimension differs from the constraint map");
  if (minimizer_) {
    require(minimizer_->size() == n, ErrorCode::kDimensionMismatch, "minimizer dimension mismatch");
    require_finite(*minimizer_, "minimizer");
    const double res = fixed_point_residual(constraint_, *minimizer_);
    require(res <= 1e-8, ErrorCode::kInvalidArgument,
            "known minimizer is not a fixed point of the constraint map (residual " + num(res) + ")");
  }
  if (dual_witness_) {
    require(dual_witness_->size() == n, ErrorCode::kDimensionMismatch, "dual witness dimension mismatch");
    require_finite(*dual_witness_, "dual witness");
  }
}

Problem Problem::with_sqrt_cache() const {
  Problem copy = *this;
  copy.constraint_ = constraint_.with_sqrt_cache();
  return copy;
}

}  // namespace fmh

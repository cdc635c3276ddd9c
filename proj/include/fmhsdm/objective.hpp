#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fmhsdm/affine_map.hpp"
#include "fmhsdm/linalg.hpp"

namespace fmh {

/// Differentiable convex term with an L-Lipschitz gradient.
class SmoothTerm {
 public:
  virtual ~SmoothTerm() = default;
  virtual double value(const Vector& x) const = 0;
  /// out = grad f(x). `out` may alias `x`.
  virtual void gradient(const Vector& x, Vector& out) const = 0;
  virtual double lipschitz() const = 0;
  /// 0 when the term accepts any dimension.
  virtual Index dim() const = 0;
  virtual bool is_zero() const { return false; }

  Vector gradient(const Vector& x) const {
    Vector g;
    gradient(x, g);
    return g;
  }
};

/// Convex term with a computable proximal map; may take the value +inf.
class ProxTerm {
 public:
  virtual ~ProxTerm() = default;
  virtual double value(const Vector& x) const = 0;
  /// value() with indicator parts dropped.
  virtual double finite_value(const Vector& x) const = 0;
  /// out = argmin_z g(z) + |z - x|^2 / (2 lambda). `out` may alias `x`.
  virtual void prox(double lambda, const Vector& x, Vector& out) const = 0;
  virtual Index dim() const = 0;
  virtual bool is_zero() const { return false; }

  bool infeasible(const Vector& x) const { return !(value(x) < std::numeric_limits<double>::infinity()); }
  Vector prox(double lambda, const Vector& x) const {
    Vector z;
    prox(lambda, x, z);
    return z;
  }
};

/// 1/2 x^T P x.
class QuadraticTerm final : public SmoothTerm {
 public:
  explicit QuadraticTerm(SymOperator p);
  double value(const Vector& x) const override;
  using SmoothTerm::gradient;
  void gradient(const Vector& x, Vector& out) const override;
  double lipschitz() const override { return lipschitz_; }
  Index dim() const override { return p_.dim(); }
  const SymOperator& matrix() const { return p_; }

 private:
  SymOperator p_;
  double lipschitz_;
};

/// 1/2 x^T P x used through its resolvent (I + lambda P)^-1.
class QuadraticProx final : public ProxTerm {
 public:
  explicit QuadraticProx(SymOperator p);
  double value(const Vector& x) const override;
  double finite_value(const Vector& x) const override { return value(x); }
  using ProxTerm::prox;
  void prox(double lambda, const Vector& x, Vector& out) const override;
  Index dim() const override { return p_.dim(); }
  const SymOperator& matrix() const { return p_; }

 private:
  SymOperator p_;
  std::optional<EigenDecomposition> eig_;
};

/// Indicator of the closed ball B[center, radius].
class BallIndicator final : public ProxTerm {
 public:
  BallIndicator(Vector center, double radius);
  double value(const Vector& x) const override;
  double finite_value(const Vector&) const override { return 0.0; }
  using ProxTerm::prox;
  void prox(double lambda, const Vector& x, Vector& out) const override;
  Index dim() const override { return center_.size(); }
  const Vector& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Vector center_;
  double radius_;
};

/// Indicator of the fixed-point set of an affine projection.
class AffineSetIndicator final : public ProxTerm {
 public:
  explicit AffineSetIndicator(AffineFneMap projection);
  double value(const Vector& x) const override;
  double finite_value(const Vector&) const override { return 0.0; }
  using ProxTerm::prox;
  void prox(double lambda, const Vector& x, Vector& out) const override;
  Index dim() const override { return projection_.dim(); }
  const AffineFneMap& projection() const { return projection_; }

 private:
  AffineFneMap projection_;
};

/// g(x) = sum_j g_j(x^(j)) over a block layout.
class SeparableSum final : public ProxTerm {
 public:
  SeparableSum(std::vector<std::shared_ptr<const ProxTerm>> terms, BlockLayout layout);
  double value(const Vector& x) const override;
  double finite_value(const Vector& x) const override;
  using ProxTerm::prox;
  void prox(double lambda, const Vector& x, Vector& out) const override;
  Index dim() const override { return layout_.total(); }
  bool is_zero() const override;
  const BlockLayout& layout() const { return layout_; }
  const ProxTerm& term(Index j) const { return *terms_.at(static_cast<std::size_t>(j)); }
  std::shared_ptr<const ProxTerm> term_ptr(Index j) const { return terms_.at(static_cast<std::size_t>(j)); }

 private:
  std::vector<std::shared_ptr<const ProxTerm>> terms_;
  BlockLayout layout_;
};

/// The zero function, usable in either role.
class ZeroTerm final : public SmoothTerm, public ProxTerm {
 public:
  static constexpr double kLipschitzFloor = 1e-12;
  explicit ZeroTerm(Index n = 0) : n_(n) {}
  double value(const Vector&) const override { return 0.0; }
  double finite_value(const Vector&) const override { return 0.0; }
  using SmoothTerm::gradient;
  using ProxTerm::prox;
  void gradient(const Vector& x, Vector& out) const override { out = Vector::Zero(x.size()); }
  void prox(double, const Vector& x, Vector& out) const override { out = x; }
  double lipschitz() const override { return kLipschitzFloor; }
  Index dim() const override { return n_; }
  bool is_zero() const override { return true; }

 private:
  Index n_;
};

std::shared_ptr<const QuadraticTerm> make_quadratic(SymOperator p);
std::shared_ptr<const QuadraticProx> make_quadratic_prox(SymOperator p);
std::shared_ptr<const BallIndicator> make_ball_indicator(Vector center, double radius);
std::shared_ptr<const AffineSetIndicator> make_affine_set_indicator(AffineFneMap projection);
std::shared_ptr<const SeparableSum> make_separable_sum(std::vector<std::shared_ptr<const ProxTerm>> terms,
                                                       BlockLayout layout);
std::shared_ptr<const ZeroTerm> make_zero_term(Index n = 0);

/// min f(x) + g(x) over Fix T.
class Problem {
 public:
  /// `dual_witness` is the certificate dual point at unit step size; it scales
  /// linearly with the step size.
  Problem(std::string name, std::shared_ptr<const SmoothTerm> smooth, std::shared_ptr<const ProxTerm> prox,
          AffineFneMap constraint, BlockLayout layout = {}, std::optional<Vector> minimizer = std::nullopt,
          std::optional<Vector> dual_witness = std::nullopt);

  const std::string& name() const { return name_; }
  const SmoothTerm& smooth() const { return *smooth_; }
  const ProxTerm& prox() const { return *prox_; }
  const std::shared_ptr<const SmoothTerm>& smooth_ptr() const { return smooth_; }
  const std::shared_ptr<const ProxTerm>& prox_ptr() const { return prox_; }
  const AffineFneMap& constraint() const { return constraint_; }
  const BlockLayout& layout() const { return layout_; }
  const std::optional<Vector>& known_minimizer() const { return minimizer_; }
  const std::optional<Vector>& known_dual_witness() const { return dual_witness_; }
  Index dim() const { return constraint_.dim(); }

  /// f(x) + g(x) with indicator parts dropped.
  double objective(const Vector& x) const { return smooth_->value(x) + prox_->finite_value(x); }
  bool infeasible(const Vector& x) const { return prox_->infeasible(x); }

  /// Same data with the constraint map carrying its square-root cache.
  Problem with_sqrt_cache() const;

 private:
  std::string name_;
  std::shared_ptr<const SmoothTerm> smooth_;
  std::shared_ptr<const ProxTerm> prox_;
  AffineFneMap constraint_;
  BlockLayout layout_;
  std::optional<Vector> minimizer_;
  std::optional<Vector> dual_witness_;
};

}  // namespace fmh

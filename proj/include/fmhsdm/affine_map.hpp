#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fmhsdm/linalg.hpp"

namespace fmh {

/// x -> Qx + pi with Q symmetric. Used for the outer factors of a sandwich
/// composition, where Q only needs |Q| <= 1.
struct AffineMap {
  SymOperator q;
  Vector pi;

  Index dim() const { return q.dim(); }
  Vector apply(const Vector& x) const;
};

/// An affine firmly nonexpansive map x -> Qx + pi: Q symmetric with spectrum in [0, 1].
class AffineFneMap {
 public:
  /// Validates Q (symmetry, spectrum in [0, 1] up to 1e-10) and the witness if given.
  static AffineFneMap create(SymOperator q, Vector pi, std::optional<Vector> witness = std::nullopt);
  static AffineFneMap identity(Index n);

  Index dim() const { return q_->dim(); }
  const SymOperator& q() const { return *q_; }
  const Vector& pi() const { return pi_; }
  const std::optional<Vector>& witness() const { return witness_; }
  const std::shared_ptr<const SymOperator>& sqrt_cache() const { return u_; }

  /// out = Qx + pi. `out` may alias `x`.
  void apply(const Vector& x, Vector& out) const;
  Vector apply(const Vector& x) const;
  Vector operator()(const Vector& x) const { return apply(x); }

  /// Copy with U = sqrt(I - Q) computed and stored.
  AffineFneMap with_sqrt_cache() const;
  AffineFneMap with_witness(Vector w) const;

 private:
  AffineFneMap() = default;
  std::shared_ptr<const SymOperator> q_;
  Vector pi_;
  std::optional<Vector> witness_;
  std::shared_ptr<const SymOperator> u_;
};

struct MembershipReport {
  bool symmetric = true;
  bool positive = true;
  bool norm_bounded = true;
  bool firmly_nonexpansive = true;
  double min_eigenvalue = 0.0;
  double spectral_norm = 0.0;
  double worst_fne_violation = 0.0;  // max of |Tx-Tx'|^2 - <x-x', Tx-Tx'>
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

/// Structural checks plus an empirical firm-nonexpansiveness test on random pairs.
MembershipReport validate_membership(const SymOperator& q, const Vector& pi, int pairs = 100,
                                     std::uint64_t seed = 0xfe11);
MembershipReport validate_membership(const AffineFneMap& map, int pairs = 100,
                                     std::uint64_t seed = 0xfe11);

/// alpha * T + (1 - alpha) * Id.
AffineFneMap averaged(const AffineFneMap& map, double alpha);

/// Sum_j w_j T_j with weights in (0, 1] summing to 1.
AffineFneMap convex_combine(std::span<const AffineFneMap> maps, std::span<const double> weights);

/// T_J ... T_1 T_0 T_1 ... T_J folded into a single (Q, pi).
AffineFneMap sandwich_compose(const AffineFneMap& core, std::span<const AffineMap> outer);

/// A point of Fix T: the attached witness, else (I - Q)^+ pi.
/// Throws kEmptyFixedPointSet when the residual exceeds 1e-8 (1 + |pi|).
Vector fixed_point_witness(const AffineFneMap& map);

/// U = sqrt(I - Q); returns the cached value when present.
SymOperator sqrt_I_minus_Q(const AffineFneMap& map);

/// |(I - T) x|.
double fixed_point_residual(const AffineFneMap& map, const Vector& x);

AffineFneMap make_consensus_projection(Index num_blocks, Index block_dim);

/// Projection onto {x : <a, x> = b}.
AffineFneMap make_hyperplane_projection(const Vector& a, double b);

/// Projection onto {x : A0 x = b0}. Throws kEmptyFixedPointSet when the set is empty.
AffineFneMap make_affine_set_projection(const Matrix& a0, const Vector& b0);

/// Least-squares solution set {x : A^T A x = A^T b} as the fixed points of:
enum class LsVariant {
  kGradStep,                 // (I - mu/rho A^T A) x + mu/rho A^T b
  kKerProjection,            // (I - A^+ A) x + A^+ b
  kGramProjection,           // (I - G G^+) x + G^+ A^T b, G = A^T A
  kResolvent,                // (I + gamma A^T A)^-1 (x + gamma A^T b)
  kRowHyperplaneAverage,     // (1 - beta) x + beta sum_m |a_m|^2/|A|_F^2 P_m x
  kNormalHyperplaneAverage,  // (1 - theta) x + theta sum_d w_d P_{G_d} x
};

struct LsParams {
  double rho = 0.0;  // <= 0 selects |A|^2
  double mu = 1.0;
  double gamma = 1.0;
  double beta = 1.0;
  double theta = 1.0;
  std::vector<double> weights;  // empty selects uniform
};

AffineFneMap make_ls_map(const Matrix& a, const Vector& b, LsVariant variant, const LsParams& params = {});

/// Minimizers of |Ax - b|^2 over {x : A0 x = b0}, either on the lifted space
/// (x, mu) solving L (x, mu) = e, or directly on R^D (kProjectedComposition).
enum class ConstrainedLsVariant {
  kLiftedGrad,
  kLiftedProjection,
  kLiftedResolvent,
  kLiftedHyperplaneAverage,
  kProjectedComposition,
};

struct ConstrainedLsParams {
  double rho = 0.0;  // <= 0 selects |L|^2
  double mu = 1.0;
  double gamma = 1.0;
  double theta = 1.0;
  double beta = 1.0;
  std::vector<double> weights;  // empty selects uniform
};

struct LiftedSystem {
  Matrix l;  // [[A^T A, A0^T], [A0, 0]]
  Vector e;  // (A^T b, b0)
};

LiftedSystem lifted_system(const Matrix& a, const Vector& b, const Matrix& a0, const Vector& b0);

AffineFneMap make_constrained_ls_map(const Matrix& a, const Vector& b, const Matrix& a0, const Vector& b0,
                                     ConstrainedLsVariant variant, const ConstrainedLsParams& params = {});

}  // namespace fmh

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace fmh {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Throws kInvalidArgument unless every entry is finite and the vector is non-empty.
void require_finite(const Vector& x, const char* what);

/// Block structure of a product space X_1 x ... x X_J.
class BlockLayout {
 public:
  BlockLayout() = default;
  explicit BlockLayout(std::vector<Index> dims);
  static BlockLayout uniform(Index num_blocks, Index block_dim);

  Index num_blocks() const { return static_cast<Index>(dims_.size()); }
  Index block_dim(Index j) const { return dims_.at(static_cast<std::size_t>(j)); }
  Index offset(Index j) const { return offsets_.at(static_cast<std::size_t>(j)); }
  Index total() const { return total_; }
  const std::vector<Index>& dims() const { return dims_; }

  auto block(Vector& x, Index j) const { return x.segment(offset(j), block_dim(j)); }
  auto block(const Vector& x, Index j) const { return x.segment(offset(j), block_dim(j)); }

  bool operator==(const BlockLayout&) const = default;

 private:
  std::vector<Index> dims_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

/// A self-adjoint linear operator on R^n stored in the cheapest faithful form.
/// Structured forms never materialize an n x n matrix.
class SymOperator {
 public:
  struct Dense {
    Matrix m;
  };
  struct Diagonal {
    Vector d;
  };
  struct ScaledIdentity {
    double c;
    Index n;
  };
  /// c*I + s*u*u^T with |u| = 1.
  struct RankOneUpdate {
    double c;
    double s;
    Vector u;
  };
  /// c*I + s*P_S, P_S replicating the mean of `blocks` equal-sized blocks.
  struct BlockAverage {
    double c;
    double s;
    Index blocks;
    Index block_dim;
  };
  using Form = std::variant<Dense, Diagonal, ScaledIdentity, RankOneUpdate, BlockAverage>;

  /// Checks symmetry to 1e-12 relative; the stored matrix is symmetrized.
  static SymOperator dense(Matrix m);
  static SymOperator diagonal(Vector d);
  static SymOperator scaled_identity(double c, Index n);
  static SymOperator identity(Index n) { return scaled_identity(1.0, n); }
  static SymOperator zero(Index n) { return scaled_identity(0.0, n); }
  static SymOperator rank_one_update(double c, double s, const Vector& a);
  /// I - a a^T / |a|^2.
  static SymOperator hyperplane_projection(const Vector& a);
  static SymOperator block_average(Index blocks, Index block_dim, double c = 0.0, double s = 1.0);

  Index dim() const;
  const Form& form() const { return form_; }
  bool is_dense() const { return std::holds_alternative<Dense>(form_); }

  /// out = op * x. `out` may alias `x`.
  void apply(const Vector& x, Vector& out) const;
  Vector operator*(const Vector& x) const;

  Matrix to_dense() const;

  /// scale * op + shift * I, staying in the same form.
  SymOperator affine(double scale, double shift) const;

 private:
  explicit SymOperator(Form f) : form_(std::move(f)) {}
  Form form_;
};

/// Eigenpairs of a dense symmetric matrix, eigenvalues ascending.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;
};

/// Cyclic Jacobi rotations. Throws EstimatorFailure past `max_sweeps`.
EigenDecomposition jacobi_eigen(const Matrix& sym, int max_sweeps = 100);

double spectral_norm(const SymOperator& op);
/// (min eigenvalue, max eigenvalue) from a single decomposition.
std::pair<double, double> eigenvalue_range(const SymOperator& op);
double min_eigenvalue(const SymOperator& op);
double max_eigenvalue(const SymOperator& op);

/// Largest singular value of a general matrix: power iteration on M^T M.
double matrix_spectral_norm(const Matrix& m, int max_iters = 100000, double tol = 1e-10);

/// f(op) through its eigendecomposition; structured forms stay structured.
SymOperator spectral_function(const SymOperator& op, const std::function<double(double)>& fn);

/// Positive square root. Eigenvalues in [-1e-10, 0) are clamped; lower ones throw NotPsdError.
SymOperator psd_sqrt(const SymOperator& op);

bool is_idempotent(const SymOperator& op, double tol = 1e-10);

/// Moore-Penrose pseudoinverse. Singular values at or below
/// rcond * sigma_max are dropped; rcond < 0 selects max(rows, cols) * eps.
Matrix pseudoinverse(const Matrix& m, double rcond = -1.0);

/// Orthogonal projector M^+ M onto the row space of M, formed as V_r V_r^T
/// with the same singular-value cutoff as pseudoinverse.
Matrix row_space_projector(const Matrix& m, double rcond = -1.0);

/// Pseudoinverse of a symmetric operator via its spectrum; eigenvalues with
/// |lambda| <= rcond * max|lambda| are treated as zero.
SymOperator sym_pseudoinverse(const SymOperator& op, double rcond);

/// Inverse of a (strictly) definite operator.
SymOperator inverse(const SymOperator& op);

/// Sum_i w_i op_i. Stays structured when all inputs share a compatible form.
SymOperator linear_combination(std::span<const SymOperator> ops, std::span<const double> weights);

/// op_0 * op_1 * ... * op_k as a dense matrix.
Matrix dense_product(std::span<const SymOperator> chain);

struct StrongPositivityReport {
  double inverse_norm = 0.0;
  double norm_margin = 0.0;   // 1/delta - |op^-1|
  double lower_margin = 0.0;  // min_x (<op^-1 x, x> - delta/|op|^2 |x|^2) / |x|^2
  double upper_margin = 0.0;  // min_x (|x|^2/delta - <op^-1 x, x>) / |x|^2
  int probes = 0;
  bool passed(double slack = 1e-12) const {
    return norm_margin >= -slack && lower_margin >= -slack && upper_margin >= -slack;
  }
};

/// Numerically confirms the bounds on op^-1 implied by <op x, x> >= delta |x|^2.
StrongPositivityReport check_strongly_positive_inverse(const SymOperator& op, double delta,
                                                       int probes = 100,
                                                       std::uint64_t seed = 0x5eed);

}  // namespace fmh

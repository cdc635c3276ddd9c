#include "fmhsdm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fmhsdm/error.hpp"
#include "fmhsdm/rng.hpp"

namespace fmh {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Distinct eigenvalues of a structured form; empty for Dense.
std::vector<double> structured_spectrum(const SymOperator::Form& form) {
  return std::visit(
      Overloaded{
          [](const SymOperator::Dense&) { return std::vector<double>{}; },
          [](const SymOperator::Diagonal& f) {
            return std::vector<double>(f.d.data(), f.d.data() + f.d.size());
          },
          [](const SymOperator::ScaledIdentity& f) { return std::vector<double>{f.c}; },
          [](const SymOperator::RankOneUpdate& f) {
            if (f.u.size() == 1) return std::vector<double>{f.c + f.s};
            return std::vector<double>{f.c, f.c + f.s};
          },
          [](const SymOperator::BlockAverage& f) {
            if (f.blocks == 1) return std::vector<double>{f.c + f.s};
            return std::vector<double>{f.c, f.c + f.s};
          },
      },
      form);
}

std::vector<double> spectrum(const SymOperator& op) {
  if (const auto* d = std::get_if<SymOperator::Dense>(&op.form())) {
    Vector v = jacobi_eigen(d->m).values;
    return std::vector<double>(v.data(), v.data() + v.size());
  }
  return structured_spectrum(op.form());
}

}  // namespace

void require_finite(const Vector& x, const char* what) {
  require(x.size() > 0, ErrorCode::kInvalidArgument, std::string(what) + " is empty");
  require(x.allFinite(), ErrorCode::kInvalidArgument, std::string(what) + " has non-finite entries");
}

BlockLayout::BlockLayout(std::vector<Index> dims) : dims_(std::move(dims)) {
  require(!dims_.empty(), ErrorCode::kInvalidArgument, "block layout needs at least one block");
  offsets_.reserve(dims_.size());
  for (Index d : dims_) {
    require(d > 0, ErrorCode::kInvalidArgument, "block dimensions must be positive");
    offsets_.push_back(total_);
    total_ += d;
  }
}

BlockLayout BlockLayout::uniform(Index num_blocks, Index block_dim) {
  require(num_blocks > 0, ErrorCode::kInvalidArgument, "block count must be positive");
  return BlockLayout(std::vector<Index>(static_cast<std::size_t>(num_blocks), block_dim));
}

SymOperator SymOperator::dense(Matrix m) {
  require(m.rows() == m.cols(), ErrorCode::kDimensionMismatch, "operator matrix must be square");
  require(m.rows() > 0, ErrorCode::kInvalidArgument, "operator matrix is empty");
  require(m.allFinite(), ErrorCode::kInvalidArgument, "operator matrix has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-12 * scale, ErrorCode::kInvalidArgument,
          "operator matrix is not symmetric (max |M - M^T| = " + num(asym) + ")");
  Matrix sym = 0.5 * (m + m.transpose());
  return SymOperator(Dense{std::move(sym)});
}

SymOperator SymOperator::diagonal(Vector d) {
  require_finite(d, "diagonal");
  return SymOperator(Diagonal{std::move(d)});
}

SymOperator SymOperator::scaled_identity(double c, Index n) {
  require(n > 0, ErrorCode::kInvalidArgument, "operator dimension must be positive");
  require(std::isfinite(c), ErrorCode::kInvalidArgument, "scale must be finite");
  return SymOperator(ScaledIdentity{c, n});
}

SymOperator SymOperator::rank_one_update(double c, double s, const Vector& a) {
  require_finite(a, "rank-one direction");
  const double norm = a.norm();
  require(norm > 0.0, ErrorCode::kInvalidArgument, "rank-one direction must be nonzero");
  require(std::isfinite(c) && std::isfinite(s), ErrorCode::kInvalidArgument,
          "rank-one coefficients must be finite");
  return SymOperator(RankOneUpdate{c, s, a / norm});
}

SymOperator SymOperator::hyperplane_projection(const Vector& a) { return rank_one_update(1.0, -1.0, a); }

SymOperator SymOperator::block_average(Index blocks, Index block_dim, double c, double s) {
  require(blocks > 0 && block_dim > 0, ErrorCode::kInvalidArgument,
          "block average needs positive block count and size");
  require(std::isfinite(c) && std::isfinite(s), ErrorCode::kInvalidArgument,
          "block average coefficients must be finite");
  return SymOperator(BlockAverage{c, s, blocks, block_dim});
}

Index SymOperator::dim() const {
  return std::visit(Overloaded{
                        [](const Dense& f) { return f.m.rows(); },
                        [](const Diagonal& f) { return f.d.size(); },
                        [](const ScaledIdentity& f) { return f.n; },
                        [](const RankOneUpdate& f) { return f.u.size(); },
                        [](const BlockAverage& f) { return f.blocks * f.block_dim; },
                    },
                    form_);
}

void SymOperator::apply(const Vector& x, Vector& out) const {
  require(x.size() == dim(), ErrorCode::kDimensionMismatch, "operator/vector dimension mismatch");
  std::visit(Overloaded{
                 [&](const Dense& f) {
                   Vector tmp = f.m * x;
                   out = std::move(tmp);
                 },
                 [&](const Diagonal& f) { out = f.d.cwiseProduct(x); },
                 [&](const ScaledIdentity& f) { out = f.c * x; },
                 [&](const RankOneUpdate& f) {
                   const double t = f.s * f.u.dot(x);
                   out = f.c * x + t * f.u;
                 },
                 [&](const BlockAverage& f) {
                   Vector mean = Vector::Zero(f.block_dim);
                   for (Index j = 0; j < f.blocks; ++j) mean += x.segment(j * f.block_dim, f.block_dim);
                   mean *= f.s / static_cast<double>(f.blocks);
                   out.resize(x.size());
                   for (Index j = 0; j < f.blocks; ++j) {
                     auto seg = out.segment(j * f.block_dim, f.block_dim);
                     seg = f.c * x.segment(j * f.block_dim, f.block_dim) + mean;
                   }
                 },
             },
             form_);
}

Vector SymOperator::operator*(const Vector& x) const {
  Vector out;
  apply(x, out);
  return out;
}

Matrix SymOperator::to_dense() const {
  const Index n = dim();
  return std::visit(Overloaded{
                        [](const Dense& f) -> Matrix { return f.m; },
                        [](const Diagonal& f) -> Matrix { return f.d.asDiagonal(); },
                        [n](const ScaledIdentity& f) -> Matrix { return f.c * Matrix::Identity(n, n); },
                        [n](const RankOneUpdate& f) -> Matrix {
                          return f.c * Matrix::Identity(n, n) + f.s * f.u * f.u.transpose();
                        },
                        [n](const BlockAverage& f) -> Matrix {
                          Matrix m = f.c * Matrix::Identity(n, n);
                          const double w = f.s / static_cast<double>(f.blocks);
                          for (Index i = 0; i < f.blocks; ++i)
                            for (Index j = 0; j < f.blocks; ++j)
                              m.block(i * f.block_dim, j * f.block_dim, f.block_dim, f.block_dim)
                                  .diagonal()
                                  .array() += w;
                          return m;
                        },
                    },
                    form_);
}

SymOperator SymOperator::affine(double scale, double shift) const {
  return std::visit(Overloaded{
                        [&](const Dense& f) {
                          Matrix m = scale * f.m;
                          m.diagonal().array() += shift;
                          return SymOperator(Dense{std::move(m)});
                        },
                        [&](const Diagonal& f) {
                          return SymOperator(Diagonal{(scale * f.d.array() + shift).matrix()});
                        },
                        [&](const ScaledIdentity& f) {
                          return SymOperator(ScaledIdentity{scale * f.c + shift, f.n});
                        },
                        [&](const RankOneUpdate& f) {
                          return SymOperator(RankOneUpdate{scale * f.c + shift, scale * f.s, f.u});
                        },
                        [&](const BlockAverage& f) {
                          return SymOperator(
                              BlockAverage{scale * f.c + shift, scale * f.s, f.blocks, f.block_dim});
                        },
                    },
                    form_);
}

EigenDecomposition jacobi_eigen(const Matrix& sym, int max_sweeps) {
  require(sym.rows() == sym.cols(), ErrorCode::kDimensionMismatch, "eigensolver needs a square matrix");
  const Index n = sym.rows();
  Matrix a = 0.5 * (sym + sym.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double frob = a.norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  bool converged = false;
  for (int sweep = 0; sweep <= max_sweeps; ++sweep) {
    const double off = off_norm();
    if (off <= 1e-14 * frob || off < std::numeric_limits<double>::min()) {
      converged = true;
      break;
    }
    if (sweep == max_sweeps) break;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < std::numeric_limits<double>::min()) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    throw EstimatorFailure("Jacobi eigensolver did not converge in " + std::to_string(max_sweeps) +
                               " sweeps",
                           n > 0 ? a.diagonal().cwiseAbs().maxCoeff() : 0.0);
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) < a(j, j); });
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

double min_eigenvalue(const SymOperator& op) {
  const auto s = spectrum(op);
  return *std::min_element(s.begin(), s.end());
}

double max_eigenvalue(const SymOperator& op) {
  const auto s = spectrum(op);
  return *std::max_element(s.begin(), s.end());
}

std::pair<double, double> eigenvalue_range(const SymOperator& op) {
  const auto s = spectrum(op);
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  return {*lo, *hi};
}

double spectral_norm(const SymOperator& op) {
  const auto s = spectrum(op);
  double r = 0.0;
  for (double l : s) r = std::max(r, std::abs(l));
  return r;
}

double matrix_spectral_norm(const Matrix& m, int max_iters, double tol) {
  if (m.size() == 0) return 0.0;
  require(m.allFinite(), ErrorCode::kInvalidArgument, "matrix has non-finite entries");
  if (m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  SplitMix64 rng(0x9e3779b97f4a7c15ULL);
  Vector v(m.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = rng.uniform() - 0.5;
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector w = m.transpose() * (m * v);
    const double next = w.norm();
    if (next == 0.0) {
      // Start vector landed in the null space; restart along a fresh direction.
      for (Index i = 0; i < v.size(); ++i) v(i) = rng.uniform() - 0.5;
      v.normalize();
      continue;
    }
    v = w / next;
    if (std::abs(next - lam) <= tol * next) return std::sqrt(next);
    lam = next;
  }
  throw EstimatorFailure("power iteration hit its iteration cap", std::sqrt(lam));
}

SymOperator spectral_function(const SymOperator& op, const std::function<double(double)>& fn) {
  return std::visit(
      Overloaded{
          [&](const SymOperator::Dense& f) {
            const auto eig = jacobi_eigen(f.m);
            Vector mapped = eig.values.unaryExpr(fn);
            Matrix m = eig.vectors * mapped.asDiagonal() * eig.vectors.transpose();
            return SymOperator::dense(0.5 * (m + m.transpose()));
          },
          [&](const SymOperator::Diagonal& f) { return SymOperator::diagonal(f.d.unaryExpr(fn)); },
          [&](const SymOperator::ScaledIdentity& f) { return SymOperator::scaled_identity(fn(f.c), f.n); },
          [&](const SymOperator::RankOneUpdate& f) {
            if (f.u.size() == 1) return SymOperator::scaled_identity(fn(f.c + f.s), 1);
            const double fc = fn(f.c);
            return SymOperator::rank_one_update(fc, fn(f.c + f.s) - fc, f.u);
          },
          [&](const SymOperator::BlockAverage& f) {
            if (f.blocks == 1) return SymOperator::scaled_identity(fn(f.c + f.s), f.block_dim);
            const double fc = fn(f.c);
            return SymOperator::block_average(f.blocks, f.block_dim, fc, fn(f.c + f.s) - fc);
          },
      },
      op.form());
}

bool is_idempotent(const SymOperator& op, double tol) {
  if (const auto* d = std::get_if<SymOperator::Dense>(&op.form())) {
    const double scale = std::max(1.0, d->m.cwiseAbs().maxCoeff());
    return (d->m * d->m - d->m).cwiseAbs().maxCoeff() <= tol * scale;
  }
  for (double l : structured_spectrum(op.form()))
    if (std::abs(l) > tol && std::abs(l - 1.0) > tol) return false;
  return true;
}

SymOperator psd_sqrt(const SymOperator& op) {
  const double lo = min_eigenvalue(op);
  if (lo < -1e-10) throw NotPsdError("square root of an operator with a negative eigenvalue", lo);
  if (op.is_dense() && is_idempotent(op)) return op;
  const double floor = static_cast<double>(op.dim()) * kEps * std::max(1.0, spectral_norm(op));
  return spectral_function(op, [floor](double l) { return l <= floor ? 0.0 : std::sqrt(l); });
}

Matrix pseudoinverse(const Matrix& m, double rcond) {
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  require(m.allFinite(), ErrorCode::kInvalidArgument, "matrix has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = (rcond < 0.0 ? static_cast<double>(std::max(m.rows(), m.cols())) * kEps : rcond) *
                        (sv.size() > 0 ? sv(0) : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix row_space_projector(const Matrix& m, double rcond) {
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.cols());
  require(m.allFinite(), ErrorCode::kInvalidArgument, "matrix has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = (rcond < 0.0 ? static_cast<double>(std::max(m.rows(), m.cols())) * kEps : rcond) *
                        (sv.size() > 0 ? sv(0) : 0.0);
  Index r = 0;
  while (r < sv.size() && sv(r) > cutoff) ++r;
  const Matrix vr = svd.matrixV().leftCols(r);
  return vr * vr.transpose();
}

SymOperator sym_pseudoinverse(const SymOperator& op, double rcond) {
  const double cutoff = rcond * spectral_norm(op);
  return spectral_function(op, [cutoff](double l) { return std::abs(l) > cutoff ? 1.0 / l : 0.0; });
}

SymOperator inverse(const SymOperator& op) {
  return spectral_function(op, [](double l) {
    if (std::abs(l) < std::numeric_limits<double>::min()) fail(ErrorCode::kInvalidArgument, "operator is singular");
    return 1.0 / l;
  });
}

SymOperator linear_combination(std::span<const SymOperator> ops, std::span<const double> weights) {
  require(!ops.empty(), ErrorCode::kInvalidArgument, "linear combination of no operators");
  require(ops.size() == weights.size(), ErrorCode::kDimensionMismatch,
          "operator and weight counts differ");
  const Index n = ops.front().dim();
  for (const auto& op : ops)
    require(op.dim() == n, ErrorCode::kDimensionMismatch, "operators have different dimensions");

  auto all_of = [&](auto pred) { return std::all_of(ops.begin(), ops.end(), pred); };
  auto is = [](const SymOperator& op, auto tag) {
    return std::holds_alternative<decltype(tag)>(op.form());
  };
  auto scaled_or = [&](auto tag) {
    return all_of([&](const SymOperator& op) {
      return is(op, SymOperator::ScaledIdentity{}) || is(op, tag);
    });
  };

  if (scaled_or(SymOperator::ScaledIdentity{})) {
    double c = 0.0;
    for (std::size_t i = 0; i < ops.size(); ++i)
      c += weights[i] * std::get<SymOperator::ScaledIdentity>(ops[i].form()).c;
    return SymOperator::scaled_identity(c, n);
  }

  if (scaled_or(SymOperator::Diagonal{})) {
    Vector d = Vector::Zero(n);
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (const auto* s = std::get_if<SymOperator::ScaledIdentity>(&ops[i].form()))
        d.array() += weights[i] * s->c;
      else
        d += weights[i] * std::get<SymOperator::Diagonal>(ops[i].form()).d;
    }
    return SymOperator::diagonal(std::move(d));
  }

  if (scaled_or(SymOperator::BlockAverage{})) {
    const SymOperator::BlockAverage* ref = nullptr;
    bool same_layout = true;
    for (const auto& op : ops) {
      if (const auto* b = std::get_if<SymOperator::BlockAverage>(&op.form())) {
        if (!ref) ref = b;
        else if (b->blocks != ref->blocks) same_layout = false;
      }
    }
    if (same_layout) {
      double c = 0.0, s = 0.0;
      for (std::size_t i = 0; i < ops.size(); ++i) {
        if (const auto* si = std::get_if<SymOperator::ScaledIdentity>(&ops[i].form())) {
          c += weights[i] * si->c;
        } else {
          const auto& b = std::get<SymOperator::BlockAverage>(ops[i].form());
          c += weights[i] * b.c;
          s += weights[i] * b.s;
        }
      }
      return SymOperator::block_average(ref->blocks, ref->block_dim, c, s);
    }
  }

  if (scaled_or(SymOperator::RankOneUpdate{})) {
    const SymOperator::RankOneUpdate* ref = nullptr;
    bool collinear = true;
    for (const auto& op : ops) {
      if (const auto* r = std::get_if<SymOperator::RankOneUpdate>(&op.form())) {
        if (!ref) ref = r;
        else if (std::abs(std::abs(r->u.dot(ref->u)) - 1.0) > 1e-14) collinear = false;
      }
    }
    if (collinear) {
      double c = 0.0, s = 0.0;
      for (std::size_t i = 0; i < ops.size(); ++i) {
        if (const auto* si = std::get_if<SymOperator::ScaledIdentity>(&ops[i].form())) {
          c += weights[i] * si->c;
        } else {
          const auto& r = std::get<SymOperator::RankOneUpdate>(ops[i].form());
          c += weights[i] * r.c;
          s += weights[i] * r.s;
        }
      }
      return SymOperator::rank_one_update(c, s, ref->u);
    }
  }

  Matrix m = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < ops.size(); ++i) m += weights[i] * ops[i].to_dense();
  return SymOperator::dense(0.5 * (m + m.transpose()));
}

Matrix dense_product(std::span<const SymOperator> chain) {
  require(!chain.empty(), ErrorCode::kInvalidArgument, "empty operator chain");
  const Index n = chain.front().dim();
  Matrix m = Matrix::Identity(n, n);
  for (const auto& op : chain) {
    require(op.dim() == n, ErrorCode::kDimensionMismatch, "operator chain dimension mismatch");
    m = m * op.to_dense();
  }
  return m;
}

StrongPositivityReport check_strongly_positive_inverse(const SymOperator& op, double delta, int probes,
                                                       std::uint64_t seed) {
  require(delta > 0.0 && std::isfinite(delta), ErrorCode::kInvalidArgument,
          "strong positivity modulus must be positive");
  require(probes > 0, ErrorCode::kInvalidArgument, "probe count must be positive");
  const double lo = min_eigenvalue(op);
  if (lo < delta * (1.0 - 1e-10) - 1e-12)
    throw NotPsdError("operator is not strongly positive with modulus " + num(delta), lo);

  const SymOperator inv = inverse(op);
  const double op_norm = spectral_norm(op);
  StrongPositivityReport rep;
  rep.inverse_norm = spectral_norm(inv);
  rep.norm_margin = 1.0 / delta - rep.inverse_norm;
  rep.lower_margin = std::numeric_limits<double>::infinity();
  rep.upper_margin = std::numeric_limits<double>::infinity();
  rep.probes = probes;

  SplitMix64 rng(seed);
  const Index n = op.dim();
  Vector x(n), y;
  for (int k = 0; k < probes; ++k) {
    for (Index i = 0; i < n; ++i) x(i) = 2.0 * rng.uniform() - 1.0;
    const double nx2 = x.squaredNorm();
    if (nx2 == 0.0) continue;
    inv.apply(x, y);
    const double q = y.dot(x) / nx2;
    rep.lower_margin = std::min(rep.lower_margin, q - delta / (op_norm * op_norm));
    rep.upper_margin = std::min(rep.upper_margin, 1.0 / delta - q);
  }
  return rep;
}

}  // namespace fmh

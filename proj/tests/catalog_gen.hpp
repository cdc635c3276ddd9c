#pragma once

// Random valid inputs for every affine-map constructor, shared by the unit and
// acceptance suites.

#include <string>
#include <vector>

#include "fmhsdm/affine_map.hpp"
#include "oracles.hpp"

namespace gen {

using fmh::AffineFneMap;
using fmh::Index;
using oracle::Mat;
using oracle::Vec;

struct LsInstance {
  Mat a;
  Vec b;
};

inline LsInstance ls_instance(oracle::Rng& rng) {
  const Index m = rng.integer(1, 12), n = rng.integer(1, 12);
  const Index r = rng.integer(0, static_cast<int>(std::min(m, n)));
  return {oracle::rank_deficient(rng, m, n, r), rng.vec(m)};
}

struct ConstrainedInstance {
  Mat a;
  Vec b;
  Mat a0;
  Vec b0;
};

inline ConstrainedInstance constrained_instance(oracle::Rng& rng) {
  const Index d = rng.integer(1, 10);
  const Index m = rng.integer(1, 10);
  const Index m0 = rng.integer(1, 6);
  const Mat a = oracle::rank_deficient(rng, m, d, rng.integer(0, static_cast<int>(std::min(m, d))));
  const Mat a0 = oracle::rank_deficient(rng, m0, d, rng.integer(1, static_cast<int>(std::min(m0, d))));
  const Vec feasible = rng.vec(d);
  return {a, rng.vec(m), a0, a0 * feasible};
}

inline std::vector<double> simplex_weights(oracle::Rng& rng, Index count) {
  std::vector<double> w(static_cast<std::size_t>(count));
  double sum = 0.0;
  for (auto& x : w) sum += (x = rng.uniform(0.1, 1.0));
  for (auto& x : w) x /= sum;
  return w;
}

/// Random member of the class: symmetric Q with spectrum in [0, 1], pi in range(I - Q).
inline AffineFneMap random_fne(oracle::Rng& rng, Index n) {
  const Mat q = oracle::sym_with_spectrum(rng, n, 0.0, 1.0);
  const Vec w = rng.vec(n);
  const Vec pi = (Mat::Identity(n, n) - q) * w;
  return AffineFneMap::create(fmh::SymOperator::dense(q), pi, w);
}

struct NamedMap {
  std::string constructor;
  AffineFneMap map;
};

inline const std::vector<std::string>& constructor_names() {
  static const std::vector<std::string> names = {
      "consensus",        "hyperplane",        "affine-set",         "averaged",           "convex-combine",
      "sandwich",         "ls-grad",           "ls-ker",             "ls-gram",            "ls-resolvent",
      "ls-row-average",   "ls-normal-average", "cls-lifted-grad",    "cls-lifted-proj",    "cls-lifted-resolvent",
      "cls-lifted-average", "cls-projected"};
  return names;
}

/// One random instance of the named constructor.
inline AffineFneMap make_instance(const std::string& name, oracle::Rng& rng) {
  using namespace fmh;
  if (name == "consensus") return make_consensus_projection(rng.integer(1, 4), rng.integer(1, 8));
  if (name == "hyperplane") {
    Vec a = rng.vec(rng.integer(1, 32));
    return make_hyperplane_projection(a, rng.normal());
  }
  if (name == "affine-set") {
    const Index d = rng.integer(1, 16), m = rng.integer(1, 8);
    const Mat a0 = oracle::rank_deficient(rng, m, d, rng.integer(0, static_cast<int>(std::min(m, d))));
    return make_affine_set_projection(a0, a0 * rng.vec(d));
  }
  if (name == "averaged") return averaged(random_fne(rng, rng.integer(1, 16)), rng.uniform(0.01, 0.99));
  if (name == "convex-combine") {
    const Index n = rng.integer(1, 16);
    const Index k = rng.integer(1, 4);
    std::vector<AffineFneMap> maps;
    for (Index j = 0; j < k; ++j) maps.push_back(random_fne(rng, n));
    const auto w = simplex_weights(rng, k);
    return convex_combine(maps, w);
  }
  if (name == "sandwich") {
    const Index n = rng.integer(1, 16);
    std::vector<AffineMap> outer;
    for (int j = rng.integer(0, 3); j > 0; --j)
      outer.push_back(AffineMap{SymOperator::dense(oracle::sym_with_spectrum(rng, n, -1.0, 1.0)), rng.vec(n)});
    return sandwich_compose(random_fne(rng, n), outer);
  }
  if (name.rfind("ls-", 0) == 0) {
    const LsInstance in = ls_instance(rng);
    LsParams p;
    p.mu = rng.uniform(0.05, 1.0);
    p.gamma = rng.uniform(0.05, 5.0);
    p.beta = rng.uniform(0.05, 1.0);
    p.theta = rng.uniform(0.05, 1.0);
    if (in.a.cols() > 1 && rng.integer(0, 1)) p.weights = simplex_weights(rng, in.a.cols());
    const LsVariant v = name == "ls-grad"        ? LsVariant::kGradStep
                        : name == "ls-ker"       ? LsVariant::kKerProjection
                        : name == "ls-gram"      ? LsVariant::kGramProjection
                        : name == "ls-resolvent" ? LsVariant::kResolvent
                        : name == "ls-row-average" ? LsVariant::kRowHyperplaneAverage
                                                   : LsVariant::kNormalHyperplaneAverage;
    return make_ls_map(in.a, in.b, v, p);
  }
  const ConstrainedInstance in = constrained_instance(rng);
  ConstrainedLsParams p;
  p.mu = rng.uniform(0.05, 1.0);
  p.gamma = rng.uniform(0.05, 5.0);
  p.theta = rng.uniform(0.05, 1.0);
  p.beta = rng.uniform(0.05, 1.0);
  const ConstrainedLsVariant v = name == "cls-lifted-grad"        ? ConstrainedLsVariant::kLiftedGrad
                                 : name == "cls-lifted-proj"      ? ConstrainedLsVariant::kLiftedProjection
                                 : name == "cls-lifted-resolvent" ? ConstrainedLsVariant::kLiftedResolvent
                                 : name == "cls-lifted-average"   ? ConstrainedLsVariant::kLiftedHyperplaneAverage
                                                                  : ConstrainedLsVariant::kProjectedComposition;
  return make_constrained_ls_map(in.a, in.b, in.a0, in.b0, v, p);
}

inline const std::vector<fmh::LsVariant>& ls_variants() {
  using fmh::LsVariant;
  static const std::vector<LsVariant> v = {LsVariant::kGradStep,   LsVariant::kKerProjection,
                                           LsVariant::kGramProjection, LsVariant::kResolvent,
                                           LsVariant::kRowHyperplaneAverage,
                                           LsVariant::kNormalHyperplaneAverage};
  return v;
}

/// Worst |T z - z| over the six least-squares maps, at A^+ b and at `shifts`
/// random points A^+ b + (I - A^+ A) r.
inline double ls_cross_residual(const LsInstance& in, oracle::Rng& rng, int shifts) {
  const Mat ap = oracle::pinv(in.a);
  const Vec base = ap * in.b;
  const Index n = in.a.cols();
  std::vector<Vec> points{base};
  for (int k = 0; k < shifts; ++k) points.push_back(base + (Mat::Identity(n, n) - ap * in.a) * rng.vec(n));
  double worst = 0.0;
  for (const auto v : ls_variants()) {
    const AffineFneMap t = fmh::make_ls_map(in.a, in.b, v);
    for (const auto& z : points) worst = std::max(worst, (t.apply(z) - z).norm());
  }
  return worst;
}

}  // namespace gen

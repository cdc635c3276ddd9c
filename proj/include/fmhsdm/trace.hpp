#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "fmhsdm/linalg.hpp"

namespace fmh {

enum class Variant {
  kFmHsdm,
  kFmHsdmG0,
  kFmHsdmF0,
  kFmHsdmIII,
  kHsdm,
  kHcgm,
  kAdmm,
  kPdCondat,
  kPdCp,
  kFista,
};

std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
bool is_fm_hsdm(Variant v);

struct IterationRecord {
  std::int64_t n = 0;
  double distance = 0.0;  // |x_n - x_*|, NaN without a known minimizer
  double objective = 0.0;  // finite part of f + g
  bool infeasible = false;
  double fixed_point_residual = 0.0;  // |(I - T) x_n|
  double seconds = 0.0;
};

struct SolverTrace {
  Variant variant = Variant::kFmHsdm;
  double alpha = 0.0;
  double lambda = 0.0;
  std::vector<IterationRecord> records;
  std::vector<Vector> iterates;       // x_n
  std::vector<Vector> half_iterates;  // entry n holds x_{n+1/2}
  std::vector<Vector> duals;          // entry n holds v_n; entry 0 is empty
  Vector final_iterate;

  std::int64_t iterations() const { return static_cast<std::int64_t>(records.size()) - 1; }
  bool has_duals() const { return duals.size() >= 2; }
};

/// Called after each iterate x_n is formed. `half` is x_{n-1/2} and `dual` is
/// v_n; either may be null when undefined or not tracked.
using IterationObserver =
    std::function<void(std::int64_t n, const Vector& x, const Vector* half, const Vector* dual)>;

}  // namespace fmh

#pragma once

#include <chrono>
#include <optional>

#include "fmhsdm/certificate.hpp"
#include "fmhsdm/solver.hpp"

namespace fmh::detail {

/// Shared bookkeeping for every solver: per-iterate records, divergence
/// guard, dual tracking, observer dispatch and early stopping.
class Recorder {
 public:
  Recorder(const Problem& problem, const SolverConfig& config, const IterationObserver& observer,
           bool supports_duals);

  /// Records x_n. `tx` is T x_n when already computed; `half` is x_{n-1/2}.
  /// Returns true when the early-stop test fires.
  bool record(std::int64_t n, const Vector& x, const Vector* tx, const Vector* half);

  SolverTrace finish(const Vector& x_final);

 private:
  const Problem& problem_;
  const SolverConfig& config_;
  const IterationObserver& observer_;
  std::chrono::steady_clock::time_point start_;
  SolverTrace trace_;
  std::optional<DualState> dual_;
  Vector scratch_;
  Vector prev_x_;
};

Vector initial_point(const Problem& problem, const SolverConfig& config);

}  // namespace fmh::detail

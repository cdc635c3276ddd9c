#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace fmh {

/// Failure categories shared by the C++ core and the C API (see fmhsdm.h).
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kStepSize = 3,
  kDivergence = 4,
  kNotPsd = 5,
  kEstimatorFailure = 6,
  kEmptyFixedPointSet = 7,
  kUnsupported = 8,
  kMetricCorruption = 9,
  kMissingData = 10,
  kIo = 11,
  kInternal = 99,
};

/// Short "%g" rendering of a number for error messages.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when an iterative eigenvalue estimator hits its iteration cap.
class EstimatorFailure : public Error {
 public:
  EstimatorFailure(const std::string& what, double last_estimate)
      : Error(ErrorCode::kEstimatorFailure, what), last_estimate_(last_estimate) {}
  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

class NotPsdError : public Error {
 public:
  NotPsdError(const std::string& what, double eigenvalue)
      : Error(ErrorCode::kNotPsd, what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t iteration)
      : Error(ErrorCode::kDivergence, what), iteration_(iteration) {}
  std::int64_t iteration() const noexcept { return iteration_; }

 private:
  std::int64_t iteration_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace fmh

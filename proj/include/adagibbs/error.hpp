#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adagibbs {

/// Raised for malformed inputs, files and flags. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a sampler or estimator meets a non-finite or otherwise
/// unusable numeric quantity. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A series with zero variance; autocorrelation is undefined.
class DegenerateSeries : public NumericError {
 public:
  DegenerateSeries() : NumericError("degenerate series: zero sample variance") {}
  explicit DegenerateSeries(const std::string& what) : NumericError(what) {}
};

class NotPositiveDefinite : public NumericError {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : NumericError("matrix not positive definite (failing pivot " +
                     std::to_string(pivot) + ")"),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// A model update failed inside run_scan; carries the cycle index.
class ScanFailure : public NumericError {
 public:
  ScanFailure(std::size_t cycle, const std::string& cause)
      : NumericError("cycle " + std::to_string(cycle) + ": " + cause), cycle_(cycle) {}

  std::size_t cycle() const noexcept { return cycle_; }

 private:
  std::size_t cycle_;
};

}  // namespace adagibbs

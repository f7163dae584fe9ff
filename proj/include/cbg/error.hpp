#pragma once

#include <stdexcept>
#include <string>

namespace cbg {

// Error taxonomy. The CLI maps the first group to exit code 2 and the
// numerical group to exit code 3.

/// Input outside the mathematical domain of an operation (negative length, NA > 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Structure specification violates its invariants.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Array shapes or grids that should match do not.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested key (monitor name, wavelength) is not present.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Time stepping diverged or produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resonance fitting failed (no peak, degenerate spectrum).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Measured or computed data is unusable (non-positive reference flux, zero rate, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every point of a sweep failed.
class SweepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cbg

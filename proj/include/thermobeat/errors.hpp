#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace thermobeat {

// Every error raised by the library derives from Error and carries a short
// machine-readable kind plus the process exit status the CLI maps it to.
class Error : public std::runtime_error {
 public:
  Error(const std::string& kind, int exit_code, const std::string& message)
      : std::runtime_error(message), kind_(kind), exit_code_(exit_code) {}

  const std::string& kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string kind_;
  int exit_code_;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& m) : Error("domain", 3, m) {}
};

/// Invalid configuration: bad config text, unknown keys, violated
/// sampling preconditions.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("config", 4, m) {}
};

/// Malformed or inconsistent data (unsorted streams, bad files, grids).
class DataError : public Error {
 public:
  explicit DataError(const std::string& m) : Error("data", 5, m) {}
};

/// Not enough data for the requested statistic.
class StatisticsError : public Error {
 public:
  explicit StatisticsError(const std::string& m) : Error("statistics", 6, m) {}
};

/// The beat estimator could not find a significant modulation.
class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& m) : Error("estimation", 7, m) {}
};

/// Least-squares fit failed to converge.
class FitError : public Error {
 public:
  explicit FitError(const std::string& m) : Error("fit", 8, m) {}
};

/// Shortest round-trip-ish rendering for messages ("2.5e-10", not "0.000000").
inline std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace thermobeat

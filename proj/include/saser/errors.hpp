#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace saser {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input (parameters, configs, labels). Carries every violation found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::string what) : Error(what), violations_{std::move(what)} {}
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A numerical method failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(std::string what, double residual = 0.0) : Error(std::move(what)), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class DegeneracyError : public SolverError {
 public:
  using SolverError::SolverError;
};

class IntegrationError : public SolverError {
 public:
  using SolverError::SolverError;
};

class RankDeficiencyError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Physically meaningless request, e.g. an estimator outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace saser

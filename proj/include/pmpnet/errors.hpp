#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pmpnet {

// Bad problem id, malformed config, field-presence violations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluation outside [0, T] or another argument outside its domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Misaligned or otherwise malformed input arrays.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A loss or gradient went non-finite. `where` names the parameter block or
// grid point responsible.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& msg, std::string where)
      : std::runtime_error(msg + " [" + where + "]"), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

// Shooting did not converge, or the problem has no closed-form stationary control.
class OracleError : public std::runtime_error {
 public:
  OracleError(const std::string& msg, double residual)
      : std::runtime_error(msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Optimizer hit a non-finite loss. Carries the iteration and the best
// parameters seen before it happened.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& msg, std::size_t iteration,
                std::vector<double> best_params)
      : std::runtime_error(msg + " at iteration " + std::to_string(iteration)),
        iteration_(iteration),
        best_params_(std::move(best_params)) {}
  std::size_t iteration() const { return iteration_; }
  const std::vector<double>& best_params() const { return best_params_; }

 private:
  std::size_t iteration_;
  std::vector<double> best_params_;
};

}  // namespace pmpnet

#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace coefid {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: bad grid sizes, malformed spec files, mismatched fields.
class ValidationError : public Error {
public:
  using Error::Error;
};

class GridMismatch : public ValidationError {
public:
  GridMismatch() : ValidationError("fields live on different grids") {}
};

class UnknownExample : public ValidationError {
public:
  explicit UnknownExample(const std::string& id)
      : ValidationError("unknown example id: " + id) {}
};

/// A linear solve that exhausted its budget or met a singular operator.
class NonConvergence : public Error {
public:
  NonConvergence(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }
  const std::optional<double>& lambda() const noexcept { return lambda_; }

  /// Copy of this error tagged with the λ whose forward problem failed.
  NonConvergence with_lambda(double lambda) const {
    NonConvergence e(std::string(what()) + " (lambda = " + std::to_string(lambda) + ")",
                     residual_, iterations_);
    e.lambda_ = lambda;
    return e;
  }

private:
  double residual_;
  int iterations_;
  std::optional<double> lambda_;
};

class IllConditioned : public Error {
public:
  IllConditioned(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

private:
  double condition_;
};

class ZeroDenominator : public Error {
public:
  ZeroDenominator() : Error("reference field has zero L1 norm") {}
};

}  // namespace coefid

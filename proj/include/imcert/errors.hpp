#pragma once

#include <stdexcept>
#include <string>

namespace imcert {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NonSquareError : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

// Non-finite entries, non-positive weights, bad parameters.
class ValueError : public Error {
public:
  using Error::Error;
};

class InvalidLabel : public Error {
public:
  using Error::Error;
};

class NotWellPosed : public Error {
public:
  NotWellPosed(double measure)
      : Error("network is not well-posed: weighted matrix measure " +
              std::to_string(measure) + " >= 1"),
        measure_(measure) {}
  double measure() const { return measure_; }

private:
  double measure_;
};

// Iteration stopped without meeting the tolerance. `iterations` is the number
// of steps taken and `residual` the last step norm (may be inf on blow-up).
class MaxIterExceeded : public Error {
public:
  MaxIterExceeded(std::size_t iterations, double residual, bool diverged)
      : Error(std::string(diverged ? "iteration diverged" : "iteration did not converge") +
              " after " + std::to_string(iterations) + " steps (residual " +
              std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual),
        diverged_(diverged) {}

  std::size_t iterations() const { return iterations_; }
  double residual() const { return residual_; }
  bool diverged() const { return diverged_; }

private:
  std::size_t iterations_;
  double residual_;
  bool diverged_;
};

class ParseError : public Error {
public:
  using Error::Error;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace imcert

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imcert/linalg.hpp"

namespace imcert {

// Scalar activation applied elementwise. Every supported kind is weakly
// increasing with difference quotients in [0, 1].
class Activation {
public:
  enum class Kind { relu, identity, tanh, leaky_relu, saturation };

  static Activation relu() { return Activation(Kind::relu); }
  static Activation identity() { return Activation(Kind::identity); }
  static Activation tanh() { return Activation(Kind::tanh); }
  static Activation leaky_relu(double slope);
  static Activation saturation(double lo, double hi);

  Kind kind() const { return kind_; }
  double slope() const { return slope_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double operator()(double x) const;
  Vector apply(std::span<const double> v) const;

  std::string name() const;
  static Kind parse_kind(const std::string& name);

  friend bool operator==(const Activation&, const Activation&) = default;

private:
  explicit Activation(Kind k) : kind_(k) {}

  Kind kind_ = Kind::relu;
  double slope_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

Vector apply_activation(const Activation& act, std::span<const double> v);

// x = Phi(A x + B u + b),  y = C x + c.
class ImplicitNetwork {
public:
  ImplicitNetwork(Matrix A, Matrix B, Matrix C, Vector b, Vector c,
                  Activation activation = Activation::relu(),
                  std::optional<WeightVector> eta = std::nullopt);

  std::size_t n() const { return A_.rows(); }
  std::size_t r() const { return B_.cols(); }
  std::size_t q() const { return C_.rows(); }

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& C() const { return C_; }
  const Vector& b() const { return b_; }
  const Vector& c() const { return c_; }
  const Activation& activation() const { return activation_; }

  bool has_eta() const { return has_eta_; }
  // The weight used for every norm and measure; all ones when none was given.
  const WeightVector& eta() const { return eta_; }

  // N(x, u) = Phi(A x + B u + b)
  Vector map(std::span<const double> x, std::span<const double> u) const;
  Vector output(std::span<const double> x) const;

  friend bool operator==(const ImplicitNetwork&, const ImplicitNetwork&) = default;

private:
  Matrix A_, B_, C_;
  Vector b_, c_;
  Activation activation_;
  bool has_eta_ = false;
  WeightVector eta_;
};

struct WellPosednessReport {
  double measure = 0.0;
  double alpha_star = 1.0;
  double contraction_factor = 0.0;
  bool well_posed = false;
};

WellPosednessReport check_well_posedness(const ImplicitNetwork& net);

// A = [eta] T [eta]^-1 - diag(|T| 1), which has weighted measure <= 0.
Matrix build_wellposed_weights(const Matrix& T, const WeightVector& eta);

struct SolverOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  // Step size of the averaged iteration; defaults to alpha*. Must lie in (0, alpha*].
  std::optional<double> alpha;
  // Keep every step norm in SolveDiagnostics::step_norms.
  bool record_steps = false;
};

struct SolveDiagnostics {
  std::size_t iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  double alpha = 1.0;
  std::vector<double> step_norms;
};

struct ForwardSolution {
  Vector x;
  Vector y;
  SolveDiagnostics diag;
};

// Resolves the step size for `net` given an optional override.
double resolve_alpha(const WellPosednessReport& report, std::optional<double> alpha);

// Averaged Picard iteration x <- (1 - alpha) x + alpha N(x, u) from x0 (zero
// when empty) until the weighted step norm is <= tol.
ForwardSolution forward_solve(const ImplicitNetwork& net, std::span<const double> u,
                              const SolverOptions& opts = {},
                              std::span<const double> x0 = {});

}  // namespace imcert

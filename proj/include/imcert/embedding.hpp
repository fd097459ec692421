#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "imcert/linalg.hpp"
#include "imcert/network.hpp"

namespace imcert {

// Box [lower, upper] with lower <= upper componentwise.
class IntervalVector {
public:
  IntervalVector() = default;
  IntervalVector(Vector lower, Vector upper);
  // [center - radius, center + radius]
  static IntervalVector ball(std::span<const double> center, double radius);

  std::size_t size() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  Vector center() const;
  // Half-width of the widest component.
  double radius() const;
  bool contains(std::span<const double> v, double slack = 0.0) const;
  bool subset_of(const IntervalVector& other, double slack = 0.0) const;

private:
  Vector lower_;
  Vector upper_;
};

struct EmbeddedFixedPoint {
  Vector x_lower;
  Vector x_upper;
  IntervalVector y_box;
  SolveDiagnostics diag;
};

// N^E(x, x_hat, u, u_hat) = Phi(M x + N x_hat + [B]+ u + [B]- u_hat + b), with M and N
// the Metzler and non-Metzler parts of A.
Vector decomposition_function(const ImplicitNetwork& net, std::span<const double> x,
                              std::span<const double> x_hat, std::span<const double> u,
                              std::span<const double> u_hat);

using DecompositionFn =
    std::function<Vector(std::span<const double>, std::span<const double>,
                         std::span<const double>, std::span<const double>)>;

struct KamkeReport {
  bool passed = true;
  std::string counterexample;
  explicit operator bool() const { return passed; }
};

// Randomized check of the three mixed-monotonicity conditions for `decomp`
// against the network map. Uses the network's own decomposition by default.
KamkeReport verify_kamke(const ImplicitNetwork& net, std::size_t samples, std::uint64_t seed);
KamkeReport verify_kamke(const ImplicitNetwork& net, const DecompositionFn& decomp,
                         std::size_t samples, std::uint64_t seed);

// Called after every stacked iterate with (k, lower, upper).
using IterateObserver =
    std::function<void(std::size_t, std::span<const double>, std::span<const double>)>;

// Averaged iteration of the embedded network from (0, 0). Throws NotWellPosed or
// MaxIterExceeded.
EmbeddedFixedPoint embedded_solve(const ImplicitNetwork& net, const IntervalVector& input_box,
                                  const SolverOptions& opts = {},
                                  const IterateObserver& observer = {});

EmbeddedFixedPoint reach_box(const ImplicitNetwork& net, std::span<const double> u,
                             double epsilon, const SolverOptions& opts = {});

// [C]+ lo + [C]- hi + c,  [C]- lo + [C]+ hi + c
IntervalVector output_box(const ImplicitNetwork& net, std::span<const double> x_lower,
                          std::span<const double> x_upper);

namespace detail {

// Shared stacked iteration:
//   lo <- (1-a) lo + a Phi(same lo + cross hi + [B]+ u_lo + [B]- u_hi + b)
//   hi <- (1-a) hi + a Phi(same hi + cross lo + [B]+ u_hi + [B]- u_lo + b)
// With `detect_divergence` the run aborts once the state stops being finite or
// exceeds a very large magnitude.
EmbeddedFixedPoint solve_stacked(const ImplicitNetwork& net, const Matrix& same,
                                 const Matrix& cross, const IntervalVector& input_box,
                                 double alpha, const SolverOptions& opts,
                                 bool detect_divergence, const IterateObserver& observer);

}  // namespace detail

}  // namespace imcert

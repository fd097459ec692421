#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imcert/embedding.hpp"
#include "imcert/network.hpp"

namespace imcert {

struct LabeledInput {
  Vector u;
  std::size_t label = 0;
};

enum class CertMethod { lip, ibp, mm, mm_c };

std::string to_string(CertMethod m);
CertMethod parse_method(const std::string& name);
// Canonical order: lip, ibp, mm, mm_c.
const std::vector<CertMethod>& all_methods();

struct CertificationResult {
  CertMethod method = CertMethod::mm;
  double epsilon = 0.0;
  double delta = 0.0;
  bool certified = false;
  // Absent for the Lipschitz method.
  std::optional<SolveDiagnostics> diagnostics;
  // Set when the underlying fixed-point iteration failed; the input then
  // counts as not certified.
  bool nonconvergent = false;
  std::string flags;
};

// (q-1) x q matrix with (T y)_k = y_label - y_{k-th other class}.
class RelativeClassifierMatrix {
public:
  RelativeClassifierMatrix(std::size_t label, std::size_t q);

  std::size_t label() const { return label_; }
  std::size_t q() const { return m_.cols(); }
  const Matrix& matrix() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

private:
  std::size_t label_;
  Matrix m_;
};

RelativeClassifierMatrix build_T(std::size_t label, std::size_t q);

// y_label - max_{j != label} y_j; a tie gives 0.
double classification_margin(std::span<const double> y, std::size_t label);

// Lower bound on T y over the box: [T C]+ x_lo + [T C]- x_hi + T c.
Vector z_lower(const ImplicitNetwork& net, const RelativeClassifierMatrix& T,
               const EmbeddedFixedPoint& efp);

// lower_label - max_{j != label} upper_j
double box_margin(const IntervalVector& y_box, std::size_t label);

// ||B||_{inf -> eta} ||C||_{eta -> inf} / (1 - max(mu, 0)); reduces to
// ||B||_inf ||C||_inf / (1 - mu(A)+) for unit weights.
double lipschitz_bound(const ImplicitNetwork& net);

// Interval bound propagation fixed point using the sign split of A.
// Not guaranteed to converge; throws MaxIterExceeded (diverged() set on blow-up).
EmbeddedFixedPoint ibp_solve(const ImplicitNetwork& net, const IntervalVector& input_box,
                             const SolverOptions& opts = {});

CertificationResult delta_lip(const ImplicitNetwork& net, const LabeledInput& input,
                              double epsilon, const SolverOptions& opts = {});
CertificationResult delta_ibp(const ImplicitNetwork& net, const LabeledInput& input,
                              double epsilon, const SolverOptions& opts = {});
CertificationResult delta_mm(const ImplicitNetwork& net, const LabeledInput& input,
                             double epsilon, const SolverOptions& opts = {});
CertificationResult delta_mm_c(const ImplicitNetwork& net, const LabeledInput& input,
                               double epsilon, const SolverOptions& opts = {});

CertificationResult certify(const ImplicitNetwork& net, const LabeledInput& input,
                            CertMethod method, double epsilon, const SolverOptions& opts = {});

// Computes several methods at one epsilon, sharing the embedded solve between
// mm and mm_c. Results follow the order of `methods`.
std::vector<CertificationResult> certify_many(const ImplicitNetwork& net,
                                              const LabeledInput& input,
                                              std::span<const CertMethod> methods,
                                              double epsilon, const SolverOptions& opts = {});

struct RadiusOptions {
  double eps_max = 1.0;
  double tol_eps = 1e-4;
};

// Largest epsilon in [0, eps_max] (to within tol_eps, from below) at which the
// method still certifies; 0 when the input is not certified at epsilon = 0.
double certified_radius(const ImplicitNetwork& net, const LabeledInput& input, CertMethod method,
                        const RadiusOptions& ropts = {}, const SolverOptions& opts = {});

struct CurvePoint {
  CertMethod method;
  double epsilon;
  double fraction;
};

// Fraction of inputs certified for every (method, epsilon), ordered by method
// then epsilon. `workers` > 1 evaluates inputs concurrently.
std::vector<CurvePoint> certified_fraction_curve(const ImplicitNetwork& net,
                                                 std::span<const LabeledInput> dataset,
                                                 std::span<const CertMethod> methods,
                                                 std::span<const double> eps_grid,
                                                 const SolverOptions& opts = {},
                                                 unsigned workers = 1);

// Full per-row table backing both the certify command and the curve:
// rows[m][e][i] for method m, epsilon e, input i.
using CertTable = std::vector<std::vector<std::vector<CertificationResult>>>;
CertTable certify_table(const ImplicitNetwork& net, std::span<const LabeledInput> dataset,
                        std::span<const CertMethod> methods, std::span<const double> eps_grid,
                        const SolverOptions& opts = {}, unsigned workers = 1);

// Sampled minimum margin over the epsilon ball (u itself first, then box
// corners, then uniform samples). Any sound certificate lies below it.
double empirical_margin_oracle(const ImplicitNetwork& net, const LabeledInput& input,
                               double epsilon, std::size_t samples, std::uint64_t seed,
                               const SolverOptions& opts = {});

}  // namespace imcert

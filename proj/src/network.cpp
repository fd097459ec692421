#include "imcert/network.hpp"

#include <algorithm>
#include <cmath>

#include "imcert/errors.hpp"

namespace imcert {

Activation Activation::leaky_relu(double slope) {
  if (!std::isfinite(slope) || slope < 0.0 || slope > 1.0) {
    throw ValueError("leaky_relu slope must lie in [0, 1]");
  }
  Activation a(Kind::leaky_relu);
  a.slope_ = slope;
  return a;
}

Activation Activation::saturation(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw ValueError("saturation requires finite lo <= hi");
  }
  Activation a(Kind::saturation);
  a.lo_ = lo;
  a.hi_ = hi;
  return a;
}

double Activation::operator()(double x) const {
  switch (kind_) {
    case Kind::relu: return x > 0.0 ? x : 0.0;
    case Kind::identity: return x;
    case Kind::tanh: return std::tanh(x);
    case Kind::leaky_relu: return x > 0.0 ? x : slope_ * x;
    case Kind::saturation: return std::clamp(x, lo_, hi_);
  }
  return x;
}

Vector Activation::apply(std::span<const double> v) const {
  Vector out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [this](double x) { return (*this)(x); });
  return out;
}

std::string Activation::name() const {
  switch (kind_) {
    case Kind::relu: return "relu";
    case Kind::identity: return "identity";
    case Kind::tanh: return "tanh";
    case Kind::leaky_relu: return "leaky_relu";
    case Kind::saturation: return "saturation";
  }
  return "relu";
}

Activation::Kind Activation::parse_kind(const std::string& name) {
  if (name == "relu") return Kind::relu;
  if (name == "identity") return Kind::identity;
  if (name == "tanh") return Kind::tanh;
  if (name == "leaky_relu") return Kind::leaky_relu;
  if (name == "saturation") return Kind::saturation;
  throw ValueError("unknown activation '" + name + "'");
}

Vector apply_activation(const Activation& act, std::span<const double> v) { return act.apply(v); }

ImplicitNetwork::ImplicitNetwork(Matrix A, Matrix B, Matrix C, Vector b, Vector c,
                                 Activation activation, std::optional<WeightVector> eta)
    : A_(std::move(A)),
      B_(std::move(B)),
      C_(std::move(C)),
      b_(std::move(b)),
      c_(std::move(c)),
      activation_(activation),
      has_eta_(eta.has_value()),
      eta_(eta ? std::move(*eta) : WeightVector::ones(A_.rows())) {
  const std::size_t n = A_.rows();
  if (!A_.square()) throw NonSquareError("A must be square");
  if (B_.rows() != n) throw ShapeError("B must have n = " + std::to_string(n) + " rows");
  if (C_.cols() != n) throw ShapeError("C must have n = " + std::to_string(n) + " columns");
  if (b_.size() != n) throw ShapeError("b must have length n = " + std::to_string(n));
  if (c_.size() != C_.rows()) throw ShapeError("c must have length q = " + std::to_string(C_.rows()));
  if (eta_.size() != n) throw ShapeError("eta must have length n = " + std::to_string(n));
  require_finite(b_, "b");
  require_finite(c_, "c");
}

Vector ImplicitNetwork::map(std::span<const double> x, std::span<const double> u) const {
  if (x.size() != n() || u.size() != r()) throw DimensionMismatch("map: bad x or u dimension");
  Vector z = b_;
  matvec_add(A_, x, z);
  matvec_add(B_, u, z);
  for (double& v : z) v = activation_(v);
  return z;
}

Vector ImplicitNetwork::output(std::span<const double> x) const {
  Vector y = c_;
  matvec_add(C_, x, y);
  return y;
}

WellPosednessReport check_well_posedness(const ImplicitNetwork& net) {
  WellPosednessReport rep;
  rep.measure = weighted_linf_measure(net.A(), net.eta());
  double min_diag = 0.0;  // min_i min(A_ii, 0)
  for (std::size_t i = 0; i < net.n(); ++i) min_diag = std::min(min_diag, net.A()(i, i));
  rep.alpha_star = 1.0 / (1.0 - min_diag);
  rep.contraction_factor = 1.0 - (1.0 - std::max(rep.measure, 0.0)) / (1.0 - min_diag);
  rep.well_posed = rep.measure < 1.0;
  return rep;
}

Matrix build_wellposed_weights(const Matrix& T, const WeightVector& eta) {
  if (!T.square()) throw NonSquareError("build_wellposed_weights: T must be square");
  const std::size_t n = T.rows();
  if (eta.size() != n) throw DimensionMismatch("build_wellposed_weights: eta dimension");
  Matrix A(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double row_abs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row_abs += std::fabs(T(i, j));
      A(i, j) = eta[i] / eta[j] * T(i, j);
    }
    A(i, i) -= row_abs;
  }
  return A;
}

double resolve_alpha(const WellPosednessReport& report, std::optional<double> alpha) {
  if (!alpha) return report.alpha_star;
  const double a = *alpha;
  if (!std::isfinite(a) || a <= 0.0 || a > report.alpha_star * (1.0 + 1e-15)) {
    throw ValueError("alpha must lie in (0, alpha*] with alpha* = " +
                     std::to_string(report.alpha_star));
  }
  return a;
}

ForwardSolution forward_solve(const ImplicitNetwork& net, std::span<const double> u,
                              const SolverOptions& opts, std::span<const double> x0) {
  const auto rep = check_well_posedness(net);
  if (!rep.well_posed) throw NotWellPosed(rep.measure);
  if (u.size() != net.r()) throw DimensionMismatch("forward_solve: input has wrong dimension");
  if (!x0.empty() && x0.size() != net.n()) {
    throw DimensionMismatch("forward_solve: initial iterate has wrong dimension");
  }
  require_finite(u, "u");
  const double alpha = resolve_alpha(rep, opts.alpha);

  const std::size_t n = net.n();
  Vector x = x0.empty() ? Vector(n, 0.0) : Vector(x0.begin(), x0.end());
  Vector bu = net.b();
  matvec_add(net.B(), u, bu);
  Vector z(n);

  ForwardSolution sol;
  sol.diag.alpha = alpha;
  for (std::size_t k = 1; k <= opts.max_iter; ++k) {
    z = bu;
    matvec_add(net.A(), x, z);
    double step = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double next = (1.0 - alpha) * x[i] + alpha * net.activation()(z[i]);
      step = std::max(step, std::fabs(next - x[i]) / net.eta()[i]);
      x[i] = next;
    }
    if (opts.record_steps) sol.diag.step_norms.push_back(step);
    sol.diag.iterations = k;
    sol.diag.final_residual = step;
    if (step <= opts.tol) {
      sol.diag.converged = true;
      break;
    }
  }
  if (!sol.diag.converged) {
    throw MaxIterExceeded(sol.diag.iterations, sol.diag.final_residual, false);
  }
  sol.y = net.output(x);
  sol.x = std::move(x);
  return sol;
}

}  // namespace imcert

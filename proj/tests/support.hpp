#pragma once

// Test-only fixtures and oracles. Nothing here calls the solvers under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "imcert/linalg.hpp"
#include "imcert/network.hpp"

namespace imcert::testing {

inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("IMCERT_DATA_DIR")) return env;
  return IMCERT_TEST_DATA_DIR;
}

inline ImplicitNetwork example_5_1() {
  return ImplicitNetwork(Matrix{{-0.25, -0.25}, {0.75, -0.25}}, Matrix{{0.5, 1.0}, {1.0, 0.5}},
                         Matrix::identity(2), {0.0, 0.0}, {0.0, 0.0});
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                            double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * g(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(d);
  for (auto& x : v) x = u(rng);
  return v;
}

inline WeightVector random_eta(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.2, 5.0);
  std::vector<double> w(n);
  for (auto& x : w) x = u(rng);
  return WeightVector(std::move(w));
}

// Random well-posed net with measure in [-0.5, 0.9) and mixed-sign weights.
inline ImplicitNetwork random_wellposed_net(std::mt19937_64& rng, std::size_t n, std::size_t r,
                                            std::size_t q, bool weighted = false) {
  const WeightVector eta = weighted ? random_eta(rng, n) : WeightVector::ones(n);
  Matrix A = random_matrix(rng, n, n, 1.0);
  const double mu = weighted_linf_measure(A, eta);
  std::uniform_real_distribution<double> target(-0.5, 0.9);
  const double t = target(rng);
  // Shift the diagonal: mu(A + cI) = mu(A) + c.
  for (std::size_t i = 0; i < n; ++i) A(i, i) += t - mu;
  return ImplicitNetwork(std::move(A), random_matrix(rng, n, r), random_matrix(rng, q, n),
                         random_vector(rng, n, -0.5, 0.5), random_vector(rng, q, -0.5, 0.5),
                         Activation::relu(),
                         weighted ? std::optional<WeightVector>(eta) : std::nullopt);
}

// Step-ratio bound with an absolute allowance for cancellation in x^{k+1} - x^k,
// which loses relative precision once the steps approach ulp(x).
inline bool step_ratio_ok(double prev, double cur, double factor, double state_scale) {
  const double roundoff = 64.0 * 2.220446049250313e-16 * (1.0 + state_scale);
  return cur <= (factor + 1e-8) * prev + roundoff;
}

inline double state_scale(const Vector& a, const Vector& b, const WeightVector& eta) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s = std::max({s, std::fabs(a[i]) / eta[i], std::fabs(b[i]) / eta[i]});
  return s;
}

// Measure via the similarity transform: mu_inf([eta]^-1 A [eta]) with the plain
// row-sum formula.
inline double measure_by_similarity(const Matrix& A, const WeightVector& eta) {
  const std::size_t n = A.rows();
  double best = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = A(i, j) * eta[j] / eta[i];
      s += (i == j) ? v : std::fabs(v);
    }
    best = std::max(best, s);
  }
  return best;
}

// Gaussian elimination with partial pivoting; nullopt when singular.
inline std::optional<Vector> solve_linear(std::vector<std::vector<double>> M, Vector rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(M[i][k]) > std::fabs(M[p][k])) p = i;
    if (std::fabs(M[p][k]) < 1e-14) return std::nullopt;
    std::swap(M[p], M[k]);
    std::swap(rhs[p], rhs[k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = M[i][k] / M[k][k];
      for (std::size_t j = k; j < n; ++j) M[i][j] -= f * M[k][j];
      rhs[i] -= f * rhs[k];
    }
  }
  Vector x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = rhs[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= M[k][j] * x[j];
    x[k] = s / M[k][k];
  }
  return x;
}

// Fixed point of s = relu(W s + v) by enumerating activation patterns (small
// dimensions only). Returns the first consistent solution.
inline std::optional<Vector> relu_fixed_point_by_patterns(const std::vector<std::vector<double>>& W,
                                                          const Vector& v) {
  const std::size_t d = v.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    // Active units satisfy s_i = (W s + v)_i; inactive ones s_i = 0.
    std::vector<std::vector<double>> M(d, std::vector<double>(d, 0.0));
    Vector rhs(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      if ((mask >> i) & 1u) {
        for (std::size_t j = 0; j < d; ++j) M[i][j] = (i == j ? 1.0 : 0.0) - W[i][j];
        rhs[i] = v[i];
      } else {
        M[i][i] = 1.0;
      }
    }
    auto s = solve_linear(M, rhs);
    if (!s) continue;
    bool ok = true;
    for (std::size_t i = 0; i < d && ok; ++i) {
      double pre = v[i];
      for (std::size_t j = 0; j < d; ++j) pre += W[i][j] * (*s)[j];
      if ((mask >> i) & 1u) ok = pre >= -1e-12;
      else ok = pre <= 1e-12;
    }
    if (ok) return s;
  }
  return std::nullopt;
}

// Interval propagation through an affine layer in center/radius form:
// center' = W c + bias, radius' = |W| rad.
struct Box {
  Vector lo, hi;
};

inline Box affine_interval(const Matrix& W, const Vector& bias, const Box& in) {
  Box out{Vector(W.rows()), Vector(W.rows())};
  for (std::size_t i = 0; i < W.rows(); ++i) {
    double c = bias[i], rad = 0.0;
    for (std::size_t j = 0; j < W.cols(); ++j) {
      c += W(i, j) * 0.5 * (in.lo[j] + in.hi[j]);
      rad += std::fabs(W(i, j)) * 0.5 * (in.hi[j] - in.lo[j]);
    }
    out.lo[i] = c - rad;
    out.hi[i] = c + rad;
  }
  return out;
}

inline Box relu_interval(Box b) {
  for (auto& x : b.lo) x = std::max(x, 0.0);
  for (auto& x : b.hi) x = std::max(x, 0.0);
  return b;
}

}  // namespace imcert::testing

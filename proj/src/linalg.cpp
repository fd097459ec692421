#include "imcert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "imcert/errors.hpp"

namespace imcert {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch(std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " and " + std::to_string(b.rows()) +
                            "x" + std::to_string(b.cols()));
  }
}

void require_square(const Matrix& a, const char* op) {
  if (!a.square()) {
    throw NonSquareError(std::string(op) + ": matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
}

void require_dim(std::size_t got, std::size_t want, const char* op) {
  if (got != want) {
    throw DimensionMismatch(std::string(op) + ": expected dimension " + std::to_string(want) +
                            ", got " + std::to_string(got));
  }
}

template <typename F>
Matrix map_entries(const Matrix& m, F f) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = f(m(i, j), i, j);
  return out;
}

}  // namespace

void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw ValueError(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (!std::isfinite(fill)) throw ValueError("Matrix: non-finite fill value");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("Matrix: " + std::to_string(data_.size()) + " entries for shape " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  require_finite(data_, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require_finite(data_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  require_finite(d, "Matrix::diagonal");
  return m;
}

WeightVector::WeightVector(std::vector<double> entries) : w_(std::move(entries)) {
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (!std::isfinite(w_[i]) || !(w_[i] > 0.0)) {
      throw ValueError("eta: entry " + std::to_string(i) + " must be finite and > 0");
    }
  }
}

WeightVector WeightVector::ones(std::size_t n) { return WeightVector(std::vector<double>(n, 1.0)); }

Vector matvec(const Matrix& m, std::span<const double> x) {
  Vector y(m.rows(), 0.0);
  matvec_add(m, x, y);
  return y;
}

void matvec_add(const Matrix& m, std::span<const double> x, std::span<double> y) {
  require_dim(x.size(), m.cols(), "matvec");
  require_dim(y.size(), m.rows(), "matvec");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * x[j];
    y[i] += acc;
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_dim(b.rows(), a.cols(), "matmul");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  return map_entries(a, [&](double v, std::size_t i, std::size_t j) { return v + b(i, j); });
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  return map_entries(a, [&](double v, std::size_t i, std::size_t j) { return v - b(i, j); });
}

Matrix scale(const Matrix& a, double s) {
  return map_entries(a, [s](double v, std::size_t, std::size_t) { return v * s; });
}

Matrix abs(const Matrix& a) {
  return map_entries(a, [](double v, std::size_t, std::size_t) { return std::fabs(v); });
}

Matrix positive_part(const Matrix& m) {
  return map_entries(m, [](double v, std::size_t, std::size_t) { return v > 0.0 ? v : 0.0; });
}

Matrix negative_part(const Matrix& m) {
  return map_entries(m, [](double v, std::size_t, std::size_t) { return v < 0.0 ? v : 0.0; });
}

Matrix metzler_part(const Matrix& a) {
  require_square(a, "metzler_part");
  return map_entries(a, [](double v, std::size_t i, std::size_t j) {
    return (v >= 0.0 || i == j) ? v : 0.0;
  });
}

Matrix non_metzler_part(const Matrix& a) {
  require_square(a, "non_metzler_part");
  return map_entries(a, [](double v, std::size_t i, std::size_t j) {
    return (v >= 0.0 || i == j) ? 0.0 : v;
  });
}

double linf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double weighted_linf_norm(std::span<const double> v, const WeightVector& eta) {
  require_dim(v.size(), eta.size(), "weighted_linf_norm");
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::fabs(v[i]) / eta[i]);
  return m;
}

double weighted_linf_distance(std::span<const double> a, std::span<const double> b,
                              const WeightVector& eta) {
  require_dim(a.size(), eta.size(), "weighted_linf_distance");
  require_dim(b.size(), eta.size(), "weighted_linf_distance");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]) / eta[i]);
  return m;
}

double linf_operator_norm(const Matrix& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += std::fabs(v);
    best = std::max(best, s);
  }
  return best;
}

double weighted_linf_measure(const Matrix& a, const WeightVector& eta) {
  require_square(a, "weighted_linf_measure");
  require_dim(eta.size(), a.rows(), "weighted_linf_measure");
  const std::size_t n = a.rows();
  if (n == 0) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double s = a(i, i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) s += eta[j] / eta[i] * std::fabs(a(i, j));
    }
    best = std::max(best, s);
  }
  return best;
}

bool embedded_measure_identity_check(const Matrix& a, const WeightVector& eta, double tol) {
  require_square(a, "embedded_measure_identity_check");
  const std::size_t n = a.rows();
  const Matrix mzl = metzler_part(a);
  const Matrix nmz = non_metzler_part(a);
  Matrix big(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      big(i, j) = mzl(i, j);
      big(i + n, j + n) = mzl(i, j);
      big(i, j + n) = nmz(i, j);
      big(i + n, j) = nmz(i, j);
    }
  std::vector<double> w2(eta.entries());
  w2.insert(w2.end(), eta.entries().begin(), eta.entries().end());
  const double lhs = weighted_linf_measure(a, eta);
  const double rhs = weighted_linf_measure(big, WeightVector(std::move(w2)));
  return std::fabs(lhs - rhs) <= tol;
}

}  // namespace imcert

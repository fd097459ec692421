#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace imcert {

using Vector = std::vector<double>;

// Dense row-major matrix. Entries are always finite.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  const std::vector<double>& entries() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Strictly positive weights defining the norm max_i |x_i| / eta_i.
class WeightVector {
public:
  explicit WeightVector(std::vector<double> entries);
  static WeightVector ones(std::size_t n);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const std::vector<double>& entries() const { return w_; }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

private:
  std::vector<double> w_;
};

void require_finite(std::span<const double> v, const char* what);

// Basic arithmetic.
Vector matvec(const Matrix& m, std::span<const double> x);
// y += m * x
void matvec_add(const Matrix& m, std::span<const double> x, std::span<double> y);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix abs(const Matrix& a);

// [M]+ = max(M, 0) and [M]- = min(M, 0), entrywise.
Matrix positive_part(const Matrix& m);
Matrix negative_part(const Matrix& m);

// Keeps the diagonal and the nonnegative off-diagonal entries.
Matrix metzler_part(const Matrix& a);
// a - metzler_part(a): the negative off-diagonal entries.
Matrix non_metzler_part(const Matrix& a);

double linf_norm(std::span<const double> v);
double weighted_linf_norm(std::span<const double> v, const WeightVector& eta);
// max_i |a_i - b_i| / eta_i
double weighted_linf_distance(std::span<const double> a, std::span<const double> b,
                              const WeightVector& eta);

// Induced infinity norm (max absolute row sum).
double linf_operator_norm(const Matrix& m);

// mu_{inf,[eta]^-1}(A) = max_i A_ii + sum_{j != i} (eta_j / eta_i) |A_ij|
double weighted_linf_measure(const Matrix& a, const WeightVector& eta);

// Compares the measure of A with the measure of the doubled matrix
// [[M, N], [N, M]] (M Metzler part, N non-Metzler part) under the weight (eta, eta).
bool embedded_measure_identity_check(const Matrix& a, const WeightVector& eta, double tol);

}  // namespace imcert

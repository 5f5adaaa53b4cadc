#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace lbm {

class Rng;

/// Dense row-major matrix of 64-bit floats. Constructing from existing data
/// validates finiteness; the element-wise accessors do not.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols);  // zero-filled
  Matrix(size_t rows, size_t cols, std::vector<double> data);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(size_t r) const { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& values() const { return data_; }

  bool all_finite() const;

  bool operator==(const Matrix& other) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);         // a * b
Matrix matmul_at_b(const Matrix& a, const Matrix& b);    // a' * b
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);    // a * b'
Matrix transpose(const Matrix& a);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

std::vector<double> col_means(const Matrix& a);
Matrix select_rows(const Matrix& a, std::span<const size_t> rows);
Matrix gaussian_matrix(size_t rows, size_t cols, Rng& rng, double sd = 1.0);

double max_abs(const Matrix& a);
double frobenius_norm(const Matrix& a);

/// Frobenius norm of (a - b); the matrices must share a shape.
double frobenius_distance(const Matrix& a, const Matrix& b);

/// Root mean squared difference over all entries.
double rmse_all(const Matrix& a, const Matrix& b);

Matrix clip01(Matrix a);

}  // namespace lbm

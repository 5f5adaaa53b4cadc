#include "lbm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lbm/error.hpp"
#include "lbm/rng.hpp"

namespace lbm {

Matrix::Matrix(size_t rows, size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(size_t rows, size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw InvalidInput("Matrix: data length " + std::to_string(data_.size()) +
                       " != rows*cols " + std::to_string(rows_ * cols_));
  if (!all_finite()) throw NonFiniteValue("Matrix: non-finite entry on construction");
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const size_t r = rows.size();
  const size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw InvalidInput("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

bool Matrix::all_finite() const {
  for (const double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidInput("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  // i-k-j order keeps the inner loop streaming over rows of b and c.
  for (size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.data() + i * c.cols();
    for (size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.data() + k * b.cols();
      for (size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw InvalidInput("matmul_at_b: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (size_t k = 0; k < a.rows(); ++k) {
    const double* ak = a.data() + k * a.cols();
    const double* bk = b.data() + k * b.cols();
    for (size_t i = 0; i < a.cols(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = c.data() + i * c.cols();
      for (size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidInput("matmul_a_bt: column counts differ");
  Matrix c(a.rows(), b.rows());
  for (size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.data() + i * a.cols();
    for (size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.data() + j * b.cols();
      double acc = 0.0;
      for (size_t k = 0; k < a.cols(); ++k) acc += ai[k] * bj[k];
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (size_t i = 0; i < a.rows(); ++i)
    for (size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInput("matrix +: shapes differ");
  Matrix c(a.rows(), a.cols());
  for (size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInput("matrix -: shapes differ");
  Matrix c(a.rows(), a.cols());
  for (size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c(a.rows(), a.cols());
  for (size_t i = 0; i < a.size(); ++i) c.data()[i] = s * a.data()[i];
  return c;
}

std::vector<double> col_means(const Matrix& a) {
  std::vector<double> m(a.cols(), 0.0);
  for (size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.data() + i * a.cols();
    for (size_t j = 0; j < a.cols(); ++j) m[j] += ai[j];
  }
  if (a.rows() > 0)
    for (double& v : m) v /= static_cast<double>(a.rows());
  return m;
}

Matrix select_rows(const Matrix& a, std::span<const size_t> rows) {
  Matrix out(rows.size(), a.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows()) throw InvalidInput("select_rows: index out of range");
    std::copy_n(a.data() + rows[i] * a.cols(), a.cols(), out.data() + i * a.cols());
  }
  return out;
}

Matrix gaussian_matrix(size_t rows, size_t cols, Rng& rng, double sd) {
  Matrix m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = sd * rng.normal();
  return m;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i]));
  return m;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
  return std::sqrt(s);
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInput("frobenius_distance: shapes differ");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double rmse_all(const Matrix& a, const Matrix& b) {
  if (a.size() == 0) throw InvalidInput("rmse_all: empty matrices");
  const double f = frobenius_distance(a, b);
  return f / std::sqrt(static_cast<double>(a.size()));
}

Matrix clip01(Matrix a) {
  for (size_t i = 0; i < a.size(); ++i)
    a.data()[i] = std::clamp(a.data()[i], 0.0, 1.0);
  return a;
}

}  // namespace lbm

#pragma once

#include <vector>

#include "lbm/matrix.hpp"

namespace lbm {

/// Thin SVD: a = u * diag(s) * v', with s nonincreasing and nonnegative,
/// u (rows x p) and v (cols x p) orthonormal, p = min(rows, cols).
struct SvdResult {
  Matrix u;
  std::vector<double> s;
  Matrix v;
};

/// One-sided Jacobi SVD. The largest-magnitude entry of each column of v is
/// forced positive (u flipped to match) so outputs are deterministic.
SvdResult svd(const Matrix& a);

/// Eigendecomposition of a symmetric matrix: values descending, vectors in
/// the columns of `vectors`, orthonormal, sign-fixed like svd.
struct EigResult {
  std::vector<double> values;
  Matrix vectors;
};

/// Cyclic Jacobi. Throws InvalidInput if `a` is not symmetric to 1e-9
/// relative to its largest entry.
EigResult sym_eig(const Matrix& a);

/// Squared Euclidean distances between rows: out(i,j) = sum_k (x(i,k)-x(j,k))^2.
/// Symmetric with a zero diagonal.
Matrix pairwise_sq_dists(const Matrix& x);

/// Solves (a + ridge*I) x = b for symmetric positive definite a via Cholesky.
Matrix solve_spd(const Matrix& a, const Matrix& b, double ridge = 0.0);

}  // namespace lbm

#include "lbm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lbm/error.hpp"

namespace lbm {

namespace {

// Forces the largest-magnitude entry of column j positive; returns the sign
// applied so a paired factor can be flipped consistently.
double fix_column_sign(Matrix& m, size_t j) {
  size_t arg = 0;
  double best = -1.0;
  for (size_t i = 0; i < m.rows(); ++i) {
    const double a = std::fabs(m(i, j));
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (m(arg, j) < 0.0) {
    for (size_t i = 0; i < m.rows(); ++i) m(i, j) = -m(i, j);
    return -1.0;
  }
  return 1.0;
}

// Orthonormal completion for columns whose singular value collapsed to zero:
// Gram-Schmidt of canonical basis vectors against the existing columns.
void complete_basis(Matrix& u, const std::vector<bool>& defined) {
  const size_t m = u.rows();
  const size_t n = u.cols();
  size_t probe = 0;
  for (size_t j = 0; j < n; ++j) {
    if (defined[j]) continue;
    std::vector<double> cand(m, 0.0);
    bool ok = false;
    while (probe < m && !ok) {
      std::fill(cand.begin(), cand.end(), 0.0);
      cand[probe++] = 1.0;
      for (size_t jj = 0; jj < n; ++jj) {
        if (jj == j || (!defined[jj] && jj > j)) continue;
        double dot = 0.0;
        for (size_t i = 0; i < m; ++i) dot += cand[i] * u(i, jj);
        for (size_t i = 0; i < m; ++i) cand[i] -= dot * u(i, jj);
      }
      double norm = 0.0;
      for (const double v : cand) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (size_t i = 0; i < m; ++i) u(i, j) = cand[i] / norm;
        ok = true;
      }
    }
    if (!ok) throw NumericalFailure("svd: failed to complete orthonormal basis");
  }
}

// One-sided Jacobi on a tall matrix (rows >= cols). Orthogonalizes the
// columns of `a`, accumulating the rotations into `v`.
SvdResult svd_tall(const Matrix& input) {
  Matrix a = input;
  const size_t m = a.rows();
  const size_t n = a.cols();
  Matrix v(n, n);
  for (size_t j = 0; j < n; ++j) v(j, j) = 1.0;

  const double tol = 1e-15;
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (size_t p = 0; p + 1 < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (size_t i = 0; i < m; ++i) {
          const double xp = a(i, p);
          const double xq = a(i, q);
          app += xp * xp;
          aqq += xq * xq;
          apq += xp * xq;
        }
        if (app == 0.0 || aqq == 0.0) continue;
        if (std::fabs(apq) <= tol * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (size_t i = 0; i < m; ++i) {
          const double xp = a(i, p);
          const double xq = a(i, q);
          a(i, p) = c * xp - s * xq;
          a(i, q) = s * xp + c * xq;
        }
        for (size_t i = 0; i < n; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> s(n, 0.0);
  for (size_t j = 0; j < n; ++j) {
    double norm = 0.0;
    for (size_t i = 0; i < m; ++i) norm += a(i, j) * a(i, j);
    s[j] = std::sqrt(norm);
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&s](size_t i, size_t j) { return s[i] > s[j]; });

  const double scale = s.empty() ? 0.0 : s[order[0]];
  const double zero_cut = scale * 1e-13;
  Matrix u(m, n);
  Matrix vs(n, n);
  std::vector<double> ss(n);
  std::vector<bool> defined(n, false);
  for (size_t j = 0; j < n; ++j) {
    const size_t src = order[j];
    ss[j] = s[src];
    for (size_t i = 0; i < n; ++i) vs(i, j) = v(i, src);
    if (s[src] > zero_cut && s[src] > 0.0) {
      defined[j] = true;
      for (size_t i = 0; i < m; ++i) u(i, j) = a(i, src) / s[src];
    } else {
      ss[j] = s[src];  // keep the (tiny) value; only u needs completion
    }
  }
  complete_basis(u, defined);

  for (size_t j = 0; j < n; ++j) {
    const double sign = fix_column_sign(vs, j);
    if (sign < 0.0)
      for (size_t i = 0; i < m; ++i) u(i, j) = -u(i, j);
  }
  return {std::move(u), std::move(ss), std::move(vs)};
}

}  // namespace

SvdResult svd(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw InvalidInput("svd: empty matrix");
  if (!a.all_finite()) throw InvalidInput("svd: non-finite input");
  if (a.rows() >= a.cols()) return svd_tall(a);
  SvdResult r = svd_tall(transpose(a));
  return {std::move(r.v), std::move(r.s), std::move(r.u)};
}

EigResult sym_eig(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw InvalidInput("sym_eig: matrix must be square and nonempty");
  if (!a.all_finite()) throw InvalidInput("sym_eig: non-finite input");
  const size_t n = a.rows();
  const double scale = std::max(max_abs(a), 1.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (std::fabs(a(i, j) - a(j, i)) > 1e-9 * scale)
        throw InvalidInput("sym_eig: input not symmetric");

  Matrix w = a;
  // Symmetrize exactly so rotations preserve symmetry bit-for-bit.
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (w(i, j) + w(j, i));
      w(i, j) = m;
      w(j, i) = m;
    }
  Matrix v(n, n);
  for (size_t j = 0; j < n; ++j) v(j, j) = 1.0;

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) off += w(i, j) * w(i, j);
    if (std::sqrt(off) <= 1e-14 * scale) break;

    for (size_t p = 0; p + 1 < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        const double apq = w(p, q);
        if (std::fabs(apq) <= 1e-18 * scale) continue;
        const double app = w(p, p);
        const double aqq = w(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;

        for (size_t i = 0; i < n; ++i) {
          const double wip = w(i, p);
          const double wiq = w(i, q);
          w(i, p) = c * wip - s * wiq;
          w(i, q) = s * wip + c * wiq;
        }
        for (size_t i = 0; i < n; ++i) {
          const double wpi = w(p, i);
          const double wqi = w(q, i);
          w(p, i) = c * wpi - s * wqi;
          w(q, i) = s * wpi + c * wqi;
        }
        w(p, q) = 0.0;
        w(q, p) = 0.0;
        for (size_t i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<double> vals(n);
  for (size_t i = 0; i < n; ++i) vals[i] = w(i, i);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&vals](size_t i, size_t j) { return vals[i] > vals[j]; });

  EigResult out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (size_t j = 0; j < n; ++j) {
    out.values[j] = vals[order[j]];
    for (size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  for (size_t j = 0; j < n; ++j) fix_column_sign(out.vectors, j);
  return out;
}

Matrix pairwise_sq_dists(const Matrix& x) {
  if (!x.all_finite()) throw InvalidInput("pairwise_sq_dists: non-finite input");
  const size_t n = x.rows();
  Matrix d(n, n);
  for (size_t i = 0; i < n; ++i) {
    const double* xi = x.data() + i * x.cols();
    for (size_t j = i + 1; j < n; ++j) {
      const double* xj = x.data() + j * x.cols();
      double acc = 0.0;
      for (size_t k = 0; k < x.cols(); ++k) {
        const double diff = xi[k] - xj[k];
        acc += diff * diff;
      }
      d(i, j) = acc;
      d(j, i) = acc;
    }
  }
  return d;
}

Matrix solve_spd(const Matrix& a, const Matrix& b, double ridge) {
  if (a.rows() != a.cols()) throw InvalidInput("solve_spd: matrix must be square");
  if (a.rows() != b.rows()) throw InvalidInput("solve_spd: rhs row count differs");
  const size_t n = a.rows();
  Matrix l(n, n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double sum = a(i, j) + (i == j ? ridge : 0.0);
      for (size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
      if (i == j) {
        if (sum <= 0.0) throw NumericalFailure("solve_spd: matrix not positive definite");
        l(i, i) = std::sqrt(sum);
      } else {
        l(i, j) = sum / l(j, j);
      }
    }
  }
  // Forward then backward substitution, one rhs column at a time.
  Matrix x = b;
  for (size_t c = 0; c < b.cols(); ++c) {
    for (size_t i = 0; i < n; ++i) {
      double sum = x(i, c);
      for (size_t k = 0; k < i; ++k) sum -= l(i, k) * x(k, c);
      x(i, c) = sum / l(i, i);
    }
    for (size_t ii = n; ii > 0; --ii) {
      const size_t i = ii - 1;
      double sum = x(i, c);
      for (size_t k = i + 1; k < n; ++k) sum -= l(k, i) * x(k, c);
      x(i, c) = sum / l(i, i);
    }
  }
  return x;
}

}  // namespace lbm

#include "loft/linalg.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <string>

#include "loft/error.hpp"

namespace loft {

namespace {

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

// Index of the largest-magnitude entry; strict comparison keeps the lowest index on ties.
std::size_t dominant_index(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (std::abs(v[k]) > std::abs(v[best])) best = k;
  return best;
}

void rotate_rows(Matrix& m, std::size_t p, std::size_t q, double c, double s) {
  auto rp = m.row(p);
  auto rq = m.row(q);
  for (std::size_t k = 0; k < rp.size(); ++k) {
    const double a = rp[k];
    const double b = rq[k];
    rp[k] = c * a - s * b;
    rq[k] = s * a + c * b;
  }
}

struct JacobiSvd {
  Matrix columns;              // columns of A·V, stored as rows
  Matrix v_rows;               // columns of V, stored as rows
  std::vector<double> norms;   // singular values (unsorted)
  std::vector<std::size_t> order;  // descending order of norms
};

JacobiSvd one_sided_jacobi(const Matrix& a) {
  if (!a.all_finite()) throw NumericalError("svd: non-finite input");
  const std::size_t n = a.cols();
  JacobiSvd js{a.transpose(), Matrix::identity(n), {}, {}};
  const double tol = std::max<std::size_t>(a.rows(), 1) * DBL_EPSILON;
  const std::size_t max_sweeps = 100 * std::max(a.rows(), a.cols());
  // Pairs of columns at rounding-noise scale are treated as orthogonal.
  const double floor = DBL_EPSILON * DBL_EPSILON * frobenius_norm_sq(a);

  bool converged = n < 2;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(js.columns.row(p), js.columns.row(p));
        const double beta = dot(js.columns.row(q), js.columns.row(q));
        const double gamma = dot(js.columns.row(p), js.columns.row(q));
        if (std::abs(gamma) <= floor || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate_rows(js.columns, p, q, c, s);
        rotate_rows(js.v_rows, p, q, c, s);
        rotated = true;
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw NumericalError("svd: no convergence within " + std::to_string(max_sweeps) + " sweeps");
  }

  js.norms.resize(n);
  for (std::size_t j = 0; j < n; ++j) js.norms[j] = std::sqrt(dot(js.columns.row(j), js.columns.row(j)));
  js.order.resize(n);
  std::iota(js.order.begin(), js.order.end(), std::size_t{0});
  std::stable_sort(js.order.begin(), js.order.end(),
                   [&](std::size_t i, std::size_t j) { return js.norms[i] > js.norms[j]; });
  return js;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " times " +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix qr_orthonormal_rows(const Matrix& a) {
  if (a.rows() > a.cols()) throw ShapeError("qr_orthonormal_rows: more rows than columns");
  Matrix q = a;
  double largest = 0.0;
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.rows(); ++i) {
    auto v = q.row(i);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        auto qj = q.row(j);
        const double h = dot(qj, v);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] -= h * qj[k];
      }
    }
    const double norm = std::sqrt(dot(v, v));
    largest = std::max(largest, norm);
    smallest = std::min(smallest, norm);
    if (norm == 0.0) throw DegenerateInputError("qr_orthonormal_rows: zero row after projection");
    for (double& x : v) x /= norm;
  }
  if (q.rows() > 0 && smallest < 1e-12 * largest) {
    throw DegenerateInputError("qr_orthonormal_rows: input rows are numerically rank deficient");
  }
  return q;
}

SvdResult svd(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t k = std::min(m, n);
  JacobiSvd js = one_sided_jacobi(a);

  SvdResult out{Matrix(m, k), std::vector<double>(k), Matrix(k, n)};
  for (std::size_t idx = 0; idx < k; ++idx) {
    const std::size_t j = js.order[idx];
    const double sigma = js.norms[j];
    out.sigma[idx] = sigma;
    auto v = js.v_rows.row(j);
    const double sign = v[dominant_index(v)] < 0.0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < n; ++c) out.vt(idx, c) = sign * v[c];
    if (sigma > 0.0) {
      auto col = js.columns.row(j);
      for (std::size_t r = 0; r < m; ++r) out.u(r, idx) = sign * col[r] / sigma;
    }
  }

  // Exactly-zero singular values leave their left vectors undetermined; complete
  // u to an orthonormal set with standard basis candidates.
  Matrix ut = out.u.transpose();
  std::size_t candidate = 0;
  for (std::size_t idx = 0; idx < k; ++idx) {
    if (out.sigma[idx] > 0.0) continue;
    auto target = ut.row(idx);
    while (candidate < m) {
      std::fill(target.begin(), target.end(), 0.0);
      target[candidate++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < k; ++j) {
          if (j == idx || (out.sigma[j] == 0.0 && j > idx)) continue;
          auto uj = ut.row(j);
          const double h = dot(uj, target);
          for (std::size_t r = 0; r < m; ++r) target[r] -= h * uj[r];
        }
      }
      const double norm = std::sqrt(dot(target, target));
      if (norm > 0.5) {
        for (double& x : target) x /= norm;
        break;
      }
    }
  }
  out.u = ut.transpose();
  return out;
}

Matrix right_singular_basis(const Matrix& a) {
  const std::size_t n = a.cols();
  JacobiSvd js = one_sided_jacobi(a);
  Matrix vt(n, n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    auto v = js.v_rows.row(js.order[idx]);
    const double sign = v[dominant_index(v)] < 0.0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < n; ++c) vt(idx, c) = sign * v[c];
  }
  return vt;
}

std::vector<double> singular_values(const Matrix& a) { return svd(a).sigma; }

SymEigResult sym_eig(const Matrix& a) {
  if (!a.is_square()) throw ShapeError("sym_eig: matrix not square");
  if (!a.all_finite()) throw NumericalError("sym_eig: non-finite input");
  const std::size_t n = a.rows();
  const double norm = frobenius_norm(a);
  if (frobenius_norm(a - a.transpose()) > 1e-9 * norm) {
    throw ContractError("sym_eig: input is not symmetric");
  }

  Matrix m = a;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m(i, j) = m(j, i) = 0.5 * (a(i, j) + a(j, i));
  Matrix v = Matrix::identity(n);
  const double tol = std::max<std::size_t>(n, 1) * DBL_EPSILON;
  const std::size_t max_sweeps = 100 * std::max<std::size_t>(n, 1);

  bool converged = n < 2;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0 || std::abs(apq) <= tol * std::sqrt(std::abs(m(p, p) * m(q, q))) ||
            std::abs(apq) <= DBL_EPSILON * 1e-3 * norm) {
          continue;
        }
        const double tau = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, tau) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        // m <- Jᵀ m J with J the (p, q) plane rotation [[c, s], [-s, c]].
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = m(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
        rotated = true;
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw NumericalError("sym_eig: no convergence within " + std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return m(i, i) > m(j, j); });

  SymEigResult out{std::vector<double>(n), Matrix(n, n)};
  Matrix vrows = v.transpose();
  for (std::size_t idx = 0; idx < n; ++idx) {
    const std::size_t j = order[idx];
    out.values[idx] = m(j, j);
    auto col = vrows.row(j);
    const double sign = col[dominant_index(col)] < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, idx) = sign * col[r];
  }
  return out;
}

namespace {

struct LuFactors {
  Matrix lu;
  std::vector<std::size_t> perm;
  int sign = 1;
  bool singular = false;
};

LuFactors lu_decompose(const Matrix& a) {
  const std::size_t n = a.rows();
  LuFactors f{a, std::vector<std::size_t>(n), 1, false};
  std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
  const double threshold = 1e-12 * frobenius_norm(a);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(f.lu(r, col)) > std::abs(f.lu(pivot, col))) pivot = r;
    if (std::abs(f.lu(pivot, col)) <= threshold || f.lu(pivot, col) == 0.0) {
      f.singular = true;
      return f;
    }
    if (pivot != col) {
      auto rp = f.lu.row(pivot);
      auto rc = f.lu.row(col);
      std::swap_ranges(rp.begin(), rp.end(), rc.begin());
      std::swap(f.perm[pivot], f.perm[col]);
      f.sign = -f.sign;
    }
    const double d = f.lu(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = f.lu(r, col) / d;
      f.lu(r, col) = factor;
      if (factor == 0.0) continue;
      for (std::size_t c = col + 1; c < n; ++c) f.lu(r, c) -= factor * f.lu(col, c);
    }
  }
  return f;
}

}  // namespace

Matrix solve(const Matrix& a, const Matrix& b) {
  if (!a.is_square()) throw ShapeError("solve: coefficient matrix not square");
  if (b.rows() != a.rows()) throw ShapeError("solve: right-hand side has wrong row count");
  const std::size_t n = a.rows();
  LuFactors f = lu_decompose(a);
  if (f.singular) throw NumericalError("solve: singular system");

  Matrix x(n, b.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto src = b.row(f.perm[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t k = 0; k < i; ++k) {
      const double l = f.lu(i, k);
      if (l == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t j = 0; j < xi.size(); ++j) xi[j] -= l * xk[j];
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    auto xi = x.row(ii);
    for (std::size_t k = ii + 1; k < n; ++k) {
      const double u = f.lu(ii, k);
      if (u == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t j = 0; j < xi.size(); ++j) xi[j] -= u * xk[j];
    }
    const double d = f.lu(ii, ii);
    for (double& v : xi) v /= d;
  }
  if (!x.all_finite()) throw NumericalError("solve: non-finite solution");
  return x;
}

double determinant(const Matrix& a) {
  if (!a.is_square()) throw ShapeError("determinant: matrix not square");
  LuFactors f = lu_decompose(a);
  if (f.singular) return 0.0;
  double det = f.sign;
  for (std::size_t i = 0; i < a.rows(); ++i) det *= f.lu(i, i);
  return det;
}

double spectral_norm(const Matrix& a) {
  auto s = singular_values(a);
  return s.empty() ? 0.0 : s.front();
}

std::size_t numerical_rank(const Matrix& a, double rel_tol) {
  auto s = singular_values(a);
  if (s.empty() || s.front() == 0.0) return 0;
  const double cut = rel_tol * s.front();
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [&](double v) { return v > cut; }));
}

Matrix orthonormal_complement(const Matrix& p) {
  Matrix basis = right_singular_basis(p);
  return basis.rows_range(p.rows(), p.cols() - p.rows());
}

}  // namespace loft

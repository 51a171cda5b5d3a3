#include "loft/orthogonal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "loft/error.hpp"
#include "loft/linalg.hpp"
#include "loft/random.hpp"

namespace loft {

SkewParam::SkewParam(std::size_t dim) : dim_(dim), lower_(dim * (dim > 0 ? dim - 1 : 0) / 2, 0.0) {}

SkewParam SkewParam::from_lower(const Matrix& m) {
  if (!m.is_square()) throw ShapeError("SkewParam: matrix not square");
  SkewParam e(m.rows());
  std::size_t k = 0;
  for (std::size_t i = 1; i < m.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) e.lower_[k++] = m(i, j);
  return e;
}

SkewParam SkewParam::from_matrix(const Matrix& m) {
  if (!m.is_square()) throw ShapeError("SkewParam: matrix not square");
  if (frobenius_norm(m + m.transpose()) > 1e-12 * frobenius_norm(m)) {
    throw ContractError("SkewParam: matrix is not skew-symmetric");
  }
  return from_lower(m);
}

SkewParam SkewParam::random(std::size_t dim, Rng& rng, double scale) {
  SkewParam e(dim);
  for (double& v : e.lower_) v = scale * rng.gaussian();
  return e;
}

Matrix SkewParam::matrix() const {
  Matrix m(dim_, dim_);
  std::size_t k = 0;
  for (std::size_t i = 1; i < dim_; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      m(i, j) = lower_[k];
      m(j, i) = -lower_[k];
      ++k;
    }
  }
  return m;
}

bool SkewParam::is_zero() const noexcept {
  return std::all_of(lower_.begin(), lower_.end(), [](double v) { return v == 0.0; });
}

SkewParam& SkewParam::operator*=(double s) noexcept {
  for (double& v : lower_) v *= s;
  return *this;
}

SkewParam SkewParam::operator-() const {
  SkewParam out = *this;
  out *= -1.0;
  return out;
}

const char* to_string(TransformKind kind) noexcept {
  switch (kind) {
    case TransformKind::orthogonal: return "orthogonal";
    case TransformKind::free: return "free";
    case TransformKind::fixed: return "fixed";
  }
  return "unknown";
}

TransformKind transform_kind_from_string(std::string_view name) {
  if (name == "orthogonal") return TransformKind::orthogonal;
  if (name == "free") return TransformKind::free;
  if (name == "fixed") return TransformKind::fixed;
  throw ConfigError("unknown transform kind '" + std::string(name) + "'");
}

TransformSpec TransformSpec::orthogonal(SkewParam e) {
  return TransformSpec(TransformKind::orthogonal, std::move(e), Matrix{});
}

TransformSpec TransformSpec::free_identity(std::size_t dim) { return free(Matrix::identity(dim)); }

TransformSpec TransformSpec::free(Matrix t) {
  if (!t.is_square()) throw ShapeError("TransformSpec::free: matrix not square");
  return TransformSpec(TransformKind::free, SkewParam{}, std::move(t));
}

TransformSpec TransformSpec::fixed(Matrix t) {
  if (!t.is_square()) throw ShapeError("TransformSpec::fixed: matrix not square");
  return TransformSpec(TransformKind::fixed, SkewParam{}, std::move(t));
}

std::size_t TransformSpec::dim() const noexcept {
  return kind_ == TransformKind::orthogonal ? e_.dim() : t_.rows();
}

const SkewParam& TransformSpec::skew() const {
  if (kind_ != TransformKind::orthogonal) throw ContractError("TransformSpec: not an orthogonal transform");
  return e_;
}

SkewParam& TransformSpec::skew() {
  if (kind_ != TransformKind::orthogonal) throw ContractError("TransformSpec: not an orthogonal transform");
  return e_;
}

const Matrix& TransformSpec::dense() const {
  if (kind_ == TransformKind::orthogonal) throw ContractError("TransformSpec: orthogonal transform has no dense block");
  return t_;
}

Matrix& TransformSpec::dense() {
  if (kind_ != TransformKind::free) throw ContractError("TransformSpec: only free transforms are mutable");
  return t_;
}

Matrix cayley(const SkewParam& e) {
  const std::size_t r = e.dim();
  if (e.is_zero()) return Matrix::identity(r);
  const Matrix half = 0.5 * e.matrix();
  const Matrix eye = Matrix::identity(r);
  return solve(eye - half, eye + half);
}

double cayley_derivative_check(const SkewParam& e, double t_step) {
  if (!(t_step > 0.0 && t_step <= 0.1)) throw ContractError("cayley_derivative_check: t_step must lie in (0, 0.1]");
  SkewParam scaled = e;
  scaled *= t_step;
  Matrix fd = cayley(scaled) - Matrix::identity(e.dim());
  fd *= 1.0 / t_step;
  return frobenius_norm(fd - e.matrix());
}

Matrix cayley_adjoint(const SkewParam& e, const Matrix& grad_q) {
  const std::size_t r = e.dim();
  if (grad_q.rows() != r || grad_q.cols() != r) throw ShapeError("cayley_adjoint: grad_q must be r x r");
  const Matrix eye = Matrix::identity(r);
  const Matrix a = eye - 0.5 * e.matrix();
  const Matrix q = cayley(e);
  const Matrix a_inv_t = solve(a.transpose(), eye);
  const Matrix m = 0.5 * matmul(matmul((eye + q).transpose(), grad_q), a_inv_t);
  return 0.5 * (m - m.transpose());
}

Matrix materialize(const TransformSpec& t) {
  switch (t.kind()) {
    case TransformKind::orthogonal: return cayley(t.skew());
    case TransformKind::free:
    case TransformKind::fixed: return t.dense();
  }
  return {};
}

}  // namespace loft

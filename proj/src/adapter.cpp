#include "loft/adapter.hpp"

#include <string>

#include "loft/error.hpp"
#include "loft/linalg.hpp"

namespace loft {

const char* to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::principal: return "principal";
    case Provenance::gradsvd: return "gradsvd";
    case Provenance::skewgrad: return "skewgrad";
    case Provenance::random: return "random";
    case Provenance::coordinate: return "coordinate";
    case Provenance::butterfly: return "butterfly";
    case Provenance::explicit_basis: return "explicit";
  }
  return "unknown";
}

Provenance provenance_from_string(std::string_view name) {
  if (name == "principal") return Provenance::principal;
  if (name == "gradsvd") return Provenance::gradsvd;
  if (name == "skewgrad") return Provenance::skewgrad;
  if (name == "random") return Provenance::random;
  if (name == "coordinate") return Provenance::coordinate;
  if (name == "butterfly") return Provenance::butterfly;
  if (name == "explicit") return Provenance::explicit_basis;
  throw ConfigError("unknown support provenance '" + std::string(name) + "'");
}

SupportBasis::SupportBasis(Matrix p, Provenance provenance) : p_(std::move(p)), provenance_(provenance) {
  if (p_.rows() == 0) throw ConfigError("SupportBasis: r must be at least 1");
  if (p_.rows() > p_.cols()) throw ConfigError("SupportBasis: r exceeds d");
  const double err = row_orthonormality_error(p_);
  if (!(err <= kOrthonormalityTol)) {
    throw ContractError("SupportBasis: rows not orthonormal (‖PPᵀ − I‖_F = " + std::to_string(err) + ")");
  }
}

SupportBasis SupportBasis::unchecked(Matrix p, Provenance provenance) {
  return SupportBasis(std::move(p), provenance, true);
}

Matrix SupportBasis::projector() const { return matmul(p_.transpose(), p_); }

LoftFactor::LoftFactor(SupportBasis s, TransformSpec t) : support(std::move(s)), transform(std::move(t)) {
  if (support.r() != transform.dim()) {
    throw ShapeError("LoftFactor: support width " + std::to_string(support.r()) + " != transform dimension " +
                     std::to_string(transform.dim()));
  }
}

LoftAdapter::LoftAdapter(Matrix base_weight) : base_(std::move(base_weight)) {}

LoftAdapter::LoftAdapter(Matrix base_weight, std::vector<LoftFactor> factors) : base_(std::move(base_weight)) {
  for (auto& f : factors) add_factor(std::move(f));
}

void LoftAdapter::add_factor(LoftFactor factor) {
  if (factor.support.d() != d_in()) {
    throw ShapeError("LoftAdapter: factor support has d = " + std::to_string(factor.support.d()) +
                     ", weight has d_in = " + std::to_string(d_in()));
  }
  factors_.push_back(std::move(factor));
}

Matrix build_s(const LoftFactor& f) {
  const Matrix& p = f.support.p();
  const Matrix t_minus_i = materialize(f.transform) - Matrix::identity(f.support.r());
  return Matrix::identity(f.support.d()) + matmul(matmul(p.transpose(), t_minus_i), p);
}

Matrix right_multiply_s(const Matrix& w, const Matrix& p, const Matrix& t) {
  if (w.cols() != p.cols()) throw ShapeError("right_multiply_s: width mismatch");
  const Matrix t_minus_i = t - Matrix::identity(p.rows());
  return w + matmul(matmul(matmul(w, p.transpose()), t_minus_i), p);
}

Matrix apply_adapter(const LoftAdapter& a, const Matrix& x) {
  if (x.rows() != a.d_in()) {
    throw ShapeError("apply_adapter: input has " + std::to_string(x.rows()) + " rows, expected " +
                     std::to_string(a.d_in()));
  }
  Matrix z = x;
  const auto& fs = a.factors();
  for (auto it = fs.rbegin(); it != fs.rend(); ++it) {
    const Matrix& p = it->support.p();
    const Matrix t_minus_i = materialize(it->transform) - Matrix::identity(p.rows());
    z += matmul(p.transpose(), matmul(t_minus_i, matmul(p, z)));
  }
  return matmul(a.base_weight(), z);
}

Matrix merge(const LoftAdapter& a) {
  Matrix w = a.base_weight();
  for (const auto& f : a.factors()) w = right_multiply_s(w, f.support.p(), materialize(f.transform));
  return w;
}

Matrix delta(const LoftAdapter& a) { return merge(a) - a.base_weight(); }

Matrix row_gram(const Matrix& w) { return matmul(w, w.transpose()); }

std::vector<Matrix> transform_block_gradients(const LoftAdapter& a, const Matrix& grad_w) {
  if (grad_w.rows() != a.d_out() || grad_w.cols() != a.d_in()) {
    throw ShapeError("transform_gradients: gradient shape does not match the adapted weight");
  }
  const auto& fs = a.factors();
  const std::size_t n = fs.size();
  std::vector<Matrix> blocks(n);
  std::vector<Matrix> left(n);  // W₀·S₁···S_{ℓ−1}
  Matrix acc = a.base_weight();
  for (std::size_t l = 0; l < n; ++l) {
    blocks[l] = materialize(fs[l].transform);
    left[l] = acc;
    acc = right_multiply_s(acc, fs[l].support.p(), blocks[l]);
  }

  std::vector<Matrix> grads(n);
  Matrix h = grad_w;  // ∂L/∂W⁺ · (S_{ℓ+1}···S_L)ᵀ
  for (std::size_t l = n; l-- > 0;) {
    const Matrix& p = fs[l].support.p();
    const Matrix pt = p.transpose();
    grads[l] = matmul(matmul(left[l], pt).transpose(), matmul(h, pt));
    if (l > 0) h = right_multiply_s(h, p, blocks[l].transpose());
  }
  return grads;
}

std::vector<Matrix> transform_gradients(const LoftAdapter& a, const Matrix& grad_w) {
  std::vector<Matrix> grads = transform_block_gradients(a, grad_w);
  const auto& fs = a.factors();
  for (std::size_t l = 0; l < fs.size(); ++l) {
    switch (fs[l].transform.kind()) {
      case TransformKind::orthogonal: grads[l] = cayley_adjoint(fs[l].transform.skew(), grads[l]); break;
      case TransformKind::free: break;
      case TransformKind::fixed: grads[l] = Matrix{}; break;
    }
  }
  return grads;
}

}  // namespace loft

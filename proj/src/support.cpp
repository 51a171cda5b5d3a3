#include "loft/support.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "loft/error.hpp"
#include "loft/linalg.hpp"
#include "loft/random.hpp"

namespace loft {

namespace {

void require_same_shape(const Matrix& w0, const Matrix& g, const char* op) {
  if (w0.rows() != g.rows() || w0.cols() != g.cols()) {
    throw ShapeError(std::string(op) + ": W0 is " + std::to_string(w0.rows()) + "x" + std::to_string(w0.cols()) +
                     " but G is " + std::to_string(g.rows()) + "x" + std::to_string(g.cols()));
  }
}

void require_support_dim(const SkewSignal& s, const SupportBasis& p, const char* op) {
  if (p.d() != s.f.rows()) {
    throw ShapeError(std::string(op) + ": support has d = " + std::to_string(p.d()) + ", signal has d = " +
                     std::to_string(s.f.rows()));
  }
}

Matrix sandwich(const Matrix& p, const Matrix& f) { return matmul(matmul(p, f), p.transpose()); }

Matrix standard_rows(std::span<const std::size_t> indices, std::size_t d) {
  Matrix p(indices.size(), d);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= d) throw ConfigError("coordinate support: index " + std::to_string(indices[i]) + " >= d");
    p(i, indices[i]) = 1.0;
  }
  return p;
}

const Matrix& require_gradient(const Matrix* g, Provenance method) {
  if (g == nullptr) {
    throw ConfigError(std::string("support method '") + to_string(method) + "' requires a calibration gradient");
  }
  return *g;
}

}  // namespace

double SkewSignal::bound(std::size_t r) const {
  double s = 0.0;
  for (std::size_t k = 0; k < std::min(r / 2, mu.size()); ++k) s += mu[k] * mu[k];
  return 2.0 * s;
}

Matrix skew_part(const Matrix& a) {
  if (!a.is_square()) throw ShapeError("skew_part: matrix not square");
  const std::size_t n = a.rows();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (a(i, j) - a(j, i));
      s(i, j) = v;
      s(j, i) = -v;
    }
  }
  return s;
}

SkewSignal skew_signal(const Matrix& w0, const Matrix& g) {
  require_same_shape(w0, g, "skew_signal");
  SkewSignal out{skew_part(matmul(w0.transpose(), g)), {}};
  const auto sigma = singular_values(out.f);
  out.mu.resize(sigma.size() / 2);
  for (std::size_t k = 0; k < out.mu.size(); ++k) out.mu[k] = 0.5 * (sigma[2 * k] + sigma[2 * k + 1]);
  return out;
}

Matrix accumulate_gradients(std::span<const Matrix> grads) {
  if (grads.empty()) throw ConfigError("accumulate_gradients: empty gradient list");
  Matrix sum = grads.front();
  for (std::size_t i = 1; i < grads.size(); ++i) sum += grads[i];
  return sum;
}

std::vector<std::size_t> butterfly_block_indices(std::size_t d, const ButterflyBlock& spec) {
  if (!std::has_single_bit(d)) throw ConfigError("butterfly support requires d to be a power of two");
  const std::size_t b = spec.block_width;
  if (b < 2 || !std::has_single_bit(b) || b > d) {
    throw ConfigError("butterfly block width must be a power of two in [2, d]");
  }
  const std::size_t m = static_cast<std::size_t>(std::countr_zero(d));
  const std::size_t k = static_cast<std::size_t>(std::countr_zero(b));
  if (spec.stage >= m) throw ConfigError("butterfly stage must be < log2(d)");
  if (spec.block >= d / b) throw ConfigError("butterfly block index out of range");

  std::vector<bool> free_bit(m, false);
  for (std::size_t j = 0; j < k; ++j) free_bit[(spec.stage + j) % m] = true;

  std::size_t base = 0;
  std::size_t next = 0;
  for (std::size_t bit = 0; bit < m; ++bit) {
    if (free_bit[bit]) continue;
    if ((spec.block >> next) & 1U) base |= std::size_t{1} << bit;
    ++next;
  }
  std::vector<std::size_t> indices;
  indices.reserve(b);
  for (std::size_t combo = 0; combo < b; ++combo) {
    std::size_t idx = base;
    std::size_t c = 0;
    for (std::size_t bit = 0; bit < m; ++bit) {
      if (!free_bit[bit]) continue;
      if ((combo >> c) & 1U) idx |= std::size_t{1} << bit;
      ++c;
    }
    indices.push_back(idx);
  }
  std::sort(indices.begin(), indices.end());
  return indices;
}

SupportBasis make_support(const SupportRequest& req, const Matrix& w0, const Matrix* g) {
  const std::size_t d = w0.cols();
  if (g != nullptr) require_same_shape(w0, *g, "make_support");

  if (req.method == Provenance::butterfly) {
    if (!req.butterfly) throw ConfigError("butterfly support requires stage/block parameters");
    if (req.r != 0 && req.r != req.butterfly->block_width) {
      throw ConfigError("butterfly support: r must equal the block width");
    }
    return SupportBasis(standard_rows(butterfly_block_indices(d, *req.butterfly), d), Provenance::butterfly);
  }
  if (req.method == Provenance::explicit_basis) {
    if (!req.explicit_p) throw ConfigError("explicit support requires a basis matrix");
    if (req.explicit_p->cols() != d) throw ShapeError("explicit support: basis width does not match d_in");
    return SupportBasis(*req.explicit_p, Provenance::explicit_basis);
  }

  const std::size_t r = req.r;
  if (r < 1) throw ConfigError("support rank r must be at least 1");
  if (r > d) throw ConfigError("support rank r = " + std::to_string(r) + " exceeds d_in = " + std::to_string(d));

  switch (req.method) {
    case Provenance::principal:
      return SupportBasis(right_singular_basis(w0).rows_range(0, r), Provenance::principal);
    case Provenance::gradsvd:
      return SupportBasis(right_singular_basis(require_gradient(g, req.method)).rows_range(0, r), Provenance::gradsvd);
    case Provenance::skewgrad: {
      const SkewSignal s = skew_signal(w0, require_gradient(g, req.method));
      // Singular vectors of a skew matrix come in pairs spanning its invariant
      // planes; the leading 2·floor(r/2) rows cover the top floor(r/2) planes.
      const Matrix rows = right_singular_basis(s.f).rows_range(0, r);
      return SupportBasis(qr_orthonormal_rows(rows), Provenance::skewgrad);
    }
    case Provenance::random: {
      Rng rng(req.seed);
      return SupportBasis(random_orthonormal_rows(r, d, rng), Provenance::random);
    }
    case Provenance::coordinate: {
      std::vector<std::size_t> idx = req.indices;
      if (idx.empty()) {
        idx.resize(r);
        for (std::size_t i = 0; i < r; ++i) idx[i] = i;
      }
      if (idx.size() != r) throw ConfigError("coordinate support: expected r indices");
      auto sorted = idx;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigError("coordinate support: duplicate index");
      }
      return SupportBasis(standard_rows(idx, d), Provenance::coordinate);
    }
    default: break;
  }
  throw ConfigError("make_support: unsupported method");
}

Matrix projected_gradient(const Matrix& w0, const Matrix& g, const SupportBasis& p) {
  require_same_shape(w0, g, "projected_gradient");
  if (p.d() != w0.cols()) throw ShapeError("projected_gradient: support width does not match d_in");
  return sandwich(p.p(), skew_part(matmul(w0.transpose(), g)));
}

double directional_derivative(const Matrix& w0, const Matrix& g, const SupportBasis& p, const SkewParam& e) {
  if (e.dim() != p.r()) throw ShapeError("directional_derivative: E dimension does not match support width");
  return frobenius_inner(projected_gradient(w0, g, p), e.matrix());
}

double rho_score(std::span<const SkewSignal> signals, std::span<const SupportBasis> supports) {
  if (signals.empty()) throw ContractError("rho_score: at least one layer required");
  if (signals.size() != supports.size()) throw ShapeError("rho_score: one support per layer required");
  const std::size_t r = supports.front().r();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t l = 0; l < signals.size(); ++l) {
    if (supports[l].r() != r) throw ContractError("rho_score: supports must share a single rank");
    require_support_dim(signals[l], supports[l], "rho_score");
    num += frobenius_norm_sq(sandwich(supports[l].p(), signals[l].f));
    den += signals[l].bound(r);
  }
  if (den == 0.0) return 1.0;
  return num / den;
}

double rho_score(const SkewSignal& signal, const SupportBasis& support) {
  return rho_score(std::span<const SkewSignal>(&signal, 1), std::span<const SupportBasis>(&support, 1));
}

double rho_score(const Matrix& w0, const Matrix& g, const SupportBasis& support) {
  return rho_score(skew_signal(w0, g), support);
}

double off_support_signal(const SkewSignal& signal, const SupportBasis& support) {
  require_support_dim(signal, support, "off_support_signal");
  const Matrix pf = matmul(support.p(), signal.f);
  return frobenius_norm(pf - matmul(matmul(pf, support.p().transpose()), support.p()));
}

PsoftOptimality psoft_optimality_check(const Matrix& w0, const Matrix& g, std::size_t r) {
  require_same_shape(w0, g, "psoft_optimality_check");
  const std::size_t d = w0.cols();
  if (r < 1 || r >= d) throw ConfigError("psoft_optimality_check: need 1 <= r < d_in");

  const SkewSignal s = skew_signal(w0, g);
  const Matrix v = right_singular_basis(w0);
  const Matrix rotated = matmul(matmul(v, s.f), v.transpose());

  PsoftOptimality out;
  out.f_norm = frobenius_norm(s.f);
  out.f_rperp_norm = frobenius_norm(rotated.block(0, r, r, d - r));
  out.invariant = out.f_rperp_norm <= 1e-8 * out.f_norm;
  const SupportBasis principal(v.rows_range(0, r), Provenance::principal);
  out.rho_principal = rho_score(s, principal);
  out.bound = s.bound(r);
  out.attains_bound = std::abs(out.rho_principal - 1.0) <= 1e-8;
  return out;
}

double max_principal_angle(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) throw ShapeError("max_principal_angle: shape mismatch");
  // Sines of the principal angles are the singular values of P(I − QᵀQ).
  const Matrix residual = p - matmul(matmul(p, q.transpose()), q);
  return std::asin(std::min(1.0, spectral_norm(residual)));
}

}  // namespace loft

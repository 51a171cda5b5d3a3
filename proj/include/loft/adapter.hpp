#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "loft/matrix.hpp"
#include "loft/orthogonal.hpp"

namespace loft {

enum class Provenance { principal, gradsvd, skewgrad, random, coordinate, butterfly, explicit_basis };

const char* to_string(Provenance p) noexcept;
Provenance provenance_from_string(std::string_view name);

/// Row-orthonormal r x d support basis P_r. Construction validates
/// ‖P·Pᵀ − I‖_F ≤ 1e-10 and 1 ≤ r ≤ d.
class SupportBasis {
 public:
  static constexpr double kOrthonormalityTol = 1e-10;

  SupportBasis(Matrix p, Provenance provenance);

  /// Skips the orthonormality check. Only for negative-control tests that need
  /// a corrupted support to flow through the pipeline.
  static SupportBasis unchecked(Matrix p, Provenance provenance);

  std::size_t r() const noexcept { return p_.rows(); }
  std::size_t d() const noexcept { return p_.cols(); }
  const Matrix& p() const noexcept { return p_; }
  Provenance provenance() const noexcept { return provenance_; }

  /// Π_r = PᵀP, the orthogonal projector onto the support.
  Matrix projector() const;

 private:
  SupportBasis(Matrix p, Provenance provenance, bool) : p_(std::move(p)), provenance_(provenance) {}

  Matrix p_;
  Provenance provenance_;
};

struct LoftFactor {
  LoftFactor(SupportBasis support, TransformSpec transform);

  SupportBasis support;
  TransformSpec transform;
};

/// Frozen weight W₀ (d_out x d_in) plus an ordered list of factors. The merged
/// weight is W₀·S₁·S₂···S_L in stored order.
class LoftAdapter {
 public:
  explicit LoftAdapter(Matrix base_weight);
  LoftAdapter(Matrix base_weight, std::vector<LoftFactor> factors);

  void add_factor(LoftFactor factor);

  const Matrix& base_weight() const noexcept { return base_; }
  std::size_t d_in() const noexcept { return base_.cols(); }
  std::size_t d_out() const noexcept { return base_.rows(); }

  const std::vector<LoftFactor>& factors() const noexcept { return factors_; }
  LoftFactor& factor(std::size_t i) { return factors_.at(i); }

 private:
  Matrix base_;
  std::vector<LoftFactor> factors_;
};

/// S = I + Pᵀ(T − I)P, materialized as a d x d matrix.
Matrix build_s(const LoftFactor& f);

/// W₀·(∏ S_ℓ)·x for column samples x, using the implicit form
/// x ← x + Pᵀ((T − I)(P·x)) per factor. No d x d matrix is formed.
Matrix apply_adapter(const LoftAdapter& a, const Matrix& x);

/// W⁺ = W₀·∏ S_ℓ, accumulated as W ← W + (W·Pᵀ)(T − I)P.
Matrix merge(const LoftAdapter& a);

/// ΔW = W⁺ − W₀.
Matrix delta(const LoftAdapter& a);

/// W·Wᵀ.
Matrix row_gram(const Matrix& w);

/// Right-multiplies w by S(P, T) without forming S.
Matrix right_multiply_s(const Matrix& w, const Matrix& p, const Matrix& t);

/// Per-factor gradients of a loss with respect to each factor's trainable
/// parameter, given grad_w = ∂L/∂W⁺ at the current merged weight.
///
/// Orthogonal factors receive the skew gradient from cayley_adjoint, free
/// factors the dense r x r gradient ∂L/∂T, fixed factors an empty matrix.
std::vector<Matrix> transform_gradients(const LoftAdapter& a, const Matrix& grad_w);

/// ∂L/∂T_ℓ for every factor (before any pull-back through the Cayley map).
std::vector<Matrix> transform_block_gradients(const LoftAdapter& a, const Matrix& grad_w);

}  // namespace loft

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "loft/matrix.hpp"

namespace loft {

class Rng;

/// Skew-symmetric r x r parameter. Only the strictly lower triangle is stored,
/// so Eᵀ = −E holds by construction.
class SkewParam {
 public:
  SkewParam() = default;
  explicit SkewParam(std::size_t dim);

  static SkewParam zero(std::size_t dim) { return SkewParam(dim); }
  /// Reads the strictly lower triangle of m; the upper triangle is ignored.
  static SkewParam from_lower(const Matrix& m);
  /// Requires ‖m + mᵀ‖_F ≤ 1e-12·‖m‖_F.
  static SkewParam from_matrix(const Matrix& m);
  /// Independent N(0, scale²) lower-triangle coefficients.
  static SkewParam random(std::size_t dim, Rng& rng, double scale = 1.0);

  std::size_t dim() const noexcept { return dim_; }
  Matrix matrix() const;
  bool is_zero() const noexcept;

  /// Lower-triangle coefficients in row-major order: (1,0), (2,0), (2,1), ...
  std::span<double> coeffs() noexcept { return lower_; }
  std::span<const double> coeffs() const noexcept { return lower_; }

  SkewParam& operator*=(double s) noexcept;
  SkewParam operator-() const;

  friend bool operator==(const SkewParam&, const SkewParam&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> lower_;
};

enum class TransformKind { orthogonal, free, fixed };

const char* to_string(TransformKind kind) noexcept;
TransformKind transform_kind_from_string(std::string_view name);

/// In-subspace transform T_r: Cayley of a skew parameter, an unconstrained dense
/// matrix (identity-initialized), or an immutable constant block.
class TransformSpec {
 public:
  static TransformSpec orthogonal(SkewParam e);
  static TransformSpec orthogonal_identity(std::size_t dim) { return orthogonal(SkewParam::zero(dim)); }
  static TransformSpec free_identity(std::size_t dim);
  static TransformSpec free(Matrix t);
  static TransformSpec fixed(Matrix t);

  TransformKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept;
  bool trainable() const noexcept { return kind_ != TransformKind::fixed; }

  const SkewParam& skew() const;
  SkewParam& skew();
  const Matrix& dense() const;
  /// Mutable access for free transforms only; fixed blocks are immutable.
  Matrix& dense();

 private:
  TransformSpec(TransformKind kind, SkewParam e, Matrix t) : kind_(kind), e_(std::move(e)), t_(std::move(t)) {}

  TransformKind kind_ = TransformKind::orthogonal;
  SkewParam e_;
  Matrix t_;
};

/// Q(E) = (I − E/2)⁻¹(I + E/2). Q(0) = I exactly, dQ(tE)/dt at 0 equals E.
Matrix cayley(const SkewParam& e);

/// ‖(Q(tE) − I)/t − E‖_F for t in (0, 0.1]; decays as O(t).
double cayley_derivative_check(const SkewParam& e, double t_step);

/// Pulls a gradient with respect to Q back to E.
///
/// Returns the skew matrix G with dL = ⟨G, dE⟩_F for every skew perturbation dE.
/// Since I + Q = 2A⁻¹ with A = I − E/2, G = skew(½(I + Q)ᵀ·grad_q·A⁻ᵀ).
Matrix cayley_adjoint(const SkewParam& e, const Matrix& grad_q);

Matrix materialize(const TransformSpec& t);

}  // namespace loft

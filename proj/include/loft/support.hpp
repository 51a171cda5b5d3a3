#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "loft/adapter.hpp"
#include "loft/matrix.hpp"
#include "loft/orthogonal.hpp"

namespace loft {

/// F = skew(W₀ᵀG) together with its skew-eigenvalue pair magnitudes μ₁ ≥ μ₂ ≥ ...
struct SkewSignal {
  Matrix f;
  std::vector<double> mu;  // floor(d/2) entries

  /// 2·Σ_{k ≤ floor(r/2)} μ_k², the largest ‖P F Pᵀ‖_F² any width-r support can reach.
  double bound(std::size_t r) const;
};

struct ButterflyBlock {
  std::size_t stage = 0;        // which index bits the block mixes (cyclically from this bit)
  std::size_t block = 0;        // block number within the stage, 0 .. d/width − 1
  std::size_t block_width = 2;  // power of two
};

struct SupportRequest {
  Provenance method = Provenance::skewgrad;
  std::size_t r = 0;
  std::uint64_t seed = 0;                    // random
  std::vector<std::size_t> indices;          // coordinate; defaults to 0..r-1
  std::optional<ButterflyBlock> butterfly;   // butterfly; r is taken from block_width
  std::optional<Matrix> explicit_p;          // explicit
};

/// (A − Aᵀ)/2, exactly skew-symmetric.
Matrix skew_part(const Matrix& a);

SkewSignal skew_signal(const Matrix& w0, const Matrix& g);

/// Sums per-batch (or per-shard) gradients in list order.
Matrix accumulate_gradients(std::span<const Matrix> grads);

/// Coordinates belonging to one butterfly block, ascending. d and block_width
/// must be powers of two. The block varies the log2(width) bits starting at
/// bit `stage` (wrapping around), with the remaining bits fixed by `block`.
/// For width 2, stage ℓ pairs indices that differ in bit ℓ.
std::vector<std::size_t> butterfly_block_indices(std::size_t d, const ButterflyBlock& spec);

/// Builds P_r for the requested method.
///
/// principal: top-r right-singular vectors of W₀. gradsvd: top-r right-singular
/// vectors of G. skewgrad: the invariant subspace of F = skew(W₀ᵀG) for the
/// largest floor(r/2) pairs, plus the next singular direction when r is odd.
/// random: seeded Gaussian rows, orthonormalized. coordinate/butterfly:
/// standard basis rows. explicit: the caller's matrix, validated.
///
/// Throws ConfigError for r out of range, a missing gradient, or a butterfly
/// request on a non-power-of-two dimension.
SupportBasis make_support(const SupportRequest& req, const Matrix& w0, const Matrix* g = nullptr);

/// P·F·Pᵀ, the gradient with respect to E at E = 0.
Matrix projected_gradient(const Matrix& w0, const Matrix& g, const SupportBasis& p);

/// ⟨P·F·Pᵀ, E⟩_F, the initial slope of the loss along t ↦ Q(tE).
double directional_derivative(const Matrix& w0, const Matrix& g, const SupportBasis& p, const SkewParam& e);

/// Relative signal capture Σ‖P F Pᵀ‖² / Σ bound(r) over layers. All supports
/// must share one width. Defined as 1 when every F vanishes.
double rho_score(std::span<const SkewSignal> signals, std::span<const SupportBasis> supports);
double rho_score(const SkewSignal& signal, const SupportBasis& support);
double rho_score(const Matrix& w0, const Matrix& g, const SupportBasis& support);

/// ‖P·F·(I − PᵀP)‖_F: signal coupling the support to its complement.
double off_support_signal(const SkewSignal& signal, const SupportBasis& support);

struct PsoftOptimality {
  double f_norm = 0.0;
  double f_rperp_norm = 0.0;  // ‖F_{r⊥}‖_F in the right-singular basis of W₀
  bool invariant = false;     // f_rperp_norm ≤ 1e-8·f_norm
  double rho_principal = 1.0;
  double bound = 0.0;
  bool attains_bound = false;  // |ρ − 1| ≤ 1e-8
};

/// Tests whether the principal right-singular subspace of W₀ is a maximizing
/// invariant subspace of F.
PsoftOptimality psoft_optimality_check(const Matrix& w0, const Matrix& g, std::size_t r);

/// Largest principal angle (radians) between the row spaces of two equal-width
/// row-orthonormal bases, computed from sines for accuracy near zero.
double max_principal_angle(const Matrix& p, const Matrix& q);

}  // namespace loft

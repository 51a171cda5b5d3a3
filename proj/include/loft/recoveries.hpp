#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "loft/adapter.hpp"
#include "loft/matrix.hpp"

namespace loft {

enum class RecoveryMethod { full_oft, block_oft, goft, boft, hra, psoft };

const char* to_string(RecoveryMethod m) noexcept;
RecoveryMethod recovery_method_from_string(std::string_view name);

/// Parameters for instantiating LOFT as one of the prior orthogonal PEFT
/// methods. Rotation blocks that are not given explicitly are drawn as
/// Cayley(E) with E having N(0, transform_scale²) coefficients; a scale of 0
/// gives identity blocks.
struct RecoveryConfig {
  RecoveryMethod method = RecoveryMethod::full_oft;
  std::uint64_t seed = 0;
  double transform_scale = 0.5;

  std::size_t block_width = 2;           // block_oft, boft
  std::optional<std::size_t> stages;     // boft; defaults to log2(d_in)

  // goft: coordinate planes (i, j) and counterclockwise angles in radians.
  std::vector<std::pair<std::size_t, std::size_t>> givens_pairs;
  std::vector<double> givens_angles;

  // hra: explicit reflection vectors (normalized on use), or `reflections`
  // random unit vectors when none are given.
  std::vector<std::vector<double>> householder_vectors;
  std::size_t reflections = 2;

  std::size_t rank = 1;  // psoft
};

/// 2x2 counterclockwise rotation [[cos θ, −sin θ], [sin θ, cos θ]].
Matrix givens_block(double theta);

/// Builds the LOFT adapter realizing the configured method on w0.
/// Throws ConfigError on inconsistent parameters.
LoftAdapter instantiate(const RecoveryConfig& cfg, const Matrix& w0);

struct RecoveryReport {
  RecoveryMethod method = RecoveryMethod::full_oft;
  std::size_t d_out = 0;
  std::size_t d_in = 0;
  std::size_t factors = 0;
  double residual = 0.0;  // ‖merge − reference‖_F / ‖reference‖_F
  bool pass = false;
  // psoft: max over residual right-singular directions v of ‖W⁺v − W₀v‖.
  std::optional<double> fixed_point_residual;
  // hra: det of the merged right transform, expected (−1)^L.
  std::optional<double> transform_determinant;
  std::string scope_note;
};

inline constexpr double kRecoveryTolerance = 1e-9;

/// Compares merge(instantiate(cfg, w0)) against a reference built directly from
/// each method's own definition (explicit block-diagonal matrices, Givens and
/// Householder products, the SVD split for PSOFT).
RecoveryReport verify_equivalence(const RecoveryConfig& cfg, const Matrix& w0);

}  // namespace loft

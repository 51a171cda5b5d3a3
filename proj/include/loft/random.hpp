#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "loft/matrix.hpp"

namespace loft {

// Seeded generator shared by every randomized construction. Each consumer owns
// its own instance so concurrent callers never share a stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() noexcept { return engine_; }

  Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double scale = 1.0);
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Derives an independent seed for a sub-stream (cell, seed index, purpose tag).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Gaussian rows orthonormalized; r <= d.
Matrix random_orthonormal_rows(std::size_t r, std::size_t d, Rng& rng);

/// Haar-like random orthogonal matrix (QR of a Gaussian matrix).
Matrix random_orthogonal(std::size_t d, Rng& rng);

}  // namespace loft

#include "loft/random.hpp"

#include <numeric>

#include "loft/error.hpp"
#include "loft/linalg.hpp"

namespace loft {

Matrix Rng::gaussian_matrix(std::size_t rows, std::size_t cols, double scale) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * gaussian();
  return m;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  // Explicit Fisher-Yates: std::shuffle's draw pattern is implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(engine_() % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the mixed inputs
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix random_orthonormal_rows(std::size_t r, std::size_t d, Rng& rng) {
  if (r > d) throw ConfigError("random_orthonormal_rows: r > d");
  return qr_orthonormal_rows(rng.gaussian_matrix(r, d));
}

Matrix random_orthogonal(std::size_t d, Rng& rng) { return random_orthonormal_rows(d, d, rng); }

}  // namespace loft

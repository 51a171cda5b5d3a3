#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "loft/error.hpp"
#include "loft/linalg.hpp"
#include "loft/matrix.hpp"
#include "loft/matrix_io.hpp"
#include "loft/random.hpp"

using namespace loft;

namespace {

Matrix reconstruct(const SvdResult& s) {
  return matmul(matmul(s.u, Matrix::diagonal(s.sigma)), s.vt);
}

}  // namespace

TEST(Matrix, ShapeAndAccess) {
  Matrix a{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(a.rows(), 2u);
  EXPECT_EQ(a.cols(), 3u);
  EXPECT_EQ(a(1, 2), 6.0);
  const Matrix t = a.transpose();
  EXPECT_EQ(t(2, 1), 6.0);
  EXPECT_EQ(a.block(0, 1, 2, 2), (Matrix{{2, 3}, {5, 6}}));
  const std::size_t cols[] = {2, 0};
  EXPECT_EQ(a.select_cols(cols), (Matrix{{3, 1}, {6, 4}}));
}

TEST(Matrix, RejectsNonFiniteAndBadLength) {
  EXPECT_THROW(Matrix(2, 2, {1, 2, 3}), ShapeError);
  EXPECT_THROW(Matrix(1, 2, {1, NAN}), NumericalError);
  Matrix a(2, 2);
  EXPECT_THROW(a += Matrix(3, 3), ShapeError);
}

TEST(Matrix, NormsByHand) {
  Matrix a{{3, 0}, {0, -4}};
  EXPECT_DOUBLE_EQ(frobenius_norm(a), 5.0);
  EXPECT_DOUBLE_EQ(frobenius_norm_sq(a), 25.0);
  EXPECT_DOUBLE_EQ(trace(a), -1.0);
  EXPECT_DOUBLE_EQ(max_abs(a), 4.0);
  EXPECT_DOUBLE_EQ(frobenius_inner(a, Matrix::identity(2)), -1.0);
}

TEST(Linalg, MatmulByHand) {
  Matrix a{{1, 2}, {3, 4}};
  Matrix b{{5, 6}, {7, 8}};
  EXPECT_EQ(matmul(a, b), (Matrix{{19, 22}, {43, 50}}));
  EXPECT_THROW(matmul(a, Matrix(3, 1)), ShapeError);
}

TEST(Linalg, QrRowsOrthonormalAndSpanPreserving) {
  Rng rng(1);
  for (std::size_t r : {1u, 3u, 7u}) {
    const Matrix a = rng.gaussian_matrix(r, 9);
    const Matrix q = qr_orthonormal_rows(a);
    EXPECT_LT(row_orthonormality_error(q), 1e-13);
    // a = (a·qᵀ)·q exactly when rowspan(a) = rowspan(q).
    EXPECT_LT(frobenius_norm(a - matmul(matmul(a, q.transpose()), q)), 1e-12);
    // Row 0 is the normalized first input row.
    const double n0 = std::sqrt(frobenius_norm_sq(a.rows_range(0, 1)));
    EXPECT_LT(frobenius_norm(q.rows_range(0, 1) - a.rows_range(0, 1) * (1.0 / n0)), 1e-14);
  }
}

TEST(Linalg, QrRejectsDependentRows) {
  Matrix a{{1, 2, 3}, {2, 4, 6}};
  EXPECT_THROW(qr_orthonormal_rows(a), DegenerateInputError);
  EXPECT_THROW(qr_orthonormal_rows(Matrix(3, 2)), ShapeError);
}

TEST(Linalg, SvdReconstructsRandomShapes) {
  Rng rng(2);
  for (auto [m, n] : {std::pair{5u, 5u}, {3u, 8u}, {9u, 4u}, {1u, 6u}, {6u, 1u}}) {
    const Matrix a = rng.gaussian_matrix(m, n);
    const SvdResult s = svd(a);
    EXPECT_LT(frobenius_norm(reconstruct(s) - a), 1e-12 * frobenius_norm(a));
    EXPECT_LT(frobenius_norm(matmul(s.u.transpose(), s.u) - Matrix::identity(s.sigma.size())), 1e-12);
    EXPECT_LT(row_orthonormality_error(s.vt), 1e-12);
    for (std::size_t i = 1; i < s.sigma.size(); ++i) EXPECT_GE(s.sigma[i - 1], s.sigma[i]);
  }
}

TEST(Linalg, SvdMatchesEigenvaluesOfGram) {
  Rng rng(3);
  const Matrix a = rng.gaussian_matrix(6, 4);
  const auto s = singular_values(a);
  const auto e = sym_eig(matmul(a.transpose(), a));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(s[i] * s[i], e.values[i], 1e-11);
}

TEST(Linalg, SvdSignConvention) {
  Rng rng(4);
  const SvdResult s = svd(rng.gaussian_matrix(5, 5));
  for (std::size_t i = 0; i < 5; ++i) {
    auto v = s.vt.row(i);
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
      if (std::abs(v[k]) > std::abs(v[best])) best = k;
    EXPECT_GT(v[best], 0.0);
  }
}

TEST(Linalg, SvdOfZeroAndDiagonal) {
  const SvdResult z = svd(Matrix(3, 2));
  EXPECT_EQ(z.sigma, (std::vector<double>{0.0, 0.0}));
  EXPECT_LT(frobenius_norm(matmul(z.u.transpose(), z.u) - Matrix::identity(2)), 1e-14);
  const std::vector<double> d{1.0, 3.0, 2.0};
  EXPECT_EQ(singular_values(Matrix::diagonal(d)), (std::vector<double>{3.0, 2.0, 1.0}));
}

TEST(Linalg, SvdConvergesOnRankDeficientSkewInput) {
  // An exactly planar skew matrix plus rounding-level residue in the other
  // directions; this used to exhaust the sweep cap.
  Rng rng(5);
  const Matrix p = random_orthonormal_rows(2, 32, rng);
  Matrix k{{0, 1.3}, {-1.3, 0}};
  Matrix f = matmul(matmul(p.transpose(), k), p);
  f = 0.5 * (f - f.transpose());
  const Matrix basis = right_singular_basis(f);
  EXPECT_LT(frobenius_norm(matmul(basis, basis.transpose()) - Matrix::identity(32)), 1e-12);
  const Matrix top = basis.rows_range(0, 2);
  EXPECT_LT(frobenius_norm(p - matmul(matmul(p, top.transpose()), top)), 1e-10);
}

TEST(Linalg, RightSingularBasisIsCompleteForWideInput) {
  Rng rng(6);
  const Matrix a = rng.gaussian_matrix(2, 5);
  const Matrix v = right_singular_basis(a);
  EXPECT_EQ(v.rows(), 5u);
  EXPECT_LT(frobenius_norm(matmul(v, v.transpose()) - Matrix::identity(5)), 1e-12);
  EXPECT_LT(frobenius_norm(matmul(a, v.rows_range(2, 3).transpose())), 1e-12);
  EXPECT_LT(frobenius_norm(v.rows_range(0, 2) - svd(a).vt), 1e-12);
}

TEST(Linalg, SymEigDecomposes) {
  Rng rng(7);
  const Matrix b = rng.gaussian_matrix(6, 6);
  const Matrix a = b + b.transpose();
  const SymEigResult e = sym_eig(a);
  const Matrix recon = matmul(matmul(e.vectors, Matrix::diagonal(e.values)), e.vectors.transpose());
  EXPECT_LT(frobenius_norm(recon - a), 1e-11);
  EXPECT_NEAR(std::accumulate(e.values.begin(), e.values.end(), 0.0), trace(a), 1e-11);
  EXPECT_THROW(sym_eig(b - b.transpose() + Matrix::identity(6)), ContractError);
}

TEST(Linalg, SolveAndDeterminant) {
  Matrix a{{2, 1}, {1, 3}};
  EXPECT_NEAR(determinant(a), 5.0, 1e-14);
  EXPECT_NEAR(determinant(Matrix{{0, 1}, {1, 0}}), -1.0, 1e-15);
  Rng rng(8);
  const Matrix m = rng.gaussian_matrix(7, 7);
  const Matrix b = rng.gaussian_matrix(7, 3);
  EXPECT_LT(frobenius_norm(matmul(m, solve(m, b)) - b), 1e-10);
  // |det| equals the product of singular values.
  double prod = 1.0;
  for (double s : singular_values(m)) prod *= s;
  EXPECT_NEAR(std::abs(determinant(m)), prod, 1e-9 * prod);
  EXPECT_THROW(solve(Matrix{{1, 2}, {2, 4}}, Matrix{{1}, {1}}), NumericalError);
  EXPECT_DOUBLE_EQ(determinant(Matrix{{1, 2}, {2, 4}}), 0.0);
}

TEST(Linalg, RankAndComplement) {
  Rng rng(9);
  const Matrix a = matmul(rng.gaussian_matrix(6, 2), rng.gaussian_matrix(2, 5));
  EXPECT_EQ(numerical_rank(a), 2u);
  EXPECT_EQ(numerical_rank(Matrix(3, 3)), 0u);
  const Matrix p = random_orthonormal_rows(3, 7, rng);
  const Matrix c = orthonormal_complement(p);
  EXPECT_EQ(c.rows(), 4u);
  EXPECT_LT(row_orthonormality_error(c), 1e-12);
  EXPECT_LT(max_abs(matmul(p, c.transpose())), 1e-12);
}

TEST(Linalg, SpectralNormAgainstPowerIteration) {
  Rng rng(10);
  const Matrix a = rng.gaussian_matrix(5, 4);
  const Matrix ata = matmul(a.transpose(), a);
  Matrix x = rng.gaussian_matrix(4, 1);
  for (int it = 0; it < 2000; ++it) {
    x = matmul(ata, x);
    x *= 1.0 / frobenius_norm(x);
  }
  const double lambda = frobenius_norm(matmul(ata, x));
  EXPECT_NEAR(spectral_norm(a), std::sqrt(lambda), 1e-9);
}

TEST(MatrixIo, RoundTripIsExact) {
  Rng rng(11);
  const Matrix a = rng.gaussian_matrix(4, 3);
  EXPECT_EQ(parse_matrix_csv(format_matrix_csv(a)), a);
  EXPECT_EQ(format_double(-0.0), "0");
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(MatrixIo, ErrorsCarryLineNumbers) {
  try {
    parse_matrix_csv("1,2\n3\n", "w.csv");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("w.csv:2"), std::string::npos);
  }
  try {
    parse_matrix_csv("1,2\n3,abc\n", "w.csv");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("w.csv:2"), std::string::npos);
  }
  EXPECT_THROW(parse_matrix_csv("1,inf\n"), IoError);
  EXPECT_THROW(parse_matrix_csv(""), IoError);
  EXPECT_THROW(read_matrix_csv("/nonexistent/w.csv"), IoError);
}

TEST(Random, SeededStreamsAreReproducible) {
  Rng a(42), b(42);
  EXPECT_EQ(a.gaussian_matrix(3, 3), b.gaussian_matrix(3, 3));
  EXPECT_EQ(a.permutation(10), b.permutation(10));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2, 0), derive_seed(1, 2, 1));
  auto perm = Rng(3).permutation(20);
  std::sort(perm.begin(), perm.end());
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(perm[i], i);
}

TEST(Random, OrthogonalDraws) {
  Rng rng(12);
  EXPECT_LT(row_orthonormality_error(random_orthonormal_rows(4, 9, rng)), 1e-13);
  const Matrix q = random_orthogonal(6, rng);
  EXPECT_LT(frobenius_norm(matmul(q.transpose(), q) - Matrix::identity(6)), 1e-13);
}

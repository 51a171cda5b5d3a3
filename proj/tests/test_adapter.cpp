#include <gtest/gtest.h>

#include <filesystem>

#include "loft/adapter.hpp"
#include "loft/adapter_io.hpp"
#include "loft/error.hpp"
#include "loft/linalg.hpp"
#include "loft/random.hpp"

using namespace loft;

namespace {

SupportBasis rows_of_identity(std::initializer_list<std::size_t> idx, std::size_t d) {
  Matrix p(idx.size(), d);
  std::size_t i = 0;
  for (std::size_t k : idx) p(i++, k) = 1.0;
  return SupportBasis(p, Provenance::coordinate);
}

LoftAdapter random_adapter(Rng& rng, std::size_t d_out, std::size_t d_in, std::size_t layers) {
  LoftAdapter a(rng.gaussian_matrix(d_out, d_in));
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t r = 1 + (l * 3) % d_in;
    a.add_factor({SupportBasis(random_orthonormal_rows(r, d_in, rng), Provenance::random),
                  TransformSpec::orthogonal(SkewParam::random(r, rng))});
  }
  return a;
}

}  // namespace

TEST(SupportBasis, ValidatesOrthonormalityAndRank) {
  EXPECT_THROW(SupportBasis(Matrix{{1, 1}}, Provenance::explicit_basis), ContractError);
  EXPECT_THROW(SupportBasis(Matrix(0, 3), Provenance::explicit_basis), ConfigError);
  EXPECT_THROW(SupportBasis(Matrix{{1, 0}, {0, 1}, {0, 0}}, Provenance::explicit_basis), ConfigError);
  const SupportBasis p = rows_of_identity({0, 2}, 3);
  EXPECT_EQ(p.projector(), (Matrix{{1, 0, 0}, {0, 0, 0}, {0, 0, 1}}));
  EXPECT_NO_THROW(SupportBasis::unchecked(Matrix{{2, 0}}, Provenance::random));
}

TEST(LoftFactor, RankMustMatch) {
  EXPECT_THROW(LoftFactor(rows_of_identity({0}, 3), TransformSpec::orthogonal_identity(2)), ShapeError);
  LoftAdapter a(Matrix::identity(3));
  EXPECT_THROW(a.add_factor({rows_of_identity({0}, 4), TransformSpec::orthogonal_identity(1)}), ShapeError);
}

TEST(BuildS, IdentityHouseholderAndBlock) {
  EXPECT_EQ(build_s({rows_of_identity({0, 1}, 4), TransformSpec::free_identity(2)}), Matrix::identity(4));
  EXPECT_EQ(build_s({rows_of_identity({0}, 3), TransformSpec::fixed(Matrix{{-1}})}),
            (Matrix{{-1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  EXPECT_EQ(build_s({rows_of_identity({0, 1}, 3), TransformSpec::free(Matrix{{0, 1}, {-1, 0}})}),
            (Matrix{{0, 1, 0}, {-1, 0, 0}, {0, 0, 1}}));
}

TEST(BuildS, HouseholderMatchesReflectionFormula) {
  Rng rng(1);
  const Matrix u = random_orthonormal_rows(1, 5, rng);
  const Matrix s = build_s({SupportBasis(u, Provenance::explicit_basis), TransformSpec::fixed(Matrix{{-1}})});
  EXPECT_LT(frobenius_norm(s - (Matrix::identity(5) - 2.0 * matmul(u.transpose(), u))), 1e-15);
}

TEST(Merge, HandExample) {
  // W₀ = diag(3,2,1), support {e1,e2}, T = [[0,1],[-1,0]].
  LoftAdapter a(Matrix{{3, 0, 0}, {0, 2, 0}, {0, 0, 1}});
  a.add_factor({rows_of_identity({0, 1}, 3), TransformSpec::free(Matrix{{0, 1}, {-1, 0}})});
  EXPECT_EQ(merge(a), (Matrix{{0, 3, 0}, {-2, 0, 0}, {0, 0, 1}}));
}

TEST(Merge, EqualsExplicitProductOfS) {
  Rng rng(2);
  const LoftAdapter a = random_adapter(rng, 6, 9, 3);
  Matrix expected = a.base_weight();
  for (const auto& f : a.factors()) expected = matmul(expected, build_s(f));
  EXPECT_LT(frobenius_norm(merge(a) - expected), 1e-12);
  EXPECT_LT(frobenius_norm(delta(a) - (expected - a.base_weight())), 1e-12);
}

TEST(Merge, DisjointFactorsCommuteOverlappingDoNot) {
  Rng rng(3);
  const Matrix w0 = rng.gaussian_matrix(4, 6);
  const LoftFactor f1{rows_of_identity({0, 1}, 6), TransformSpec::orthogonal(SkewParam::random(2, rng))};
  const LoftFactor f2{rows_of_identity({3, 4, 5}, 6), TransformSpec::orthogonal(SkewParam::random(3, rng))};
  const LoftFactor f3{rows_of_identity({1, 2}, 6), TransformSpec::orthogonal(SkewParam::random(2, rng))};
  EXPECT_LT(frobenius_norm(merge(LoftAdapter(w0, {f1, f2})) - merge(LoftAdapter(w0, {f2, f1}))), 1e-12);
  EXPECT_GT(frobenius_norm(merge(LoftAdapter(w0, {f1, f3})) - merge(LoftAdapter(w0, {f3, f1}))), 1e-6);
}

TEST(ApplyAdapter, MatchesMergedWeight) {
  Rng rng(4);
  const LoftAdapter a = random_adapter(rng, 5, 8, 2);
  const Matrix x = rng.gaussian_matrix(8, 7);
  EXPECT_LT(frobenius_norm(apply_adapter(a, x) - matmul(merge(a), x)), 1e-11);
  LoftAdapter none(a.base_weight());
  EXPECT_EQ(apply_adapter(none, x), matmul(a.base_weight(), x));
  EXPECT_THROW(apply_adapter(a, Matrix(7, 2)), ShapeError);
}

TEST(ApplyAdapter, ComplementPassesThrough) {
  Rng rng(5);
  const Matrix w0 = rng.gaussian_matrix(4, 7);
  const SupportBasis p(random_orthonormal_rows(3, 7, rng), Provenance::random);
  LoftAdapter a(w0);
  a.add_factor({p, TransformSpec::orthogonal(SkewParam::random(3, rng))});
  const Matrix x = orthonormal_complement(p.p()).transpose();  // columns with P·x = 0
  EXPECT_LT(frobenius_norm(apply_adapter(a, x) - matmul(w0, x)), 1e-12);
}

TEST(Geometry, OrthogonalAdapterPreservesRowGram) {
  Rng rng(6);
  EXPECT_EQ(row_gram(Matrix{{1, 1}, {0, 1}}), (Matrix{{2, 1}, {1, 1}}));
  for (int trial = 0; trial < 20; ++trial) {
    const LoftAdapter a = random_adapter(rng, 5 + trial % 4, 10, 1 + trial % 3);
    const Matrix g0 = row_gram(a.base_weight());
    EXPECT_LE(frobenius_norm(row_gram(merge(a)) - g0), 1e-10 * frobenius_norm(g0));
    const auto s0 = singular_values(a.base_weight());
    const auto s1 = singular_values(merge(a));
    for (std::size_t k = 0; k < s0.size(); ++k) EXPECT_NEAR(s1[k], s0[k], 1e-8 * s0.front());
  }
}

TEST(Geometry, TwoSidedRotationChangesGramNegativeControl) {
  Rng rng(7);
  const Matrix w0 = rng.gaussian_matrix(5, 5);
  const Matrix q = random_orthogonal(5, rng);
  const Matrix two_sided = matmul(matmul(q, w0), random_orthogonal(5, rng));
  EXPECT_GT(frobenius_norm(row_gram(two_sided) - row_gram(w0)), 1e-3);
  // Singular values still agree: the Gram check is what detects the left rotation.
  const auto s0 = singular_values(w0);
  const auto s1 = singular_values(two_sided);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(s0[k], s1[k], 1e-10);
}

TEST(Delta, RankBoundedBySupportWidth) {
  Rng rng(8);
  const Matrix w0 = rng.gaussian_matrix(12, 12);
  LoftAdapter a(w0);
  a.add_factor({SupportBasis(random_orthonormal_rows(4, 12, rng), Provenance::random),
                TransformSpec::orthogonal(SkewParam::random(4, rng))});
  EXPECT_LE(numerical_rank(delta(a)), 4u);

  LoftAdapter identity(w0);
  identity.add_factor({SupportBasis(random_orthonormal_rows(4, 12, rng), Provenance::random),
                       TransformSpec::orthogonal_identity(4)});
  EXPECT_EQ(max_abs(delta(identity)), 0.0);

  const Matrix u = random_orthonormal_rows(1, 12, rng);
  LoftAdapter h(w0);
  h.add_factor({SupportBasis(u, Provenance::explicit_basis), TransformSpec::fixed(Matrix{{-1}})});
  const Matrix expected = -2.0 * matmul(matmul(w0, u.transpose()), u);
  EXPECT_LT(frobenius_norm(delta(h) - expected), 1e-12);
  EXPECT_EQ(numerical_rank(delta(h)), 1u);
}

TEST(Gradients, BlockGradientMatchesFiniteDifferences) {
  // L(W) = ⟨C, W⟩ is linear, so ∂L/∂T_ℓ can be checked against differences of
  // merge with each factor's dense block perturbed.
  Rng rng(9);
  const Matrix w0 = rng.gaussian_matrix(4, 6);
  LoftAdapter a(w0);
  for (std::size_t r : {2u, 3u}) {
    a.add_factor({SupportBasis(random_orthonormal_rows(r, 6, rng), Provenance::random),
                  TransformSpec::free(Matrix::identity(r) + rng.gaussian_matrix(r, r, 0.3))});
  }
  const Matrix c = rng.gaussian_matrix(4, 6);
  const auto grads = transform_block_gradients(a, c);
  const double h = 1e-6;
  for (std::size_t l = 0; l < 2; ++l) {
    const std::size_t r = a.factors()[l].support.r();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        LoftAdapter plus = a, minus = a;
        plus.factor(l).transform.dense()(i, j) += h;
        minus.factor(l).transform.dense()(i, j) -= h;
        const double fd = (frobenius_inner(c, merge(plus)) - frobenius_inner(c, merge(minus))) / (2 * h);
        EXPECT_NEAR(grads[l](i, j), fd, 1e-7);
      }
    }
  }
}

TEST(Gradients, FixedFactorsGetNoGradient) {
  LoftAdapter a(Matrix::identity(3));
  a.add_factor({rows_of_identity({0}, 3), TransformSpec::fixed(Matrix{{-1}})});
  EXPECT_TRUE(transform_gradients(a, Matrix::identity(3)).front().empty());
}

TEST(AdapterIo, RoundTripPreservesMergedWeight) {
  Rng rng(10);
  LoftAdapter a = random_adapter(rng, 3, 5, 2);
  a.add_factor({rows_of_identity({1}, 5), TransformSpec::fixed(Matrix{{-1}})});
  a.add_factor({rows_of_identity({2, 3}, 5), TransformSpec::free(rng.gaussian_matrix(2, 2))});
  const auto dir = std::filesystem::temp_directory_path() / "loft_adapter_io_test";
  std::filesystem::remove_all(dir);
  const auto files = save_adapter(dir, a);
  EXPECT_EQ(files.size(), 1u + 1u + 2u * 4u);
  const LoftAdapter b = load_adapter(dir / "adapter.json");
  EXPECT_EQ(b.factors().size(), 4u);
  EXPECT_EQ(merge(b), merge(a));
  EXPECT_EQ(b.factors()[2].transform.kind(), TransformKind::fixed);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_adapter(dir / "adapter.json"), IoError);
}

#pragma once

#include <cstddef>
#include <vector>

#include "loft/matrix.hpp"

namespace loft {

/// Thin singular value decomposition A = U·diag(sigma)·Vt with k = min(rows, cols).
///
/// Right-singular vectors follow a fixed sign convention: each row of vt is
/// flipped so that its largest-magnitude entry is positive (lowest index wins
/// ties), and the matching column of u is flipped with it.
struct SvdResult {
  Matrix u;                   // rows x k, orthonormal columns
  std::vector<double> sigma;  // k values, descending, nonnegative
  Matrix vt;                  // k x cols, orthonormal rows
};

struct SymEigResult {
  std::vector<double> values;  // descending
  Matrix vectors;              // eigenvectors as columns, same sign convention as SvdResult::vt
};

/// Plain triple loop in row-major order. Summation order is fixed, so results are
/// bit-reproducible for identical inputs.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Orthonormalizes the rows of a (rows <= cols) by Gram-Schmidt with one round
/// of reorthogonalization. The row span is preserved and row i of the result
/// lies in the span of rows 0..i of the input.
///
/// Throws DegenerateInputError if the smallest diagonal of the implied R factor
/// is below 1e-12 times the largest.
Matrix qr_orthonormal_rows(const Matrix& a);

/// One-sided Jacobi SVD. Throws NumericalError if 100*max(rows, cols) sweeps do
/// not reach convergence.
SvdResult svd(const Matrix& a);

/// Complete set of right-singular vectors as rows of a cols x cols orthogonal
/// matrix, ordered by descending singular value (null-space directions last).
/// The first min(rows, cols) rows coincide with svd(a).vt.
Matrix right_singular_basis(const Matrix& a);

std::vector<double> singular_values(const Matrix& a);

/// Cyclic Jacobi eigensolver for symmetric input. Throws ContractError when
/// ‖a − aᵀ‖_F > 1e-9·‖a‖_F and NumericalError on hitting the sweep cap.
SymEigResult sym_eig(const Matrix& a);

/// LU with partial pivoting. Throws NumericalError when a pivot falls below
/// 1e-12·‖a‖_F.
Matrix solve(const Matrix& a, const Matrix& b);

double determinant(const Matrix& a);

double spectral_norm(const Matrix& a);

/// Number of singular values above rel_tol·σ_max.
std::size_t numerical_rank(const Matrix& a, double rel_tol = 1e-8);

/// Rows spanning the orthogonal complement of rowspan(p), for row-orthonormal p.
Matrix orthonormal_complement(const Matrix& p);

}  // namespace loft

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace loft {

/// Dense real matrix, row-major, 64-bit entries.
///
/// Constructors taking caller data reject non-finite entries. Arithmetic on
/// valid matrices is not re-checked; kernels that can produce non-finite
/// values (solve, the iterative decompositions) check their own outputs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
  static Matrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  Matrix block(std::size_t row0, std::size_t col0, std::size_t nrows, std::size_t ncols) const;
  Matrix rows_range(std::size_t row0, std::size_t nrows) const { return block(row0, 0, nrows, cols_); }
  Matrix cols_range(std::size_t col0, std::size_t ncols) const { return block(0, col0, rows_, ncols); }
  Matrix select_cols(std::span<const std::size_t> cols) const;

  bool all_finite() const noexcept;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s) noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator-(Matrix a);
Matrix operator*(double s, Matrix a);
Matrix operator*(Matrix a, double s);

double frobenius_norm(const Matrix& a);
double frobenius_norm_sq(const Matrix& a);
double frobenius_inner(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double trace(const Matrix& a);

/// ‖A·Aᵀ − I‖_F; zero for a row-orthonormal matrix.
double row_orthonormality_error(const Matrix& a);

}  // namespace loft

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rankscale {

/// Dense row-major real matrix. Rows are samples, columns are features.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Singular values sorted descending, length min(rows, cols).
using Spectrum = std::vector<double>;

Matrix transpose(const Matrix& m);
Matrix multiply(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& m, double factor);
bool all_finite(const Matrix& m);

double frobenius_norm(const Matrix& m);

/// Singular values of `m` from the eigenvalues of the smaller Gram matrix
/// (MᵀM for tall inputs, MMᵀ for wide ones).
///
/// The Gram product is accumulated in long double. Its eigenvalues come from
/// Householder tridiagonalization followed by implicit QL with Wilkinson-style
/// shifts, also in long double; an off-diagonal element is deflated once it is
/// below machine epsilon relative to its neighbouring diagonal entries, which
/// is tighter than 1e-12·‖G‖_F. Negative eigenvalues from roundoff are clamped
/// to zero before the square root.
Spectrum singular_values(const Matrix& m);

/// Independent oracle: cyclic Jacobi on MᵀM (plain double arithmetic) until the
/// off-diagonal norm drops below 1e-14·‖MᵀM‖_F. Limited to cols ≤ 64.
Spectrum gram_eigenvalues_oracle(const Matrix& m);

/// Eigenvalues (ascending) of a symmetric matrix stored densely in `a`
/// (n×n row-major, lower triangle referenced). `a` is overwritten.
std::vector<long double> symmetric_eigenvalues(std::vector<long double> a, std::size_t n);

}  // namespace rankscale

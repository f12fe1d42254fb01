#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dgcrf {

// Dense row-major matrix. Sizes in this library are small (d² ≤ 64 rows for
// patch operators, a few hundred for test oracles).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Matrix transposed() const;
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
std::vector<double> operator*(const Matrix& a, std::span<const double> x);

// A * Aᵀ for a square factor.
Matrix gram(const Matrix& factor);
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
bool is_lower_triangular(const Matrix& a);
// Symmetric eigenvalues by cyclic Jacobi rotations, ascending.
std::vector<double> symmetric_eigenvalues(const Matrix& a);

// In-place lower Cholesky on an n×n row-major buffer; upper triangle zeroed.
// Returns false when a pivot is non-positive or non-finite.
bool cholesky_in_place(double* a, std::size_t n);
// Solves L x = b in place, L row-major lower.
void solve_lower_in_place(const double* l, double* x, std::size_t n);
// Solves Lᵀ x = b in place.
void solve_lower_transposed_in_place(const double* l, double* x, std::size_t n);

class Cholesky {
 public:
  static std::optional<Cholesky> factor(const Matrix& a);

  std::size_t dim() const { return n_; }
  const Matrix& lower() const { return l_; }

  std::vector<double> solve(std::span<const double> b) const;
  void solve_in_place(std::span<double> x) const;
  // L⁻¹ b
  void forward_in_place(std::span<double> x) const;
  double log_det() const;

 private:
  std::size_t n_ = 0;
  Matrix l_;
};

}  // namespace dgcrf

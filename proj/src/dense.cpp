#include "dgcrf/dense.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "dgcrf/kernels.hpp"

namespace dgcrf {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      kernels::axpy(a(i, k), b.row(k).data(), dst.data(), b.cols());
    }
  }
  return out;
}

std::vector<double> operator*(const Matrix& a, std::span<const double> x) {
  assert(a.cols() == x.size());
  std::vector<double> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = kernels::dot(a.row(i).data(), x.data(), x.size());
  return y;
}

Matrix gram(const Matrix& f) {
  const std::size_t n = f.rows();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = kernels::dot(f.row(i).data(), f.row(j).data(), f.cols());
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  assert(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(kernels::dot(a.data(), a.data(), a.size())); }

bool is_lower_triangular(const Matrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (a(i, j) != 0.0) return false;
  return true;
}

std::vector<double> symmetric_eigenvalues(const Matrix& input) {
  Matrix a = input;
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

bool cholesky_in_place(double* a, std::size_t n) { return kernels::cholesky(a, n); }

void solve_lower_in_place(const double* l, double* x, std::size_t n) { kernels::trsv_lower(l, x, n); }

void solve_lower_transposed_in_place(const double* l, double* x, std::size_t n) {
  kernels::trsv_lower_transposed(l, x, n);
}

std::optional<Cholesky> Cholesky::factor(const Matrix& a) {
  assert(a.rows() == a.cols());
  Cholesky c;
  c.n_ = a.rows();
  c.l_ = a;
  if (!cholesky_in_place(c.l_.data(), c.n_)) return std::nullopt;
  return c;
}

std::vector<double> Cholesky::solve(std::span<const double> b) const {
  std::vector<double> x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

void Cholesky::solve_in_place(std::span<double> x) const {
  assert(x.size() == n_);
  solve_lower_in_place(l_.data(), x.data(), n_);
  solve_lower_transposed_in_place(l_.data(), x.data(), n_);
}

void Cholesky::forward_in_place(std::span<double> x) const {
  solve_lower_in_place(l_.data(), x.data(), n_);
}

double Cholesky::log_det() const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += std::log(l_(i, i));
  return 2.0 * s;
}

}  // namespace dgcrf

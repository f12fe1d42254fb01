#pragma once

#include <cmath>
#include <cstddef>

// Small dense routines written once over a backend's dot/axpy, so each
// backend gets them without per-row dispatch.

namespace dgcrf::kernels::detail {

// Right-looking on the upper triangle (mirrored from the lower one) so the
// trailing update is contiguous row axpys, then transposed into place.
template <auto Axpy>
bool cholesky(double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) a[j * n + i] = a[i * n + j];
  for (std::size_t j = 0; j < n; ++j) {
    double* rj = a + j * n;
    const double pivot = rj[j];
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return false;
    const double u = std::sqrt(pivot);
    const double inv = 1.0 / u;
    rj[j] = u;
    for (std::size_t k = j + 1; k < n; ++k) rj[k] *= inv;
    for (std::size_t i = j + 1; i < n; ++i) Axpy(-rj[i], rj + i, a + i * n + i, n - i);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      a[i * n + j] = a[j * n + i];
      a[j * n + i] = 0.0;
    }
  return true;
}

template <auto Dot>
void trsv_lower(const double* l, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = l + i * n;
    x[i] = (x[i] - Dot(ri, x, i)) / ri[i];
  }
}

template <auto Axpy>
void trsv_lower_transposed(const double* l, double* x, std::size_t n) {
  for (std::size_t i = n; i-- > 0;) {
    const double* ri = l + i * n;
    x[i] /= ri[i];
    Axpy(-x[i], ri, x, i);
  }
}

template <auto Axpy>
void ger(double alpha, const double* x, const double* y, double* a, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) Axpy(alpha * x[i], y, a + i * n, n);
}

}  // namespace dgcrf::kernels::detail

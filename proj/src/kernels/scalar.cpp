#include "dgcrf/kernels.hpp"
#include "small_dense.hpp"

namespace dgcrf::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void gemv(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) y[i] = dot(a + i * n, x, n);
}

void ger(double alpha, const double* x, const double* y, double* a, std::size_t m, std::size_t n) {
  detail::ger<axpy>(alpha, x, y, a, m, n);
}

bool cholesky(double* a, std::size_t n) { return detail::cholesky<axpy>(a, n); }
void trsv_lower(const double* l, double* x, std::size_t n) { detail::trsv_lower<dot>(l, x, n); }
void trsv_lower_transposed(const double* l, double* x, std::size_t n) {
  detail::trsv_lower_transposed<axpy>(l, x, n);
}

void gemm(bool trans_a, std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = trans_a ? a[p * lda + i] : a[i * lda + p];
      const double* bp = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

}  // namespace dgcrf::kernels::scalar

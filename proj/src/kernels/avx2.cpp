#include <immintrin.h>

#include "dgcrf/kernels.hpp"
#include "small_dense.hpp"

namespace dgcrf::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// R×(4V) block of C kept in registers across the whole k loop.
template <int R, int V, bool Trans>
inline void gemm_tile(std::size_t i, std::size_t j, std::size_t k, const double* a, std::size_t lda,
                      const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  __m256d acc[R][V];
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < V; ++v) acc[r][v] = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p) {
    __m256d bv[V];
    for (int v = 0; v < V; ++v) bv[v] = _mm256_loadu_pd(b + p * ldb + j + 4 * v);
    for (int r = 0; r < R; ++r) {
      const double x = Trans ? a[p * lda + i + r] : a[(i + r) * lda + p];
      const __m256d av = _mm256_set1_pd(x);
      for (int v = 0; v < V; ++v) acc[r][v] = _mm256_fmadd_pd(av, bv[v], acc[r][v]);
    }
  }
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < V; ++v) {
      double* dst = c + (i + r) * ldc + j + 4 * v;
      _mm256_storeu_pd(dst, _mm256_add_pd(_mm256_loadu_pd(dst), acc[r][v]));
    }
}

template <int R, bool Trans>
inline void gemm_rows(std::size_t i, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
                      std::size_t ldb, double* c, std::size_t ldc) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) gemm_tile<R, 2, Trans>(i, j, k, a, lda, b, ldb, c, ldc);
  if (j + 4 <= n) {
    gemm_tile<R, 1, Trans>(i, j, k, a, lda, b, ldb, c, ldc);
    j += 4;
  }
  for (; j < n; ++j)
    for (int r = 0; r < R; ++r) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double x = Trans ? a[p * lda + i + r] : a[(i + r) * lda + p];
        acc += x * b[p * ldb + j];
      }
      c[(i + r) * ldc + j] += acc;
    }
}

template <bool Trans>
void gemm_impl(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
               std::size_t ldb, double* c, std::size_t ldc) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) gemm_rows<4, Trans>(i, n, k, a, lda, b, ldb, c, ldc);
  for (; i < m; ++i) gemm_rows<1, Trans>(i, n, k, a, lda, b, ldb, c, ldc);
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    __m256d y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  if (i + 4 <= n) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    i += 4;
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

// Four rows per pass so each load of x feeds four FMAs.
void gemv(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* r0 = a + i * n;
    const double* r1 = r0 + n;
    const double* r2 = r1 + n;
    const double* r3 = r2 + n;
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd(), a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const __m256d vx = _mm256_loadu_pd(x + j);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + j), vx, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + j), vx, a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + j), vx, a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + j), vx, a3);
    }
    double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
    for (; j < n; ++j) {
      s0 += r0[j] * x[j];
      s1 += r1[j] * x[j];
      s2 += r2[j] * x[j];
      s3 += r3[j] * x[j];
    }
    y[i] = s0, y[i + 1] = s1, y[i + 2] = s2, y[i + 3] = s3;
  }
  for (; i < m; ++i) y[i] = dot(a + i * n, x, n);
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
  if (trans_a) {
    gemm_impl<true>(m, n, k, a, lda, b, ldb, c, ldc);
  } else {
    gemm_impl<false>(m, n, k, a, lda, b, ldb, c, ldc);
  }
}

}  // namespace dgcrf::kernels::avx2

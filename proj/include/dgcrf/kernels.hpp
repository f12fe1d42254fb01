#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Inner-loop arithmetic used by every dense operation in the library.
//
// Two implementations exist: a portable scalar reference and an AVX2/FMA
// variant. The active table is chosen once at startup from CPUID and can be
// overridden with DGCRF_KERNELS=scalar|avx2 or set_backend(). Both variants
// agree to rounding; results are bit-reproducible for a fixed backend.

namespace dgcrf::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b);
bool backend_available(Backend b);
Backend active_backend();
// Throws std::invalid_argument if the backend is not available on this CPU.
void set_backend(Backend b);

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double sum(const double* x, std::size_t n);
// y = A x for row-major m×n A.
void gemv(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
// A += α x yᵀ for row-major m×n A.
void ger(double alpha, const double* x, const double* y, double* a, std::size_t m, std::size_t n);
// Lower Cholesky of a row-major n×n SPD matrix in place, upper triangle
// zeroed. False on a non-positive or non-finite pivot.
bool cholesky(double* a, std::size_t n);
// L x = b and Lᵀ x = b in place, L row-major lower triangular.
void trsv_lower(const double* l, double* x, std::size_t n);
void trsv_lower_transposed(const double* l, double* x, std::size_t n);
// C += op(A) B with C m×n, op(A) m×k, B k×n, all row-major with leading
// dimensions. op(A) = Aᵀ when trans_a, A then being k×m.
void gemm(bool trans_a, std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  axpy(alpha, x.data(), y.data(), x.size());
}

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double sum(const double* x, std::size_t n);
void gemv(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
void ger(double alpha, const double* x, const double* y, double* a, std::size_t m, std::size_t n);
bool cholesky(double* a, std::size_t n);
void trsv_lower(const double* l, double* x, std::size_t n);
void trsv_lower_transposed(const double* l, double* x, std::size_t n);
void gemm(bool trans_a, std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc);
}  // namespace scalar

#ifdef DGCRF_HAVE_AVX2
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double sum(const double* x, std::size_t n);
void gemv(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
void ger(double alpha, const double* x, const double* y, double* a, std::size_t m, std::size_t n);
bool cholesky(double* a, std::size_t n);
void trsv_lower(const double* l, double* x, std::size_t n);
void trsv_lower_transposed(const double* l, double* x, std::size_t n);
void gemm(bool trans_a, std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc);
}  // namespace avx2
#endif

}  // namespace dgcrf::kernels

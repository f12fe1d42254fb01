#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dgcrf/kernels.hpp"

namespace dgcrf::kernels {

namespace {

struct Table {
  Backend backend;
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*gemv)(const double*, const double*, double*, std::size_t, std::size_t);
  void (*ger)(double, const double*, const double*, double*, std::size_t, std::size_t);
  bool (*cholesky)(double*, std::size_t);
  void (*trsv_lower)(const double*, double*, std::size_t);
  void (*trsv_lower_transposed)(const double*, double*, std::size_t);
  void (*gemm)(bool, std::size_t, std::size_t, std::size_t, const double*, std::size_t, const double*, std::size_t,
               double*, std::size_t);
};

constexpr Table kScalar{Backend::Scalar, scalar::dot,  scalar::axpy,     scalar::scale,
                        scalar::sum,     scalar::gemv, scalar::ger,      scalar::cholesky,
                        scalar::trsv_lower, scalar::trsv_lower_transposed, scalar::gemm};
#ifdef DGCRF_HAVE_AVX2
constexpr Table kAvx2{Backend::Avx2, avx2::dot,  avx2::axpy,     avx2::scale,
                      avx2::sum,     avx2::gemv, avx2::ger,      avx2::cholesky,
                      avx2::trsv_lower, avx2::trsv_lower_transposed, avx2::gemm};
#endif

bool cpu_has_avx2() {
#if defined(DGCRF_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Table* table_for(Backend b) {
#ifdef DGCRF_HAVE_AVX2
  if (b == Backend::Avx2) return &kAvx2;
#endif
  (void)b;
  return &kScalar;
}

const Table* initial_table() {
  if (const char* env = std::getenv("DGCRF_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return &kScalar;
    if (want == "avx2" && cpu_has_avx2()) return table_for(Backend::Avx2);
  }
  return cpu_has_avx2() ? table_for(Backend::Avx2) : &kScalar;
}

std::atomic<const Table*>& active() {
  static std::atomic<const Table*> t{initial_table()};
  return t;
}

inline const Table& T() { return *active().load(std::memory_order_relaxed); }

}  // namespace

std::string_view backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool backend_available(Backend b) { return b == Backend::Scalar || cpu_has_avx2(); }

Backend active_backend() { return T().backend; }

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw std::invalid_argument("kernel backend not available: " + std::string(backend_name(b)));
  }
  active().store(table_for(b));
}

double dot(const double* a, const double* b, std::size_t n) { return T().dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { T().axpy(alpha, x, y, n); }
void scale(double alpha, double* x, std::size_t n) { T().scale(alpha, x, n); }
double sum(const double* x, std::size_t n) { return T().sum(x, n); }
void gemv(const double* a, const double* x, double* y, std::size_t m, std::size_t n) { T().gemv(a, x, y, m, n); }
void ger(double alpha, const double* x, const double* y, double* a, std::size_t m, std::size_t n) {
  T().ger(alpha, x, y, a, m, n);
}
bool cholesky(double* a, std::size_t n) { return T().cholesky(a, n); }
void trsv_lower(const double* l, double* x, std::size_t n) { T().trsv_lower(l, x, n); }
void trsv_lower_transposed(const double* l, double* x, std::size_t n) { T().trsv_lower_transposed(l, x, n); }
void gemm(bool trans_a, std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  T().gemm(trans_a, m, n, k, a, lda, b, ldb, c, ldc);
}

}  // namespace dgcrf::kernels

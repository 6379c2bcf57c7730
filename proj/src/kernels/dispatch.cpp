#include "beliefdm/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace beliefdm::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(BELIEFDM_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect() {
  if (const char* env = std::getenv("BELIEFDM_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Backend::scalar;
    if (want == "avx2" && cpu_has_avx2()) return Backend::avx2;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  return b == Backend::scalar || (b == Backend::avx2 && cpu_has_avx2());
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b))
    throw std::invalid_argument("kernel backend not available: " + std::string(backend_name(b)));
  current().store(b, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) {
#ifdef BELIEFDM_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::avx2) return avx2::dot(a, b);
#endif
  return scalar::dot(a, b);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
#ifdef BELIEFDM_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::avx2) return avx2::axpy(alpha, x, y);
#endif
  scalar::axpy(alpha, x, y);
}

void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, const AdamCoeffs& c) {
#ifdef BELIEFDM_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::avx2) return avx2::adam_update(param, grad, m, v, c);
#endif
  scalar::adam_update(param, grad, m, v, c);
}

}  // namespace beliefdm::kernels

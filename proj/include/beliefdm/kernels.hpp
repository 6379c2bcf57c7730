#pragma once

// Dense double-precision kernels used by the LSTM inner loops and the Adam
// update. Each kernel has a portable scalar reference and, on x86-64, an AVX2
// variant. The active backend is picked once at startup from CPUID and can be
// pinned with BELIEFDM_KERNELS=scalar|avx2 or set_backend().

#include <span>
#include <string_view>

namespace beliefdm::kernels {

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend b);

/// True when the backend was compiled in and the CPU supports it.
bool backend_available(Backend b);

Backend active_backend();

/// Throws std::invalid_argument if the backend is unavailable.
void set_backend(Backend b);

/// Per-step Adam constants. bias1 = 1 - beta1^t and bias2 = 1 - beta2^t for
/// the step t being applied.
struct AdamCoeffs {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double bias1;
  double bias2;
};

// Dispatched entry points. Spans must be the same length.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, const AdamCoeffs& c);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, const AdamCoeffs& c);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define BELIEFDM_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, const AdamCoeffs& c);
}  // namespace avx2
#endif

}  // namespace beliefdm::kernels

#include "ivsir/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "ivsir/errors.hpp"

#if defined(IVSIR_HAVE_AVX2_TU)
namespace ivsir::kern::avx2 {
double dot(const double* x, const double* y, std::size_t n);
double sumsq(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void rot(double* x, double* y, double c, double s, std::size_t n);
}  // namespace ivsir::kern::avx2
#endif

namespace ivsir::kern {

namespace {

bool cpu_has_avx2_fma() {
#if defined(IVSIR_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(_M_X64))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend pick_default() {
    if (const char* env = std::getenv("IVSIR_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2_fma()) return Backend::avx2;
        // Unknown or unsupported request in the environment: fall through to
        // auto-detection rather than failing startup.
    }
    return cpu_has_avx2_fma() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = pick_default();

}  // namespace

Backend active_backend() { return g_backend; }

bool backend_supported(Backend b) {
    return b == Backend::scalar || (b == Backend::avx2 && cpu_has_avx2_fma());
}

void set_backend(Backend b) {
    if (!backend_supported(b))
        throw ConfigError("UnsupportedBackend",
                          std::string(backend_name(b)) +
                              " kernels are not available on this machine");
    g_backend = b;
}

const char* backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

double dot(const double* x, const double* y, std::size_t n) {
#if defined(IVSIR_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2) return avx2::dot(x, y, n);
#endif
    return scalar::dot(x, y, n);
}

double sumsq(const double* x, std::size_t n) {
#if defined(IVSIR_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2) return avx2::sumsq(x, n);
#endif
    return scalar::sumsq(x, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
#if defined(IVSIR_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2) return avx2::axpy(a, x, y, n);
#endif
    scalar::axpy(a, x, y, n);
}

void scal(double a, double* x, std::size_t n) {
#if defined(IVSIR_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2) return avx2::scal(a, x, n);
#endif
    scalar::scal(a, x, n);
}

void rot(double* x, double* y, double c, double s, std::size_t n) {
#if defined(IVSIR_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2) return avx2::rot(x, y, c, s, n);
#endif
    scalar::rot(x, y, c, s, n);
}

}  // namespace ivsir::kern

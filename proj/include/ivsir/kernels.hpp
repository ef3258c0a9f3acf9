#pragma once

#include <cstddef>

// Dense inner-loop kernels with a scalar reference implementation and an
// AVX2/FMA variant selected at runtime.  The scalar versions define the
// reference semantics; the vector versions reassociate sums and contract
// multiply-adds, so cross-backend results agree to rounding error only
// (bounded by the kernel equivalence tests, not bitwise).
namespace ivsir::kern {

enum class Backend { scalar, avx2 };

// Active backend.  Defaults to the best variant the CPU supports; the
// IVSIR_SIMD environment variable ("scalar" or "avx2") overrides the default,
// and set_backend() forces a choice programmatically (used by the
// equivalence tests).
Backend active_backend();
bool backend_supported(Backend b);
void set_backend(Backend b);
const char* backend_name(Backend b);

double dot(const double* x, const double* y, std::size_t n);
double sumsq(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);  // y += a*x
void scal(double a, double* x, std::size_t n);                   // x *= a
// Plane rotation, BLAS drot convention: x <- c*x + s*y, y <- c*y - s*x.
void rot(double* x, double* y, double c, double s, std::size_t n);

// Reference implementations, always available (equivalence-test oracle).
namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
double sumsq(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void rot(double* x, double* y, double c, double s, std::size_t n);
}  // namespace scalar

}  // namespace ivsir::kern

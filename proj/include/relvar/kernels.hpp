#pragma once

#include <cstddef>

// Data-parallel inner loops used by the trainer and the dependence measures.
// Plain scalar reference implementations are the semantic ground truth; the
// AVX2 (x86-64) and NEON (aarch64) variants are selected once at runtime and
// must agree with the scalar path to tight tolerance (see test_kernels.cpp).
//
// The active backend can be forced with RELVAR_KERNELS=scalar|avx2|neon.

namespace relvar::kernels {

enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend backend) noexcept;

// Backend chosen for this process (env override, else best supported).
Backend active_backend();

// ---- dispatched entry points ----------------------------------------------

// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);

// sum_i x[i]
double sum(const double* x, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double* y, double alpha, const double* x, std::size_t n);

// Centered second moments about given means:
//   sxx = sum (x-mx)^2, syy = sum (y-my)^2, sxy = sum (x-mx)(y-my)
void centered_moments(const double* x, const double* y, std::size_t n, double mean_x,
                      double mean_y, double* sxx, double* syy, double* sxy);

// Rank-1 symmetric update on the upper triangle of row-major a (p x p):
//   a[i][j] += alpha * g[i] * g[j]   for j >= i
void syr_upper(double* a, std::size_t p, double alpha, const double* g);

// ---- per-backend implementations -------------------------------------------

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double* y, double alpha, const double* x, std::size_t n);
void centered_moments(const double* x, const double* y, std::size_t n, double mean_x,
                      double mean_y, double* sxx, double* syy, double* sxy);
void syr_upper(double* a, std::size_t p, double alpha, const double* g);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
bool supported() noexcept;  // CPUID check; the TU is compiled with -mavx2 -mfma
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double* y, double alpha, const double* x, std::size_t n);
void centered_moments(const double* x, const double* y, std::size_t n, double mean_x,
                      double mean_y, double* sxx, double* syy, double* sxy);
void syr_upper(double* a, std::size_t p, double alpha, const double* g);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double* y, double alpha, const double* x, std::size_t n);
void centered_moments(const double* x, const double* y, std::size_t n, double mean_x,
                      double mean_y, double* sxx, double* syy, double* sxy);
void syr_upper(double* a, std::size_t p, double alpha, const double* g);
}  // namespace neon
#endif

}  // namespace relvar::kernels

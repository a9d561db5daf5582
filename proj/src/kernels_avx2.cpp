// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; nothing here runs unless avx2::supported() returned true.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "relvar/kernels.hpp"

namespace relvar::kernels::avx2 {

bool supported() noexcept {
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
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
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void centered_moments(const double* x, const double* y, std::size_t n, double mean_x,
                      double mean_y, double* sxx, double* syy, double* sxy) {
    const __m256d vmx = _mm256_set1_pd(mean_x);
    const __m256d vmy = _mm256_set1_pd(mean_y);
    __m256d vxx = _mm256_setzero_pd();
    __m256d vyy = _mm256_setzero_pd();
    __m256d vxy = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d cx = _mm256_sub_pd(_mm256_loadu_pd(x + i), vmx);
        const __m256d cy = _mm256_sub_pd(_mm256_loadu_pd(y + i), vmy);
        vxx = _mm256_fmadd_pd(cx, cx, vxx);
        vyy = _mm256_fmadd_pd(cy, cy, vyy);
        vxy = _mm256_fmadd_pd(cx, cy, vxy);
    }
    double axx = hsum(vxx), ayy = hsum(vyy), axy = hsum(vxy);
    for (; i < n; ++i) {
        const double cx = x[i] - mean_x;
        const double cy = y[i] - mean_y;
        axx += cx * cx;
        ayy += cy * cy;
        axy += cx * cy;
    }
    *sxx = axx;
    *syy = ayy;
    *sxy = axy;
}

void syr_upper(double* a, std::size_t p, double alpha, const double* g) {
    for (std::size_t i = 0; i < p; ++i) {
        const double c = alpha * g[i];
        const __m256d vc = _mm256_set1_pd(c);
        double* row = a + i * p;
        std::size_t j = i;
        for (; j + 4 <= p; j += 4) {
            _mm256_storeu_pd(row + j,
                             _mm256_fmadd_pd(vc, _mm256_loadu_pd(g + j), _mm256_loadu_pd(row + j)));
        }
        for (; j < p; ++j) row[j] += c * g[j];
    }
}

}  // namespace relvar::kernels::avx2

#endif  // x86-64

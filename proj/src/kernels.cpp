#include "relvar/kernels.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace relvar::kernels {

// ============================================================================
// Scalar reference kernels
// ============================================================================

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void centered_moments(const double* x, const double* y, std::size_t n, double mean_x,
                      double mean_y, double* sxx, double* syy, double* sxy) {
    double axx = 0.0, ayy = 0.0, axy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
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
        double* row = a + i * p;
        for (std::size_t j = i; j < p; ++j) row[j] += c * g[j];
    }
}

}  // namespace scalar

// ============================================================================
// NEON kernels (aarch64 baseline, no extra compile flags needed)
// ============================================================================

#if defined(__aarch64__)
#include <arm_neon.h>

namespace neon {

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* x, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
        acc1 = vaddq_f64(acc1, vld1q_f64(x + i + 2));
    }
    double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) acc += x[i];
    return acc;
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void centered_moments(const double* x, const double* y, std::size_t n, double mean_x,
                      double mean_y, double* sxx, double* syy, double* sxy) {
    const float64x2_t vmx = vdupq_n_f64(mean_x);
    const float64x2_t vmy = vdupq_n_f64(mean_y);
    float64x2_t vxx = vdupq_n_f64(0.0), vyy = vdupq_n_f64(0.0), vxy = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t cx = vsubq_f64(vld1q_f64(x + i), vmx);
        const float64x2_t cy = vsubq_f64(vld1q_f64(y + i), vmy);
        vxx = vfmaq_f64(vxx, cx, cx);
        vyy = vfmaq_f64(vyy, cy, cy);
        vxy = vfmaq_f64(vxy, cx, cy);
    }
    double axx = vaddvq_f64(vxx), ayy = vaddvq_f64(vyy), axy = vaddvq_f64(vxy);
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
        const float64x2_t vc = vdupq_n_f64(c);
        double* row = a + i * p;
        std::size_t j = i;
        for (; j + 2 <= p; j += 2) {
            vst1q_f64(row + j, vfmaq_f64(vld1q_f64(row + j), vc, vld1q_f64(g + j)));
        }
        for (; j < p; ++j) row[j] += c * g[j];
    }
}

}  // namespace neon
#endif  // __aarch64__

// ============================================================================
// Dispatch
// ============================================================================

const char* backend_name(Backend backend) noexcept {
    switch (backend) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "unknown";
}

namespace {

Backend pick_backend() {
    Backend best = Backend::scalar;
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2::supported()) best = Backend::avx2;
#elif defined(__aarch64__)
    best = Backend::neon;
#endif

    const char* forced = std::getenv("RELVAR_KERNELS");
    if (forced == nullptr || *forced == '\0') return best;
    if (std::strcmp(forced, "scalar") == 0) return Backend::scalar;
#if defined(__x86_64__) || defined(_M_X64)
    if (std::strcmp(forced, "avx2") == 0 && avx2::supported()) return Backend::avx2;
#endif
#if defined(__aarch64__)
    if (std::strcmp(forced, "neon") == 0) return Backend::neon;
#endif
    std::fprintf(stderr, "relvar: RELVAR_KERNELS=%s unavailable, using %s\n", forced,
                 backend_name(best));
    return best;
}

struct DispatchTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*axpy)(double*, double, const double*, std::size_t);
    void (*centered_moments)(const double*, const double*, std::size_t, double, double, double*,
                             double*, double*);
    void (*syr_upper)(double*, std::size_t, double, const double*);
};

DispatchTable make_table(Backend backend) {
    switch (backend) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2:
            return {avx2::dot, avx2::sum, avx2::axpy, avx2::centered_moments, avx2::syr_upper};
#endif
#if defined(__aarch64__)
        case Backend::neon:
            return {neon::dot, neon::sum, neon::axpy, neon::centered_moments, neon::syr_upper};
#endif
        default:
            return {scalar::dot, scalar::sum, scalar::axpy, scalar::centered_moments,
                    scalar::syr_upper};
    }
}

const DispatchTable& table() {
    static const DispatchTable t = make_table(pick_backend());
    return t;
}

}  // namespace

Backend active_backend() {
    static const Backend b = pick_backend();
    return b;
}

double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }

double sum(const double* x, std::size_t n) { return table().sum(x, n); }

void axpy(double* y, double alpha, const double* x, std::size_t n) {
    table().axpy(y, alpha, x, n);
}

void centered_moments(const double* x, const double* y, std::size_t n, double mean_x,
                      double mean_y, double* sxx, double* syy, double* sxy) {
    table().centered_moments(x, y, n, mean_x, mean_y, sxx, syy, sxy);
}

void syr_upper(double* a, std::size_t p, double alpha, const double* g) {
    table().syr_upper(a, p, alpha, g);
}

}  // namespace relvar::kernels

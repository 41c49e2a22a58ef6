#include "ars/kernels.hpp"

// AVX2 backend, compiled with -mavx2 for this translation unit only.
// No FMA anywhere: mul+add keeps rounding identical to the scalar reference.

#if defined(__x86_64__) || defined(_M_X64)
#define ARS_HAVE_AVX2_TU 1
#include <immintrin.h>
#else
#define ARS_HAVE_AVX2_TU 0
#endif

namespace ars::kernels {

#if ARS_HAVE_AVX2_TU
namespace {

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vb = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double sum = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_avx2(double* y, double alpha, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_loadu_pd(y + i);
        const __m256d vx = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void blend_avx2(double* y, double alpha, double beta, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d vb = _mm256_set1_pd(beta);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_mul_pd(va, _mm256_loadu_pd(y + i));
        const __m256d vx = _mm256_mul_pd(vb, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, vx));
    }
    for (; i < n; ++i) y[i] = alpha * y[i] + beta * x[i];
}

void scale_avx2(double* y, double alpha, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] = alpha * x[i];
}

void affine_avx2(double* out, const double* w, const double* b, const double* x,
                 std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r)
        out[r] = b[r] + dot_avx2(w + r * cols, x, cols);
}

void matvec_t_acc_avx2(double* gx, const double* w, const double* g,
                       std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r)
        axpy_avx2(gx, g[r], w + r * cols, cols);
}

void rank1_acc_avx2(double* gw, const double* g, const double* x,
                    std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r)
        axpy_avx2(gw + r * cols, g[r], x, cols);
}

} // namespace

const Backend& avx2_backend() {
    static const Backend backend{
        "avx2",         dot_avx2,          axpy_avx2, blend_avx2,
        scale_avx2,     affine_avx2,       matvec_t_acc_avx2,
        rank1_acc_avx2,
    };
    return backend;
}

bool avx2_available() {
    return __builtin_cpu_supports("avx2") != 0;
}

#else

const Backend& avx2_backend() { return scalar_backend(); }
bool avx2_available() { return false; }

#endif

} // namespace ars::kernels

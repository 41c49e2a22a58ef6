#include "ars/kernels.hpp"

// Scalar reference backend. The dot kernel keeps four independent
// accumulators striding by four so its rounding matches the AVX2 lanes
// element for element; the lanes are combined as (l0+l2)+(l1+l3).

namespace ars::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        l0 += a[i] * b[i];
        l1 += a[i + 1] * b[i + 1];
        l2 += a[i + 2] * b[i + 2];
        l3 += a[i + 3] * b[i + 3];
    }
    double acc = (l0 + l2) + (l1 + l3);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double* y, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void blend_scalar(double* y, double alpha, double beta, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = alpha * y[i] + beta * x[i];
}

void scale_scalar(double* y, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = alpha * x[i];
}

void affine_scalar(double* out, const double* w, const double* b, const double* x,
                   std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r)
        out[r] = b[r] + dot_scalar(w + r * cols, x, cols);
}

void matvec_t_acc_scalar(double* gx, const double* w, const double* g,
                         std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r)
        axpy_scalar(gx, g[r], w + r * cols, cols);
}

void rank1_acc_scalar(double* gw, const double* g, const double* x,
                      std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r)
        axpy_scalar(gw + r * cols, g[r], x, cols);
}

} // namespace

const Backend& scalar_backend() {
    static const Backend backend{
        "scalar",         dot_scalar,          axpy_scalar, blend_scalar,
        scale_scalar,     affine_scalar,       matvec_t_acc_scalar,
        rank1_acc_scalar,
    };
    return backend;
}

} // namespace ars::kernels

#pragma once
#include <cstddef>
#include <string>

namespace ars::kernels {

// Data-parallel inner loops behind the network math. Two backends: a scalar
// reference and an AVX2 variant selected at runtime. Both use the same
// four-lane accumulation pattern and combine order, and FP contraction is off
// project-wide, so results are bit-identical across backends.
struct Backend {
    const char* name;

    // sum_i a[i]*b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double* y, double alpha, const double* x, std::size_t n);
    // y[i] = alpha * y[i] + beta * x[i]   (soft update: alpha=1-tau, beta=tau)
    void (*blend)(double* y, double alpha, double beta, const double* x, std::size_t n);
    // y[i] = alpha * x[i]
    void (*scale)(double* y, double alpha, const double* x, std::size_t n);
    // out[r] = b[r] + dot(W.row(r), x); W row-major rows x cols
    void (*affine)(double* out, const double* w, const double* b, const double* x,
                   std::size_t rows, std::size_t cols);
    // gx[c] += sum_r g[r] * W[r][c]   (transposed matvec accumulate)
    void (*matvec_t_acc)(double* gx, const double* w, const double* g,
                         std::size_t rows, std::size_t cols);
    // gw[r][c] += g[r] * x[c]
    void (*rank1_acc)(double* gw, const double* g, const double* x,
                      std::size_t rows, std::size_t cols);
};

const Backend& scalar_backend();
bool avx2_available();
const Backend& avx2_backend(); // valid only if avx2_available()

// Active backend; defaults to the best available. select() accepts
// "scalar", "avx2" or "auto" and throws ConfigError on anything else.
const Backend& active();
void select(const std::string& name);

} // namespace ars::kernels

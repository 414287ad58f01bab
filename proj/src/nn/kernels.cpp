#include "lmkg/nn/kernels.hpp"

#include <algorithm>
#include <cstring>

namespace lmkg::nn::kernels {

namespace {

// Below this many multiply-adds the threading overhead dominates.
constexpr std::size_t kParallelWork = std::size_t{1} << 16;

inline void axpy(double a, const double *x, double *y, std::size_t n) {
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) y[j] += a * x[j];
}

inline double dot(const double *a, const double *b, std::size_t n) {
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (std::size_t j = 0; j < n; ++j) s += a[j] * b[j];
    return s;
}

} // namespace

void linear_forward(const double *X, std::size_t batch, std::size_t in, const double *Wt, const double *bias,
                    std::size_t out, double *Y) {
    const auto n = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static) if (batch > 1 && batch * in * out >= kParallelWork)
    for (std::ptrdiff_t b = 0; b < n; ++b) {
        const double *x = X + static_cast<std::size_t>(b) * in;
        double *y = Y + static_cast<std::size_t>(b) * out;
        std::memcpy(y, bias, out * sizeof(double));
        for (std::size_t i = 0; i < in; ++i) {
            if (x[i] == 0.0) continue; // binary inputs and ReLU outputs are sparse
            axpy(x[i], Wt + i * out, y, out);
        }
    }
}

void linear_backward_params(const double *X, std::size_t batch, std::size_t in, const double *dY, std::size_t out,
                            double *dWt, double *dbias) {
    const auto n_in = static_cast<std::ptrdiff_t>(in);
#pragma omp parallel for schedule(static) if (in > 1 && batch * in * out >= kParallelWork)
    for (std::ptrdiff_t i = 0; i < n_in; ++i) {
        double *g = dWt + static_cast<std::size_t>(i) * out;
        for (std::size_t b = 0; b < batch; ++b) {
            const double x = X[b * in + static_cast<std::size_t>(i)];
            if (x == 0.0) continue;
            axpy(x, dY + b * out, g, out);
        }
    }
    for (std::size_t b = 0; b < batch; ++b) axpy(1.0, dY + b * out, dbias, out);
}

void linear_backward_input(const double *dY, std::size_t batch, std::size_t out, const double *Wt, std::size_t in,
                           double *dX) {
    const auto n = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static) if (batch > 1 && batch * in * out >= kParallelWork)
    for (std::ptrdiff_t b = 0; b < n; ++b) {
        const double *g = dY + static_cast<std::size_t>(b) * out;
        double *dx = dX + static_cast<std::size_t>(b) * in;
        for (std::size_t i = 0; i < in; ++i) dx[i] = dot(g, Wt + i * out, out);
    }
}

namespace serial {

void linear_forward(const double *X, std::size_t batch, std::size_t in, const double *Wt, const double *bias,
                    std::size_t out, double *Y) {
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < out; ++o) {
            double s = bias[o];
            for (std::size_t i = 0; i < in; ++i) s += X[b * in + i] * Wt[i * out + o];
            Y[b * out + o] = s;
        }
}

void linear_backward_params(const double *X, std::size_t batch, std::size_t in, const double *dY, std::size_t out,
                            double *dWt, double *dbias) {
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < in; ++i)
            for (std::size_t o = 0; o < out; ++o) dWt[i * out + o] += X[b * in + i] * dY[b * out + o];
        for (std::size_t o = 0; o < out; ++o) dbias[o] += dY[b * out + o];
    }
}

void linear_backward_input(const double *dY, std::size_t batch, std::size_t out, const double *Wt, std::size_t in,
                           double *dX) {
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < in; ++i) {
            double s = 0.0;
            for (std::size_t o = 0; o < out; ++o) s += dY[b * out + o] * Wt[i * out + o];
            dX[b * in + i] = s;
        }
}

} // namespace serial

} // namespace lmkg::nn::kernels

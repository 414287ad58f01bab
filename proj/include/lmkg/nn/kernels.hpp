#pragma once

#include <cstddef>

// Dense linear-layer kernels. Weights are stored input-major (Wt is in x out),
// so the forward pass and the weight gradient are axpy sweeps over contiguous
// output rows. Every output element is accumulated in a fixed order, so the
// OpenMP kernels give the same result for any thread count.
namespace lmkg::nn::kernels {

/// Y[b][o] = bias[o] + sum_i X[b][i] * Wt[i][o]
void linear_forward(const double *X, std::size_t batch, std::size_t in, const double *Wt, const double *bias,
                    std::size_t out, double *Y);

/// dWt[i][o] += sum_b X[b][i] * dY[b][o];  dbias[o] += sum_b dY[b][o]
void linear_backward_params(const double *X, std::size_t batch, std::size_t in, const double *dY, std::size_t out,
                            double *dWt, double *dbias);

/// dX[b][i] = sum_o dY[b][o] * Wt[i][o]
void linear_backward_input(const double *dY, std::size_t batch, std::size_t out, const double *Wt, std::size_t in,
                           double *dX);

/// Serial reference implementations, kept for testing and benchmarking.
namespace serial {
void linear_forward(const double *X, std::size_t batch, std::size_t in, const double *Wt, const double *bias,
                    std::size_t out, double *Y);
void linear_backward_params(const double *X, std::size_t batch, std::size_t in, const double *dY, std::size_t out,
                            double *dWt, double *dbias);
void linear_backward_input(const double *dY, std::size_t batch, std::size_t out, const double *Wt, std::size_t in,
                           double *dX);
} // namespace serial

} // namespace lmkg::nn::kernels

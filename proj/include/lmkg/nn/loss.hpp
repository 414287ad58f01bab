#pragma once

#include "lmkg/nn/tensor.hpp"

#include <cstdint>
#include <vector>

namespace lmkg::nn {

/// Per-example q = exp(|u_hat - u| (M - m)); returns the batch mean and writes
/// d(mean)/d(u_hat) into grad (resized to the batch). Subgradient 0 at u_hat = u.
double qerror_loss(std::span<const double> predicted, std::span<const double> target, double log_min, double log_max,
                   std::vector<double> &grad);

/// Grouped softmax cross-entropy. `logits` is batch x sum(group_sizes), `ids` is
/// batch x groups (zero-based indices). Returns the batch mean of -sum_i log p_i
/// and writes d(mean)/d(logits) into grad.
double nll_loss(const Tensor &logits, const std::vector<std::size_t> &group_sizes, const std::vector<std::uint32_t> &ids,
                Tensor &grad);

/// Softmax over logits[begin, begin + n) of one row, written to out.
void softmax(std::span<const double> logits, std::span<double> out);

} // namespace lmkg::nn

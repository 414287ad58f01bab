#include "lmkg/nn/tensor.hpp"

#include "lmkg/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace lmkg::nn {

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
    const auto n = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
    values_.assign(shape_.empty() ? 0 : n, fill);
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Tensor::resize(std::size_t rows, std::size_t cols) {
    shape_ = {rows, cols};
    values_.resize(rows * cols);
}

void Tensor::check_finite(const char *where) const {
    for (double v : values_)
        if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, std::string("non-finite value in ") + where);
}

} // namespace lmkg::nn

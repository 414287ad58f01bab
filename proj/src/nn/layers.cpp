#include "lmkg/nn/layers.hpp"

#include "lmkg/error.hpp"
#include "lmkg/nn/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace lmkg::nn {

const char *to_string(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

void activate(Activation a, Tensor &t) {
    switch (a) {
    case Activation::identity: break;
    case Activation::relu:
        for (auto &v : t.values()) v = v > 0.0 ? v : 0.0;
        break;
    case Activation::sigmoid:
        for (auto &v : t.values()) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        break;
    }
}

void activation_backward(Activation a, const Tensor &y, Tensor &dY) {
    auto yv = y.values();
    auto dv = dY.values();
    switch (a) {
    case Activation::identity: break;
    case Activation::relu:
        for (std::size_t i = 0; i < dv.size(); ++i)
            if (!(yv[i] > 0.0)) dv[i] = 0.0;
        break;
    case Activation::sigmoid:
        for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= yv[i] * (1.0 - yv[i]);
        break;
    }
}

Linear::Linear(std::size_t in, std::size_t out)
    : in_(in), out_(out), wt_(in * out, 0.0), bias_(out, 0.0), gwt_(in * out, 0.0), gbias_(out, 0.0) {
    if (in == 0 || out == 0) throw Error(ErrorCode::invalid_argument, "layer widths must be >= 1");
}

void Linear::init_glorot(Rng &rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in_ + out_));
    for (auto &w : wt_) w = (2.0 * uniform_unit(rng) - 1.0) * limit;
    std::fill(bias_.begin(), bias_.end(), 0.0);
    apply_mask();
}

void Linear::set_mask(std::vector<std::uint8_t> mask) {
    if (mask.size() != wt_.size()) throw Error(ErrorCode::shape_mismatch, "mask size does not match layer");
    mask_ = std::move(mask);
    apply_mask();
}

void Linear::apply_mask() {
    if (mask_.empty()) return;
    for (std::size_t i = 0; i < wt_.size(); ++i)
        if (!mask_[i]) wt_[i] = 0.0;
}

void Linear::forward(const Tensor &X, Tensor &Y) const {
    if (X.cols() != in_)
        throw Error(ErrorCode::shape_mismatch,
                    "layer expects width " + std::to_string(in_) + ", got " + std::to_string(X.cols()));
    Y.resize(X.rows(), out_);
    kernels::linear_forward(X.data(), X.rows(), in_, wt_.data(), bias_.data(), out_, Y.data());
}

void Linear::backward(const Tensor &X, const Tensor &dY, Tensor *dX) {
    if (X.cols() != in_ || dY.cols() != out_ || X.rows() != dY.rows())
        throw Error(ErrorCode::shape_mismatch, "backward shapes do not match layer");
    kernels::linear_backward_params(X.data(), X.rows(), in_, dY.data(), out_, gwt_.data(), gbias_.data());
    if (!mask_.empty())
        for (std::size_t i = 0; i < gwt_.size(); ++i)
            if (!mask_[i]) gwt_[i] = 0.0;
    if (dX) {
        dX->resize(X.rows(), in_);
        kernels::linear_backward_input(dY.data(), dY.rows(), out_, wt_.data(), in_, dX->data());
    }
}

void Linear::zero_grad() {
    std::fill(gwt_.begin(), gwt_.end(), 0.0);
    std::fill(gbias_.begin(), gbias_.end(), 0.0);
}

void Linear::collect(std::vector<ParamRef> &out) {
    out.push_back({wt_, gwt_});
    out.push_back({bias_, gbias_});
}

Mlp::Mlp(std::vector<std::size_t> widths, Activation hidden, Activation output)
    : widths_(std::move(widths)), hidden_(hidden), output_(output) {
    if (widths_.size() < 2) throw Error(ErrorCode::invalid_argument, "an MLP needs at least input and output widths");
    for (std::size_t i = 0; i + 1 < widths_.size(); ++i) layers_.emplace_back(widths_[i], widths_[i + 1]);
}

void Mlp::init_glorot(Rng &rng) {
    for (auto &l : layers_) l.init_glorot(rng);
}

const Tensor &Mlp::forward(const Tensor &X, Cache &cache) const {
    cache.acts.resize(layers_.size() + 1);
    cache.acts[0] = X;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].forward(cache.acts[i], cache.acts[i + 1]);
        activate(i + 1 == layers_.size() ? output_ : hidden_, cache.acts[i + 1]);
    }
    cache.acts.back().check_finite("network output");
    return cache.acts.back();
}

void Mlp::backward(Cache &cache, Tensor &dOut, Tensor *dX) {
    if (cache.acts.size() != layers_.size() + 1) throw Error(ErrorCode::shape_mismatch, "cache does not match network");
    Tensor grad = std::move(dOut);
    Tensor below;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        activation_backward(i + 1 == layers_.size() ? output_ : hidden_, cache.acts[i + 1], grad);
        const bool need_input = i > 0 || dX != nullptr;
        layers_[i].backward(cache.acts[i], grad, need_input ? &below : nullptr);
        if (need_input) std::swap(grad, below);
    }
    if (dX) *dX = std::move(grad);
}

void Mlp::zero_grad() {
    for (auto &l : layers_) l.zero_grad();
}

void Mlp::collect(std::vector<ParamRef> &out) {
    for (auto &l : layers_) l.collect(out);
}

} // namespace lmkg::nn

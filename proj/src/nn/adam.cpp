#include "lmkg/nn/adam.hpp"

#include "lmkg/error.hpp"

#include <algorithm>
#include <cmath>

namespace lmkg::nn {

Adam::Adam(std::vector<ParamRef> params, AdamConfig config) : params_(std::move(params)), config_(config) {
    for (const auto &p : params_) {
        if (p.value.size() != p.grad.size()) throw Error(ErrorCode::shape_mismatch, "parameter and gradient sizes differ");
        m_.emplace_back(p.value.size(), 0.0);
        v_.emplace_back(p.value.size(), 0.0);
    }
}

void Adam::step() {
    for (const auto &p : params_)
        for (double g : p.grad)
            if (!std::isfinite(g)) throw Error(ErrorCode::non_finite, "non-finite gradient");
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const double step = config_.lr / c1;
    const double root_c2 = std::sqrt(c2);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto value = params_[k].value;
        auto grad = params_[k].grad;
        auto &m = m_[k];
        auto &v = v_[k];
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad[i];
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
            // Masked weights have g = 0 forever, so m = v = 0 and they stay at exactly zero.
            value[i] -= step * m[i] / (std::sqrt(v[i]) / root_c2 + config_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (auto &p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

} // namespace lmkg::nn

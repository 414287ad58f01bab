#pragma once

#include "lmkg/nn/tensor.hpp"

#include <cstdint>
#include <vector>

namespace lmkg::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
  public:
    Adam() = default;
    Adam(std::vector<ParamRef> params, AdamConfig config = {});

    /// One bias-corrected update. Throws Error(non_finite) on a non-finite gradient.
    void step();
    void zero_grad();

    std::uint64_t steps() const noexcept { return t_; }
    const AdamConfig &config() const noexcept { return config_; }

  private:
    std::vector<ParamRef> params_;
    std::vector<std::vector<double>> m_, v_;
    AdamConfig config_;
    std::uint64_t t_ = 0;
};

} // namespace lmkg::nn

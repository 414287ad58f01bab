#pragma once

#include "lmkg/nn/tensor.hpp"
#include "lmkg/rng.hpp"

#include <cstdint>
#include <vector>

namespace lmkg::nn {

enum class Activation : std::uint8_t { identity = 0, relu = 1, sigmoid = 2 };

const char *to_string(Activation a);

/// In place.
void activate(Activation a, Tensor &t);
/// dY *= f'(.) expressed through the activation output y.
void activation_backward(Activation a, const Tensor &y, Tensor &dY);

/// Dense layer, optionally masked. Weights are kept input-major (Wt is in x out);
/// the mask uses the same layout and masked weights are held at exactly zero.
class Linear {
  public:
    Linear() = default;
    Linear(std::size_t in, std::size_t out);

    std::size_t in() const noexcept { return in_; }
    std::size_t out() const noexcept { return out_; }

    /// Uniform in +-sqrt(6 / (in + out)), bias 0.
    void init_glorot(Rng &rng);
    void set_mask(std::vector<std::uint8_t> mask);
    bool masked() const noexcept { return !mask_.empty(); }
    const std::vector<std::uint8_t> &mask() const noexcept { return mask_; }

    /// Y = X Wt + bias, resized to batch x out. Throws shape_mismatch.
    void forward(const Tensor &X, Tensor &Y) const;
    /// Accumulates weight/bias gradients; writes dX if non-null.
    void backward(const Tensor &X, const Tensor &dY, Tensor *dX);

    void zero_grad();
    void collect(std::vector<ParamRef> &out);
    /// Re-zeroes masked weights, e.g. after loading raw values.
    void apply_mask();

    std::vector<double> &weights() noexcept { return wt_; }
    const std::vector<double> &weights() const noexcept { return wt_; }
    std::vector<double> &bias() noexcept { return bias_; }
    const std::vector<double> &bias() const noexcept { return bias_; }
    const std::vector<double> &weight_grad() const noexcept { return gwt_; }
    const std::vector<double> &bias_grad() const noexcept { return gbias_; }

  private:
    std::size_t in_ = 0;
    std::size_t out_ = 0;
    std::vector<double> wt_, bias_, gwt_, gbias_;
    std::vector<std::uint8_t> mask_;
};

/// Plain feed-forward stack: every layer but the last uses the hidden activation.
class Mlp {
  public:
    struct Cache {
        std::vector<Tensor> acts; // acts[0] is the input, acts[i + 1] the output of layer i
    };

    Mlp() = default;
    Mlp(std::vector<std::size_t> widths, Activation hidden, Activation output);

    void init_glorot(Rng &rng);
    const Tensor &forward(const Tensor &X, Cache &cache) const;
    /// dOut is the loss gradient w.r.t. the (post-activation) output; consumed.
    void backward(Cache &cache, Tensor &dOut, Tensor *dX = nullptr);

    void zero_grad();
    void collect(std::vector<ParamRef> &out);

    const std::vector<std::size_t> &widths() const noexcept { return widths_; }
    std::vector<Linear> &layers() noexcept { return layers_; }
    const std::vector<Linear> &layers() const noexcept { return layers_; }
    Activation hidden_activation() const noexcept { return hidden_; }
    Activation output_activation() const noexcept { return output_; }

  private:
    std::vector<std::size_t> widths_;
    std::vector<Linear> layers_;
    Activation hidden_ = Activation::relu;
    Activation output_ = Activation::identity;
};

} // namespace lmkg::nn

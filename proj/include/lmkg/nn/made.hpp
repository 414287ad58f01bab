#pragma once

#include "lmkg/nn/layers.hpp"

#include <cstdint>
#include <vector>

namespace lmkg::nn {

/// Degree bookkeeping for an autoregressive network over D variables.
/// order[r] is the variable at autoregressive rank r; a variable's degree is its rank + 1.
struct MadeMaskPlan {
    std::uint32_t D = 0;
    std::vector<std::uint32_t> order;
    /// One degree assignment per hidden layer, each value in [1, D-1].
    std::vector<std::vector<std::uint32_t>> hidden_degrees;

    std::uint32_t degree(std::uint32_t var) const;
    /// Degrees of a layer input laid out as `widths[v]` consecutive units per variable.
    std::vector<std::uint32_t> variable_degrees(const std::vector<std::size_t> &widths) const;
};

/// Hidden rule (m_out >= m_in), in x out layout.
std::vector<std::uint8_t> hidden_mask(const std::vector<std::uint32_t> &in_deg, const std::vector<std::uint32_t> &out_deg);
/// Output rule (m_out > m_in), in x out layout.
std::vector<std::uint8_t> output_mask(const std::vector<std::uint32_t> &in_deg, const std::vector<std::uint32_t> &out_deg);

/// Draws hidden degrees uniformly from [1, D-1]. With `shared`, every hidden
/// layer reuses the first layer's assignment (all widths must be equal).
/// An empty `order` means the identity order. Throws for D < 2.
MadeMaskPlan build_made_masks(const std::vector<std::size_t> &hidden_widths, std::uint32_t D, std::uint64_t seed,
                              std::vector<std::uint32_t> order = {}, bool shared = true);

struct ResMadeConfig {
    std::vector<std::size_t> in_widths;  // units per variable, input side
    std::vector<std::size_t> out_widths; // units per variable, output side
    std::size_t hidden = 128;
    std::size_t blocks = 2;
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> order;
};

/// Masked residual autoregressive network:
///   h = L_in(x);  h += L2(relu(L1(relu(h)))) per block;  y = L_out(relu(h)).
/// All hidden layers share one degree assignment so the skips stay autoregressive.
class ResMade {
  public:
    struct Cache {
        Tensor x;
        std::vector<Tensor> h;       // h[0] after L_in, h[b + 1] after block b
        std::vector<Tensor> r1, t1;  // relu(h[b]) and relu(L1(.)) per block
        Tensor r_out;                // relu(h.back())
        Tensor y;
    };

    ResMade() = default;
    explicit ResMade(ResMadeConfig config);

    void init_glorot(Rng &rng);
    const Tensor &forward(const Tensor &X, Cache &cache) const;
    /// Forward that only evaluates the output columns [col_begin, col_end).
    void forward_columns(const Tensor &X, std::size_t col_begin, std::size_t col_end, Tensor &Y, Cache &cache) const;
    void backward(Cache &cache, const Tensor &dY, Tensor *dX = nullptr);

    void zero_grad();
    void collect(std::vector<ParamRef> &out);
    /// Re-applies all masks (after loading raw parameters).
    void apply_masks();

    const ResMadeConfig &config() const noexcept { return config_; }
    const MadeMaskPlan &plan() const noexcept { return plan_; }
    std::size_t in_width() const noexcept { return in_.in(); }
    std::size_t out_width() const noexcept { return out_.out(); }
    /// First output column of variable v's group.
    std::size_t out_offset(std::uint32_t v) const { return out_offsets_[v]; }

    std::vector<Linear *> layers();
    std::vector<const Linear *> layers() const;

  private:
    void hidden_forward(const Tensor &X, Cache &cache) const;

    ResMadeConfig config_;
    MadeMaskPlan plan_;
    Linear in_;
    std::vector<Linear> l1_, l2_;
    Linear out_;
    std::vector<std::size_t> out_offsets_;
};

} // namespace lmkg::nn

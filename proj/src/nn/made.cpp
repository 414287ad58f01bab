#include "lmkg/nn/made.hpp"

#include "lmkg/error.hpp"

#include <algorithm>
#include <numeric>

namespace lmkg::nn {

std::uint32_t MadeMaskPlan::degree(std::uint32_t var) const {
    const auto it = std::find(order.begin(), order.end(), var);
    if (it == order.end()) throw Error(ErrorCode::out_of_range, "variable outside the autoregressive order");
    return static_cast<std::uint32_t>(it - order.begin()) + 1;
}

std::vector<std::uint32_t> MadeMaskPlan::variable_degrees(const std::vector<std::size_t> &widths) const {
    if (widths.size() != D) throw Error(ErrorCode::shape_mismatch, "need one width per variable");
    std::vector<std::uint32_t> deg;
    for (std::uint32_t v = 0; v < D; ++v) deg.insert(deg.end(), widths[v], degree(v));
    return deg;
}

namespace {

template <class Keep>
std::vector<std::uint8_t> degree_mask(const std::vector<std::uint32_t> &in_deg, const std::vector<std::uint32_t> &out_deg,
                                      Keep keep) {
    std::vector<std::uint8_t> mask(in_deg.size() * out_deg.size());
    for (std::size_t i = 0; i < in_deg.size(); ++i)
        for (std::size_t o = 0; o < out_deg.size(); ++o) mask[i * out_deg.size() + o] = keep(in_deg[i], out_deg[o]) ? 1 : 0;
    return mask;
}

std::vector<std::uint32_t> check_order(std::vector<std::uint32_t> order, std::uint32_t D) {
    if (order.empty()) {
        order.resize(D);
        std::iota(order.begin(), order.end(), 0u);
    }
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::uint32_t i = 0; i < sorted.size(); ++i)
        if (sorted[i] != i || sorted.size() != D)
            throw Error(ErrorCode::invalid_argument, "order must be a permutation of the variables");
    return order;
}

// D = 1 is allowed internally: hidden units get degree 1 and the single output
// group sees none of them.
MadeMaskPlan make_plan(const std::vector<std::size_t> &hidden_widths, std::uint32_t D, std::uint64_t seed,
                       std::vector<std::uint32_t> order, bool shared) {
    MadeMaskPlan plan;
    plan.D = D;
    plan.order = check_order(std::move(order), D);
    Rng rng(seed);
    for (std::size_t l = 0; l < hidden_widths.size(); ++l) {
        if (hidden_widths[l] < 1) throw Error(ErrorCode::invalid_argument, "hidden widths must be >= 1");
        if (shared && l > 0) {
            if (hidden_widths[l] != hidden_widths[0])
                throw Error(ErrorCode::invalid_argument, "shared degrees need equal hidden widths");
            plan.hidden_degrees.push_back(plan.hidden_degrees[0]);
            continue;
        }
        std::vector<std::uint32_t> deg(hidden_widths[l]);
        for (auto &d : deg) d = D < 2 ? 1 : 1 + static_cast<std::uint32_t>(uniform_below(rng, D - 1));
        plan.hidden_degrees.push_back(std::move(deg));
    }
    return plan;
}

} // namespace

std::vector<std::uint8_t> hidden_mask(const std::vector<std::uint32_t> &in_deg, const std::vector<std::uint32_t> &out_deg) {
    return degree_mask(in_deg, out_deg, [](std::uint32_t i, std::uint32_t o) { return o >= i; });
}

std::vector<std::uint8_t> output_mask(const std::vector<std::uint32_t> &in_deg, const std::vector<std::uint32_t> &out_deg) {
    return degree_mask(in_deg, out_deg, [](std::uint32_t i, std::uint32_t o) { return o > i; });
}

MadeMaskPlan build_made_masks(const std::vector<std::size_t> &hidden_widths, std::uint32_t D, std::uint64_t seed,
                              std::vector<std::uint32_t> order, bool shared) {
    if (D < 2) throw Error(ErrorCode::invalid_argument, "autoregressive masks need D >= 2");
    return make_plan(hidden_widths, D, seed, std::move(order), shared);
}

ResMade::ResMade(ResMadeConfig config) : config_(std::move(config)) {
    const auto D = static_cast<std::uint32_t>(config_.in_widths.size());
    if (D < 1 || config_.out_widths.size() != D)
        throw Error(ErrorCode::invalid_argument, "ResMADE needs matching per-variable input and output widths");
    const std::vector<std::size_t> hidden(2 * config_.blocks + 1, config_.hidden);
    plan_ = make_plan(hidden, D, config_.seed, config_.order, true);
    config_.order = plan_.order;

    const auto in_deg = plan_.variable_degrees(config_.in_widths);
    const auto out_deg = plan_.variable_degrees(config_.out_widths);
    const auto &h_deg = plan_.hidden_degrees[0];

    in_ = Linear(in_deg.size(), config_.hidden);
    in_.set_mask(hidden_mask(in_deg, h_deg));
    const auto hh = hidden_mask(h_deg, h_deg);
    for (std::size_t b = 0; b < config_.blocks; ++b) {
        l1_.emplace_back(config_.hidden, config_.hidden);
        l1_.back().set_mask(hh);
        l2_.emplace_back(config_.hidden, config_.hidden);
        l2_.back().set_mask(hh);
    }
    out_ = Linear(config_.hidden, out_deg.size());
    out_.set_mask(output_mask(h_deg, out_deg));

    out_offsets_.assign(D + 1, 0);
    for (std::uint32_t v = 0; v < D; ++v) out_offsets_[v + 1] = out_offsets_[v] + config_.out_widths[v];
}

void ResMade::init_glorot(Rng &rng) {
    for (auto *l : layers()) l->init_glorot(rng);
}

std::vector<Linear *> ResMade::layers() {
    std::vector<Linear *> out{&in_};
    for (std::size_t b = 0; b < l1_.size(); ++b) {
        out.push_back(&l1_[b]);
        out.push_back(&l2_[b]);
    }
    out.push_back(&out_);
    return out;
}

std::vector<const Linear *> ResMade::layers() const {
    std::vector<const Linear *> out{&in_};
    for (std::size_t b = 0; b < l1_.size(); ++b) {
        out.push_back(&l1_[b]);
        out.push_back(&l2_[b]);
    }
    out.push_back(&out_);
    return out;
}

void ResMade::hidden_forward(const Tensor &X, Cache &cache) const {
    const std::size_t blocks = l1_.size();
    cache.x = X;
    cache.h.resize(blocks + 1);
    cache.r1.resize(blocks);
    cache.t1.resize(blocks);
    in_.forward(X, cache.h[0]);
    Tensor t2;
    for (std::size_t b = 0; b < blocks; ++b) {
        cache.r1[b] = cache.h[b];
        activate(Activation::relu, cache.r1[b]);
        l1_[b].forward(cache.r1[b], cache.t1[b]);
        activate(Activation::relu, cache.t1[b]);
        l2_[b].forward(cache.t1[b], t2);
        cache.h[b + 1] = cache.h[b];
        auto hv = cache.h[b + 1].values();
        auto tv = t2.values();
        for (std::size_t i = 0; i < hv.size(); ++i) hv[i] += tv[i];
    }
    cache.r_out = cache.h.back();
    activate(Activation::relu, cache.r_out);
}

const Tensor &ResMade::forward(const Tensor &X, Cache &cache) const {
    hidden_forward(X, cache);
    out_.forward(cache.r_out, cache.y);
    cache.y.check_finite("ResMADE output");
    return cache.y;
}

void ResMade::forward_columns(const Tensor &X, std::size_t col_begin, std::size_t col_end, Tensor &Y,
                              Cache &cache) const {
    if (col_begin > col_end || col_end > out_.out()) throw Error(ErrorCode::out_of_range, "output columns out of range");
    hidden_forward(X, cache);
    const std::size_t n = col_end - col_begin;
    const std::size_t rows = X.rows();
    Y.resize(rows, n);
    const auto &W = out_.weights();
    const auto &bias = out_.bias();
    const std::size_t out = out_.out();
    for (std::size_t r = 0; r < rows; ++r) {
        double *y = Y.data() + r * n;
        for (std::size_t c = 0; c < n; ++c) y[c] = bias[col_begin + c];
        const double *h = cache.r_out.data() + r * config_.hidden;
        for (std::size_t i = 0; i < config_.hidden; ++i) {
            if (h[i] == 0.0) continue;
            const double *w = W.data() + i * out + col_begin;
            for (std::size_t c = 0; c < n; ++c) y[c] += h[i] * w[c];
        }
    }
    Y.check_finite("ResMADE output");
}

void ResMade::backward(Cache &cache, const Tensor &dY, Tensor *dX) {
    const std::size_t blocks = l1_.size();
    Tensor g;
    out_.backward(cache.r_out, dY, &g);
    activation_backward(Activation::relu, cache.r_out, g); // g is now dL/dh_last
    Tensor dt, dr;
    for (std::size_t b = blocks; b-- > 0;) {
        l2_[b].backward(cache.t1[b], g, &dt);
        activation_backward(Activation::relu, cache.t1[b], dt);
        l1_[b].backward(cache.r1[b], dt, &dr);
        activation_backward(Activation::relu, cache.r1[b], dr);
        auto gv = g.values();
        auto rv = dr.values();
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += rv[i];
    }
    in_.backward(cache.x, g, dX);
}

void ResMade::zero_grad() {
    for (auto *l : layers()) l->zero_grad();
}

void ResMade::collect(std::vector<ParamRef> &out) {
    for (auto *l : layers()) l->collect(out);
}

void ResMade::apply_masks() {
    for (auto *l : layers()) l->apply_mask();
}

} // namespace lmkg::nn

#include "lmkg/error.hpp"
#include "lmkg/nn/adam.hpp"
#include "lmkg/nn/kernels.hpp"
#include "lmkg/nn/layers.hpp"
#include "lmkg/nn/loss.hpp"
#include "lmkg/nn/made.hpp"

#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <functional>
#include <numeric>

using namespace lmkg;
using namespace lmkg::nn;

namespace {

constexpr double kStep = 1e-5;
constexpr double kRelTol = 1e-4;

Tensor random_matrix(std::size_t r, std::size_t c, Rng &rng, double zero_frac = 0.0) {
    Tensor t = Tensor::matrix(r, c);
    for (auto &v : t.values()) v = uniform_unit(rng) < zero_frac ? 0.0 : 2 * uniform_unit(rng) - 1;
    return t;
}

double rel_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale < 1e-7 ? std::abs(a - b) : std::abs(a - b) / scale;
}

// Compares analytic gradients of `params` against central differences of
// `loss`. frozen[k][i] marks masked entries, which are not parameters.
void expect_grad_matches(std::vector<ParamRef> params, const std::function<double()> &loss,
                         const std::vector<std::vector<std::uint8_t>> &frozen = {}) {
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto &p = params[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            if (k < frozen.size() && !frozen[k].empty() && frozen[k][i]) continue;
            const double orig = p.value[i];
            p.value[i] = orig + kStep;
            const double up = loss();
            p.value[i] = orig - kStep;
            const double down = loss();
            p.value[i] = orig;
            const double numeric = (up - down) / (2 * kStep);
            EXPECT_LE(rel_error(p.grad[i], numeric), kRelTol) << "analytic " << p.grad[i] << " numeric " << numeric;
        }
    }
}

} // namespace

TEST(Kernels, ParallelMatchesSerialExactly) {
    Rng rng(1);
    for (auto [batch, in, out] : {std::tuple{1, 3, 2}, {7, 33, 65}, {64, 128, 96}, {300, 40, 300}}) {
        const auto X = random_matrix(batch, in, rng, 0.3);
        const auto Wt = random_matrix(in, out, rng);
        const auto bias = random_matrix(1, out, rng);
        const auto dY = random_matrix(batch, out, rng);
        Tensor y1 = Tensor::matrix(batch, out), y2 = y1;
        kernels::linear_forward(X.data(), batch, in, Wt.data(), bias.data(), out, y1.data());
        kernels::serial::linear_forward(X.data(), batch, in, Wt.data(), bias.data(), out, y2.data());
        EXPECT_EQ(y1, y2);

        Tensor g1 = Tensor::matrix(in, out, 0.5), g2 = g1, b1 = Tensor::matrix(1, out, 0.25), b2 = b1;
        kernels::linear_backward_params(X.data(), batch, in, dY.data(), out, g1.data(), b1.data());
        kernels::serial::linear_backward_params(X.data(), batch, in, dY.data(), out, g2.data(), b2.data());
        EXPECT_EQ(g1, g2);
        EXPECT_EQ(b1, b2);

        Tensor d1 = Tensor::matrix(batch, in), d2 = d1;
        kernels::linear_backward_input(dY.data(), batch, out, Wt.data(), in, d1.data());
        kernels::serial::linear_backward_input(dY.data(), batch, out, Wt.data(), in, d2.data());
        // the vectorised dot product may sum in a different order
        for (std::size_t i = 0; i < d1.size(); ++i) EXPECT_NEAR(d1[i], d2[i], 1e-12);
    }
}

TEST(Kernels, ThreadCountDoesNotChangeResults) {
    Rng rng(9);
    const std::size_t batch = 128, in = 96, out = 80;
    const auto X = random_matrix(batch, in, rng, 0.3);
    const auto Wt = random_matrix(in, out, rng);
    const auto bias = random_matrix(1, out, rng);
    const auto dY = random_matrix(batch, out, rng);
    auto run = [&](int threads) {
        omp_set_num_threads(threads);
        std::vector<Tensor> r{Tensor::matrix(batch, out), Tensor::matrix(in, out), Tensor::matrix(1, out),
                              Tensor::matrix(batch, in)};
        kernels::linear_forward(X.data(), batch, in, Wt.data(), bias.data(), out, r[0].data());
        kernels::linear_backward_params(X.data(), batch, in, dY.data(), out, r[1].data(), r[2].data());
        kernels::linear_backward_input(dY.data(), batch, out, Wt.data(), in, r[3].data());
        return r;
    };
    const int before = omp_get_max_threads();
    const auto one = run(1);
    const auto four = run(4);
    omp_set_num_threads(before);
    EXPECT_EQ(one, four);
}

TEST(Kernels, ForwardMatchesDefinition) {
    Rng rng(2);
    const auto X = random_matrix(5, 4, rng);
    const auto Wt = random_matrix(4, 3, rng);
    const auto bias = random_matrix(1, 3, rng);
    Tensor Y = Tensor::matrix(5, 3);
    kernels::linear_forward(X.data(), 5, 4, Wt.data(), bias.data(), 3, Y.data());
    for (std::size_t b = 0; b < 5; ++b)
        for (std::size_t o = 0; o < 3; ++o) {
            double want = bias[o];
            for (std::size_t i = 0; i < 4; ++i) want += X(b, i) * Wt(i, o);
            EXPECT_NEAR(Y(b, o), want, 1e-12);
        }
}

TEST(Linear, GlorotRangeAndShapeCheck) {
    Linear l(30, 50);
    Rng rng(3);
    l.init_glorot(rng);
    const double a = std::sqrt(6.0 / 80.0);
    for (double w : l.weights()) EXPECT_LE(std::abs(w), a);
    for (double b : l.bias()) EXPECT_EQ(b, 0.0);
    Tensor Y;
    EXPECT_THROW(l.forward(Tensor::matrix(2, 29), Y), Error);
}

TEST(GradCheck, DenseMlp) {
    Rng rng(4);
    for (auto out_act : {Activation::identity, Activation::sigmoid}) {
        Mlp net({6, 16, 16, 3}, Activation::relu, out_act);
        net.init_glorot(rng);
        const auto X = random_matrix(4, 6, rng);
        const auto C = random_matrix(4, 3, rng);
        auto loss = [&] {
            Mlp::Cache cache;
            const auto &y = net.forward(X, cache);
            double s = 0;
            for (std::size_t i = 0; i < y.size(); ++i) s += C[i] * y[i];
            return s;
        };
        Mlp::Cache cache;
        net.forward(X, cache);
        net.zero_grad();
        Tensor dOut = C;
        Tensor dX;
        net.backward(cache, dOut, &dX);
        std::vector<ParamRef> params;
        net.collect(params);
        expect_grad_matches(params, loss);

        // input gradient
        Tensor Xp = X;
        for (std::size_t i = 0; i < X.size(); ++i) {
            auto eval = [&](double v) {
                Xp[i] = v;
                Mlp::Cache c;
                const auto &y = net.forward(Xp, c);
                double s = 0;
                for (std::size_t j = 0; j < y.size(); ++j) s += C[j] * y[j];
                return s;
            };
            const double numeric = (eval(X[i] + kStep) - eval(X[i] - kStep)) / (2 * kStep);
            Xp[i] = X[i];
            EXPECT_LE(rel_error(dX[i], numeric), kRelTol);
        }
    }
}

TEST(GradCheck, MaskedResMade) {
    ResMadeConfig cfg{{3, 2, 4}, {3, 2, 4}, 16, 1, 7, {}};
    ResMade net(cfg);
    Rng rng(5);
    net.init_glorot(rng);
    const auto X = random_matrix(3, net.in_width(), rng);
    const auto C = random_matrix(3, net.out_width(), rng);
    auto loss = [&] {
        ResMade::Cache cache;
        const auto &y = net.forward(X, cache);
        double s = 0;
        for (std::size_t i = 0; i < y.size(); ++i) s += C[i] * y[i];
        return s;
    };
    ResMade::Cache cache;
    net.forward(X, cache);
    net.zero_grad();
    net.backward(cache, C);
    std::vector<ParamRef> params;
    net.collect(params);
    std::vector<std::vector<std::uint8_t>> frozen;
    for (const auto *l : std::as_const(net).layers()) {
        std::vector<std::uint8_t> f(l->mask().size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = l->mask()[i] ? 0 : 1;
        frozen.push_back(std::move(f));
        frozen.emplace_back(); // bias
    }
    expect_grad_matches(params, loss, frozen);
    // masked weights carry no gradient
    for (const auto *l : std::as_const(net).layers())
        for (std::size_t i = 0; i < l->mask().size(); ++i)
            if (!l->mask()[i]) {
                EXPECT_EQ(l->weights()[i], 0.0);
                EXPECT_EQ(l->weight_grad()[i], 0.0);
            }
}

TEST(GradCheck, QErrorLoss) {
    Rng rng(6);
    std::vector<double> pred(8), target(8);
    for (std::size_t i = 0; i < 8; ++i) {
        pred[i] = uniform_unit(rng);
        target[i] = uniform_unit(rng);
    }
    std::vector<double> grad;
    qerror_loss(pred, target, 0.0, 3.5, grad);
    std::vector<double> scratch;
    std::vector<ParamRef> params{{pred, grad}};
    expect_grad_matches(params, [&] { return qerror_loss(pred, target, 0.0, 3.5, scratch); });
}

TEST(QErrorLoss, Values) {
    std::vector<double> grad;
    const std::vector<double> p{0.5, 0.2}, t{0.5, 0.7};
    // |0|*2 -> 1 and |0.5|*2 -> e
    EXPECT_NEAR(qerror_loss(p, t, 1.0, 3.0, grad), (1 + std::exp(1.0)) / 2, 1e-12);
    EXPECT_EQ(grad[0], 0.0);
    EXPECT_LT(grad[1], 0.0);
    EXPECT_THROW(qerror_loss(p, t, 2.0, 2.0, grad), Error);
}

TEST(GradCheck, GroupedNll) {
    Rng rng(7);
    const std::vector<std::size_t> groups{3, 5, 2};
    Tensor logits = random_matrix(4, 10, rng);
    std::vector<std::uint32_t> ids{0, 4, 1, 2, 0, 0, 1, 3, 1, 0, 2, 1};
    Tensor grad, scratch;
    nll_loss(logits, groups, ids, grad);
    std::vector<ParamRef> params{{logits.values(), grad.values()}};
    expect_grad_matches(params, [&] { return nll_loss(logits, groups, ids, scratch); });
}

TEST(NllLoss, UniformLogitsAndRange) {
    const std::vector<std::size_t> groups{4, 2};
    Tensor logits = Tensor::matrix(1, 6, 0.0), grad;
    EXPECT_NEAR(nll_loss(logits, groups, {1, 0}, grad), std::log(4.0) + std::log(2.0), 1e-12);
    EXPECT_THROW(nll_loss(logits, groups, {4, 0}, grad), Error);
}

TEST(Softmax, StableAndNormalised) {
    std::vector<double> in{1000.0, 1001.0, 999.0}, out(3);
    softmax(in, out);
    EXPECT_NEAR(out[0] + out[1] + out[2], 1.0, 1e-12);
    EXPECT_GT(out[1], out[0]);
    for (double v : out) EXPECT_TRUE(std::isfinite(v));
}

TEST(Adam, FirstStepMovesByLearningRate) {
    std::vector<double> w{1.0, -2.0, 0.5}, g{0.3, -4.0, 0.0};
    Adam opt({{w, g}}, {0.1, 0.9, 0.999, 1e-8});
    opt.step();
    EXPECT_NEAR(w[0], 1.0 - 0.1 * 0.3 / (0.3 + 1e-8), 1e-12);
    EXPECT_NEAR(w[1], -2.0 + 0.1 * 4.0 / (4.0 + 1e-8), 1e-12);
    EXPECT_EQ(w[2], 0.5);
    EXPECT_EQ(opt.steps(), 1u);
    opt.zero_grad();
    EXPECT_EQ(g, (std::vector<double>{0, 0, 0}));
}

TEST(Adam, MinimisesQuadratic) {
    std::vector<double> w{3.0}, g{0.0};
    Adam opt({{w, g}}, {0.05});
    for (int i = 0; i < 2000; ++i) {
        g[0] = 2 * (w[0] - 1.0);
        opt.step();
    }
    EXPECT_NEAR(w[0], 1.0, 1e-3);
}

TEST(Adam, NonFiniteGradientThrows) {
    std::vector<double> w{1.0}, g{std::nan("")};
    Adam opt({{w, g}});
    try {
        opt.step();
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::non_finite);
    }
}

TEST(Made, MaskRules) {
    EXPECT_EQ(hidden_mask({1, 2}, {1, 2}), (std::vector<std::uint8_t>{1, 1, 0, 1}));
    EXPECT_EQ(output_mask({1, 2}, {1, 2, 3}), (std::vector<std::uint8_t>{0, 1, 1, 0, 0, 1}));
    EXPECT_THROW(build_made_masks({8}, 1, 0), Error);
    const auto plan = build_made_masks({32, 32}, 5, 9, {4, 2, 0, 1, 3});
    EXPECT_EQ(plan.degree(4), 1u);
    EXPECT_EQ(plan.degree(3), 5u);
    EXPECT_EQ(plan.hidden_degrees[0], plan.hidden_degrees[1]);
    for (auto d : plan.hidden_degrees[0]) {
        EXPECT_GE(d, 1u);
        EXPECT_LE(d, 4u);
    }
}

// Perturbing input variable j must leave the outputs of every variable ranked
// at or before j bit-identical.
TEST(Made, ResMadeIsAutoregressive) {
    Rng rng(10);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::uint32_t D = 2 + static_cast<std::uint32_t>(seed % 5);
        ResMadeConfig cfg;
        for (std::uint32_t v = 0; v < D; ++v) {
            cfg.in_widths.push_back(1 + uniform_below(rng, 3));
            cfg.out_widths.push_back(1 + uniform_below(rng, 4));
        }
        cfg.hidden = 24;
        cfg.blocks = 1 + seed % 3;
        cfg.seed = seed;
        cfg.order.resize(D);
        std::iota(cfg.order.begin(), cfg.order.end(), 0u);
        for (std::size_t i = D; i > 1; --i) std::swap(cfg.order[i - 1], cfg.order[uniform_below(rng, i)]);
        ResMade net(cfg);
        net.init_glorot(rng);
        const auto X = random_matrix(1, net.in_width(), rng);
        ResMade::Cache c0;
        const Tensor base = net.forward(X, c0);
        std::size_t col = 0;
        for (std::uint32_t j = 0; j < D; ++j)
            for (std::size_t u = 0; u < cfg.in_widths[j]; ++u, ++col) {
                Tensor Xp = X;
                Xp[col] += 1.0;
                ResMade::Cache c1;
                const Tensor &y = net.forward(Xp, c1);
                for (std::uint32_t i = 0; i < D; ++i) {
                    if (net.plan().degree(i) > net.plan().degree(j)) continue;
                    for (std::size_t o = 0; o < cfg.out_widths[i]; ++o)
                        EXPECT_EQ(y[net.out_offset(i) + o], base[net.out_offset(i) + o]);
                }
            }
    }
}

TEST(Made, ForwardColumnsMatchesFullForward) {
    ResMade net({{2, 3, 2}, {4, 5, 6}, 16, 2, 3, {}});
    Rng rng(11);
    net.init_glorot(rng);
    const auto X = random_matrix(5, net.in_width(), rng);
    ResMade::Cache c;
    const Tensor full = net.forward(X, c);
    Tensor part;
    ResMade::Cache c2;
    net.forward_columns(X, 4, 9, part, c2);
    ASSERT_EQ(part.cols(), 5u);
    for (std::size_t b = 0; b < 5; ++b)
        for (std::size_t o = 0; o < 5; ++o) EXPECT_NEAR(part(b, o), full(b, 4 + o), 1e-12);
}

// Serial reference kernels against their OpenMP counterparts.
// Thread count follows OMP_NUM_THREADS.

#include "lmkg/nn/kernels.hpp"
#include "lmkg/pattern.hpp"
#include "lmkg/rng.hpp"
#include "lmkg/sampler.hpp"
#include "lmkg/synth.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace lmkg;
namespace k = lmkg::nn::kernels;

namespace {

struct Buffers {
    std::size_t batch, in, out;
    std::vector<double> X, Wt, bias, dY, Y, dWt, dbias, dX;

    Buffers(std::size_t b, std::size_t i, std::size_t o)
        : batch(b), in(i), out(o), X(b * i), Wt(i * o), bias(o), dY(b * o), Y(b * o), dWt(i * o), dbias(o), dX(b * i) {
        Rng rng(1);
        for (auto *v : {&X, &Wt, &bias, &dY})
            for (auto &x : *v) x = 2 * uniform_unit(rng) - 1;
        // ReLU-like sparsity in the activations
        for (auto &x : X)
            if (x < 0) x = 0;
    }
};

void set_flops(benchmark::State &state, const Buffers &b) {
    state.counters["MAC/s"] = benchmark::Counter(static_cast<double>(state.iterations() * b.batch * b.in * b.out),
                                                 benchmark::Counter::kIsRate);
}

template <bool Parallel> void BM_LinearForward(benchmark::State &state) {
    Buffers b(state.range(0), state.range(1), state.range(2));
    for (auto _ : state) {
        if constexpr (Parallel)
            k::linear_forward(b.X.data(), b.batch, b.in, b.Wt.data(), b.bias.data(), b.out, b.Y.data());
        else
            k::serial::linear_forward(b.X.data(), b.batch, b.in, b.Wt.data(), b.bias.data(), b.out, b.Y.data());
        benchmark::DoNotOptimize(b.Y.data());
    }
    set_flops(state, b);
}

template <bool Parallel> void BM_LinearBackwardParams(benchmark::State &state) {
    Buffers b(state.range(0), state.range(1), state.range(2));
    for (auto _ : state) {
        if constexpr (Parallel)
            k::linear_backward_params(b.X.data(), b.batch, b.in, b.dY.data(), b.out, b.dWt.data(), b.dbias.data());
        else
            k::serial::linear_backward_params(b.X.data(), b.batch, b.in, b.dY.data(), b.out, b.dWt.data(),
                                              b.dbias.data());
        benchmark::DoNotOptimize(b.dWt.data());
    }
    set_flops(state, b);
}

template <bool Parallel> void BM_LinearBackwardInput(benchmark::State &state) {
    Buffers b(state.range(0), state.range(1), state.range(2));
    for (auto _ : state) {
        if constexpr (Parallel)
            k::linear_backward_input(b.dY.data(), b.batch, b.out, b.Wt.data(), b.in, b.dX.data());
        else
            k::serial::linear_backward_input(b.dY.data(), b.batch, b.out, b.Wt.data(), b.in, b.dX.data());
        benchmark::DoNotOptimize(b.dX.data());
    }
    set_flops(state, b);
}

void shapes(benchmark::internal::Benchmark *b) {
    b->Args({128, 128, 512})->Args({128, 512, 512})->Args({200, 224, 128})->Args({1, 512, 512});
}

BENCHMARK(BM_LinearForward<false>)->Apply(shapes);
BENCHMARK(BM_LinearForward<true>)->Apply(shapes);
BENCHMARK(BM_LinearBackwardParams<false>)->Apply(shapes);
BENCHMARK(BM_LinearBackwardParams<true>)->Apply(shapes);
BENCHMARK(BM_LinearBackwardInput<false>)->Apply(shapes);
BENCHMARK(BM_LinearBackwardInput<true>)->Apply(shapes);

// Exact labelling of a workload: one pattern at a time versus the batch call.
struct Workload {
    KnowledgeGraph kg;
    std::vector<QueryPattern> patterns;
    Workload() {
        UniversityKgConfig c;
        c.target_triples = 50'000;
        c.seed = 3;
        kg = generate_university_kg(c);
        Rng rng(4);
        for (auto shape : {Shape{Topology::star, 2}, Shape{Topology::chain, 3}}) {
            const InstanceSampler sampler(kg, shape);
            for (int i = 0; i < 500; ++i)
                patterns.push_back(mask_instance(kg, sampler.sample(SampleMode::uniform, rng), {}, rng).pattern);
        }
    }
};

const Workload &workload() {
    static const Workload w;
    return w;
}

void BM_CountSerial(benchmark::State &state) {
    const auto &w = workload();
    for (auto _ : state)
        for (const auto &qp : w.patterns) benchmark::DoNotOptimize(count_matches(w.kg, qp));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.patterns.size()));
}

void BM_CountBatch(benchmark::State &state) {
    const auto &w = workload();
    for (auto _ : state) benchmark::DoNotOptimize(count_matches_batch(w.kg, w.patterns));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.patterns.size()));
}

BENCHMARK(BM_CountSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountBatch)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();

#include "lmkg/error.hpp"
#include "lmkg/lmkg_s.hpp"
#include "lmkg/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lmkg;

namespace {

std::vector<DatasetRecord> small_workload(const KnowledgeGraph &kg, Topology topo, std::uint32_t k, std::size_t n,
                                          std::uint64_t seed) {
    SamplerConfig cfg;
    cfg.shape = {topo, k};
    cfg.count = n;
    cfg.seed = seed;
    return generate_training_set(kg, cfg);
}

TrainConfigS quick_config(std::uint32_t epochs = 30) {
    TrainConfigS cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 16;
    cfg.hidden = {32, 32};
    cfg.seed = 3;
    return cfg;
}

double q(double a, double b) {
    a = std::max(a, 1.0);
    b = std::max(b, 1.0);
    return std::max(a / b, b / a);
}

} // namespace

TEST(TrainConfigS, Validation) {
    auto cfg = quick_config();
    cfg.epochs = 0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = quick_config();
    cfg.hidden.clear();
    EXPECT_THROW(cfg.validate(), Error);
    cfg = quick_config();
    cfg.learning_rate = 0;
    EXPECT_THROW(cfg.validate(), Error);
    EXPECT_EQ(parse_encoding_kind("pattern-bound"), EncodingKind::pattern_bound);
    EXPECT_THROW(parse_encoding_kind("graph"), Error);
}

TEST(LmkgS, RejectsBadTrainingData) {
    const auto kg = generate_random_kg({40, 4, 200, 1.0, 1});
    const auto spec = EncodingSpec::for_graph(kg);
    EXPECT_THROW(train_s({}, EncodingKind::sg, spec, quick_config()), Error);
    auto data = small_workload(kg, Topology::star, 2, 20, 1);
    data[0].card = 0;
    EXPECT_THROW(train_s(data, EncodingKind::sg, spec, quick_config()), Error);

    auto mixed = small_workload(kg, Topology::star, 2, 20, 1);
    for (auto &r : small_workload(kg, Topology::chain, 2, 20, 1)) mixed.push_back(r);
    try {
        train_s(mixed, EncodingKind::pattern_bound, spec, quick_config());
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::unsupported_topology);
    }
    EXPECT_NO_THROW(train_s(mixed, EncodingKind::sg, spec, quick_config(2)));
}

TEST(LmkgS, LearnsAndEstimatesAreFloored) {
    const auto kg = generate_random_kg({60, 4, 400, 1.0, 2});
    const auto data = small_workload(kg, Topology::star, 2, 120, 2);
    const auto model = train_s(data, EncodingKind::sg, EncodingSpec::for_graph(kg), quick_config(60));
    ASSERT_EQ(model.loss_curve.size(), 60u);
    EXPECT_LT(model.loss_curve.back(), model.loss_curve.front());
    double mean_q = 0;
    for (const auto &r : data) {
        const auto est = estimate_s(model, r.pattern);
        EXPECT_GE(est.value, 1.0);
        EXPECT_FALSE(est.novel_term);
        mean_q += q(est.value, static_cast<double>(*r.card));
    }
    mean_q /= static_cast<double>(data.size());
    EXPECT_LT(mean_q, model.loss_curve.front());
}

TEST(LmkgS, PatternBoundSupportsSmallerShapes) {
    const auto kg = generate_random_kg({60, 4, 400, 1.0, 4});
    auto data = small_workload(kg, Topology::chain, 3, 60, 4);
    for (auto &r : small_workload(kg, Topology::chain, 1, 30, 4)) data.push_back(r);
    const auto model = train_s(data, EncodingKind::pattern_bound, EncodingSpec::for_graph(kg), quick_config(5));
    EXPECT_TRUE(model.supports({Topology::chain, 1}));
    EXPECT_TRUE(model.supports({Topology::chain, 3}));
    EXPECT_FALSE(model.supports({Topology::star, 2}));
    const auto star = QueryPattern::star(Slot::var(0), {{Slot::bound(1), Slot::var(1)}, {Slot::bound(2), Slot::var(2)}});
    try {
        estimate_s(model, star);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::no_route);
    }
}

TEST(LmkgS, NovelTermGivesFloor) {
    const auto kg = generate_random_kg({40, 4, 200, 1.0, 5});
    const auto data = small_workload(kg, Topology::star, 1, 40, 5);
    const auto model = train_s(data, EncodingKind::sg, EncodingSpec::for_graph(kg), quick_config(3));
    const auto qp = QueryPattern::star(Slot::var(0), {{Slot::bound(1), Slot::bound(10'000)}});
    const auto est = estimate_s(model, qp);
    EXPECT_TRUE(est.novel_term);
    EXPECT_EQ(est.value, 1.0);
}

TEST(LmkgS, TrainingIsDeterministic) {
    const auto kg = generate_random_kg({40, 4, 200, 1.0, 6});
    const auto data = small_workload(kg, Topology::chain, 2, 50, 6);
    const auto spec = EncodingSpec::for_graph(kg);
    const auto a = train_s(data, EncodingKind::sg, spec, quick_config(5));
    const auto b = train_s(data, EncodingKind::sg, spec, quick_config(5));
    EXPECT_EQ(a.loss_curve, b.loss_curve);
    for (std::size_t i = 0; i < a.net.layers().size(); ++i)
        EXPECT_EQ(a.net.layers()[i].weights(), b.net.layers()[i].weights());
}

TEST(LmkgS, PartLayersForLargeAdjacency) {
    const auto kg = generate_random_kg({40, 4, 200, 1.0, 7});
    const auto data = small_workload(kg, Topology::star, 2, 40, 7);
    auto cfg = quick_config(3);
    cfg.part_threshold = 10; // A for k = 2 has 3 * 3 * 2 = 18 entries
    cfg.part_width = 8;
    const auto model = train_s(data, EncodingKind::sg, EncodingSpec::for_graph(kg), cfg);
    ASSERT_TRUE(model.parts.enabled());
    EXPECT_EQ(model.parts.part_widths[0], 18u);
    EXPECT_EQ(model.net.widths().front(), 24u);
    EXPECT_GE(estimate_s(model, data[0].pattern).value, 1.0);
}

TEST(LmkgS, EqualLabelsAreReproduced) {
    const auto kg = generate_random_kg({40, 4, 200, 1.0, 8});
    auto data = small_workload(kg, Topology::star, 1, 10, 8);
    for (auto &r : data) r.card = 7;
    const auto model = train_s(data, EncodingKind::sg, EncodingSpec::for_graph(kg), quick_config(3));
    EXPECT_NEAR(estimate_s(model, data[0].pattern).value, 7.0, 1e-9);
}

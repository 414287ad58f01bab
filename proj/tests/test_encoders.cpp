#include "lmkg/encoders.hpp"
#include "lmkg/error.hpp"
#include "lmkg/synth.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <set>

using namespace lmkg;

namespace {
Slot B(std::uint32_t id) { return Slot::bound(id); }
Slot V(std::uint32_t i) { return Slot::var(i); }
} // namespace

TEST(TermEncoding, Examples) {
    EXPECT_EQ(onehot_encode(2, 3), (Bits{0, 1, 0}));
    EXPECT_EQ(onehot_encode(0, 3), (Bits{0, 0, 0}));
    EXPECT_EQ(binary_encode(2, 2), (Bits{1, 0}));
    EXPECT_EQ(binary_encode(5, 4), (Bits{0, 1, 0, 1}));
    EXPECT_EQ(binary_encode(0, 3), (Bits{0, 0, 0}));
    EXPECT_THROW(onehot_encode(4, 3), Error);
    EXPECT_THROW(binary_encode(4, 2), Error);
}

TEST(TermEncoding, BinaryWidth) {
    EXPECT_EQ(binary_width(0), 1u);
    EXPECT_EQ(binary_width(1), 1u);
    EXPECT_EQ(binary_width(2), 2u);
    EXPECT_EQ(binary_width(3), 2u);
    EXPECT_EQ(binary_width(4), 3u);
    EXPECT_EQ(binary_width(1000), 10u);
    EXPECT_EQ(binary_width(1023), 10u);
    EXPECT_EQ(binary_width(1024), 11u);
}

TEST(TermEncoding, BinaryIsInjective) {
    const auto w = binary_width(300);
    std::set<Bits> seen;
    for (std::uint32_t id = 0; id <= 300; ++id) seen.insert(binary_encode(id, w));
    EXPECT_EQ(seen.size(), 301u);
}

TEST(PatternBound, WidthAndRoundTrip) {
    for (auto mode : {TermMode::binary, TermMode::onehot}) {
        const auto spec = EncodingSpec::for_domains(20, 5, mode);
        for (auto topo : {Topology::star, Topology::chain}) {
            const Shape shape{topo, 3};
            const auto qp = topo == Topology::star
                                ? QueryPattern::star(V(0), {{B(1), B(20)}, {B(5), V(1)}, {V(2), B(3)}})
                                : QueryPattern::chain({B(7), V(0), V(2), B(9)}, {B(2), V(1), B(4)});
            const auto enc = encode_pattern_bound(qp, spec, shape);
            EXPECT_EQ(enc.bits.size(), pattern_bound_width(spec, shape));
            EXPECT_EQ(std::accumulate(enc.slot_widths.begin(), enc.slot_widths.end(), std::size_t{0}), enc.bits.size());
            EXPECT_EQ(decode_pattern_bound(enc, spec, shape), qp);
        }
    }
}

TEST(PatternBound, SmallerPatternsAreZeroPadded) {
    const auto spec = EncodingSpec::for_domains(10, 3);
    const auto small = QueryPattern::star(B(4), {{B(2), B(6)}});
    const auto enc = encode_pattern_bound(small, spec, {Topology::star, 3});
    const auto lone = encode_pattern_bound(small, spec, {Topology::star, 1});
    ASSERT_EQ(enc.bits.size(), lone.bits.size() + 2 * (spec.w_pred + spec.w_node));
    EXPECT_TRUE(std::equal(lone.bits.begin(), lone.bits.end(), enc.bits.begin()));
    EXPECT_TRUE(std::all_of(enc.bits.begin() + static_cast<std::ptrdiff_t>(lone.bits.size()), enc.bits.end(),
                            [](auto b) { return b == 0; }));
    EXPECT_THROW(encode_pattern_bound(QueryPattern::chain({B(1), B(2)}, {B(1)}), spec, {Topology::star, 3}), Error);
}

TEST(PatternBound, DecodeRejectsBadBits) {
    const auto spec = EncodingSpec::for_domains(3, 3, TermMode::onehot);
    FlatEncoding enc = encode_pattern_bound(QueryPattern::star(B(1), {{B(1), B(1)}}), spec, {Topology::star, 1});
    enc.bits[1] = 1; // two bits in the subject slot
    EXPECT_THROW(decode_pattern_bound(enc, spec, {Topology::star, 1}), Error);
    const auto bin = EncodingSpec::for_domains(5, 2);
    FlatEncoding big{Bits(pattern_bound_width(bin, {Topology::star, 1}), 1), {}};
    EXPECT_THROW(decode_pattern_bound(big, bin, {Topology::star, 1}), Error); // id 7 > 5
}

// The figure example: star with subject ?Book and two bound pairs.
TEST(SgEncoding, StarExample) {
    const auto spec = EncodingSpec::for_domains(6, 3);
    const auto qp = QueryPattern::star(V(0), {{B(1), B(4)}, {B(2), B(5)}});
    const auto sg = encode_sg(qp, spec, {3, 2});
    EXPECT_EQ(sg.A.size(), 18u);
    EXPECT_EQ(std::count(sg.A.begin(), sg.A.end(), 1), 2);
    EXPECT_EQ(sg.a(0, 1, 0), 1);
    EXPECT_EQ(sg.a(0, 2, 1), 1);
    const auto x0 = sg.x_row(0);
    EXPECT_TRUE(std::all_of(x0.begin(), x0.end(), [](auto b) { return b == 0; }));
    EXPECT_EQ(Bits(sg.x_row(1).begin(), sg.x_row(1).end()), binary_encode(4, spec.w_node));
    EXPECT_EQ(Bits(sg.e_row(1).begin(), sg.e_row(1).end()), binary_encode(2, spec.w_pred));
    EXPECT_EQ(sg.flatten().size(), sg_width(spec, {3, 2}));
}

TEST(SgEncoding, ChainEdgesAndPopcount) {
    const auto kg = generate_random_kg({30, 4, 150, 1.0, 3});
    const auto spec = EncodingSpec::for_graph(kg);
    Rng rng(6);
    for (auto topo : {Topology::star, Topology::chain})
        for (std::uint32_t k = 1; k <= 3; ++k)
            for (int i = 0; i < 20; ++i) {
                const auto qp = lmkg::testing::random_pattern(kg, {topo, k}, i % 4, rng);
                const auto sg = encode_sg(qp, spec, SgShape::for_max_k(3));
                EXPECT_EQ(static_cast<std::size_t>(std::count(sg.A.begin(), sg.A.end(), 1)), k);
                for (std::uint32_t l = 0; l < k; ++l) {
                    const std::uint32_t from = topo == Topology::star ? 0 : l;
                    EXPECT_EQ(sg.a(from, l + 1, l), 1);
                }
            }
}

TEST(SgEncoding, CapacityExceeded) {
    const auto spec = EncodingSpec::for_domains(6, 3);
    const auto qp = QueryPattern::chain({V(0), V(1), V(2), V(3)}, {B(1), B(2), B(3)});
    try {
        encode_sg(qp, spec, {3, 2});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::capacity_exceeded);
        EXPECT_NE(std::string(e.what()).find("n=4"), std::string::npos);
    }
}

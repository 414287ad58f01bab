#include "lmkg/binary_io.hpp"
#include "lmkg/error.hpp"
#include "lmkg/kg_store.hpp"

namespace lmkg {

namespace {

constexpr std::string_view kMagic{"LMKGKG\0", 7};
constexpr std::uint32_t kVersion = 1;

void write_dictionary(ByteWriter &w, const Dictionary &dict) {
    w.u64(dict.size());
    for (std::uint32_t id = 1; id <= dict.size(); ++id) {
        const auto &t = dict.term(id);
        w.u8(static_cast<std::uint8_t>(t.kind));
        w.str(t.lexical);
    }
}

Dictionary read_dictionary(ByteReader &r) {
    Dictionary dict;
    const auto n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto kind = r.u8();
        if (kind > 2) throw Error(ErrorCode::malformed_input, "bad term kind in snapshot");
        auto lexical = r.str();
        if (dict.intern(Term{static_cast<TermKind>(kind), std::move(lexical)}) != i + 1)
            throw Error(ErrorCode::malformed_input, "duplicate term in snapshot dictionary");
    }
    return dict;
}

} // namespace

std::vector<std::uint8_t> snapshot_bytes(const KnowledgeGraph &kg) {
    ByteWriter w;
    w.bytes(kMagic.data(), kMagic.size());
    w.u32(kVersion);
    write_dictionary(w, kg.nodes());
    write_dictionary(w, kg.preds());
    w.u64(kg.triple_count());
    for (const auto &t : kg.triples()) {
        w.u32(t.s);
        w.u32(t.p);
        w.u32(t.o);
    }
    w.crc_trailer();
    return std::move(w.buffer());
}

KnowledgeGraph snapshot_from_bytes(std::span<const std::uint8_t> bytes) {
    ByteReader header(bytes);
    header.expect_magic(kMagic);
    if (const auto v = header.u32(); v != kVersion)
        throw Error(ErrorCode::version_mismatch, "snapshot format version " + std::to_string(v) + ", expected " +
                                                     std::to_string(kVersion));
    ByteReader r(verify_crc_trailer(bytes));
    r.expect_magic(kMagic);
    r.u32();
    auto nodes = read_dictionary(r);
    auto preds = read_dictionary(r);
    const auto n = r.u64();
    if (n > r.remaining() / 12) throw Error(ErrorCode::truncated, "triple table past end of data");
    std::vector<Triple> triples(n);
    for (auto &t : triples) {
        t.s = r.u32();
        t.p = r.u32();
        t.o = r.u32();
    }
    return KnowledgeGraph(std::move(nodes), std::move(preds), std::move(triples));
}

void save_snapshot(const KnowledgeGraph &kg, const std::filesystem::path &path) { write_file(path, snapshot_bytes(kg)); }

KnowledgeGraph load_snapshot(const std::filesystem::path &path) { return snapshot_from_bytes(read_file(path)); }

} // namespace lmkg

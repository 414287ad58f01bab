#pragma once

#include "lmkg/pattern.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace lmkg {

using Bits = std::vector<std::uint8_t>;

enum class TermMode : std::uint8_t { onehot = 0, binary = 1 };

/// Term-encoding widths for a KG with d nodes and b predicates. The all-zero
/// codeword is reserved for unbound slots.
struct EncodingSpec {
    std::uint32_t d = 0;
    std::uint32_t b = 0;
    std::uint32_t w_node = 1;
    std::uint32_t w_pred = 1;
    TermMode term_mode = TermMode::binary;

    static EncodingSpec for_domains(std::uint32_t d, std::uint32_t b, TermMode mode = TermMode::binary);
    static EncodingSpec for_graph(const KnowledgeGraph &kg, TermMode mode = TermMode::binary);

    /// Width of one node / predicate slot under term_mode.
    std::uint32_t node_slot_width() const { return term_mode == TermMode::binary ? w_node : d; }
    std::uint32_t pred_slot_width() const { return term_mode == TermMode::binary ? w_pred : b; }

    bool operator==(const EncodingSpec &) const = default;
};

/// ceil(log2(n + 1)), at least 1.
std::uint32_t binary_width(std::uint64_t n);

/// Bit (id-1) set; id 0 gives all zeros. Throws for id > domain_size.
Bits onehot_encode(std::uint32_t id, std::uint32_t domain_size);
/// Most-significant bit first. Throws if id does not fit in width bits.
Bits binary_encode(std::uint32_t id, std::uint32_t width);

struct FlatEncoding {
    Bits bits;
    /// Width of each slot, in flat slot order.
    std::vector<std::uint32_t> slot_widths;
};

/// Width of the pattern-bound encoding: w_node + k (w_pred + w_node) for both
/// topologies (chain nodes shared between triples are encoded once).
std::size_t pattern_bound_width(const EncodingSpec &spec, Shape shape);

/// Concatenates slot encodings in flat slot order: n0 | p0 | n1 | ... | p(k-1) | nk.
FlatEncoding encode_pattern_bound(const QueryPattern &qp, const EncodingSpec &spec, Shape shape);
QueryPattern decode_pattern_bound(const FlatEncoding &enc, const EncodingSpec &spec, Shape shape);

struct SgShape {
    std::uint32_t n_max = 2;
    std::uint32_t e_max = 1;

    /// Smallest capacity holding every shape up to size k.
    static SgShape for_max_k(std::uint32_t k) { return {k + 1, k}; }
    bool operator==(const SgShape &) const = default;
};

/// SG = (A, X, E). A is indexed [subject pos][object pos][edge pos], zero-based.
struct SgEncoding {
    SgShape shape;
    std::uint32_t w_node = 1;
    std::uint32_t w_pred = 1;
    Bits A; // n_max * n_max * e_max
    Bits X; // n_max rows of w_node
    Bits E; // e_max rows of w_pred

    std::uint8_t a(std::uint32_t i, std::uint32_t j, std::uint32_t l) const {
        return A[(static_cast<std::size_t>(i) * shape.n_max + j) * shape.e_max + l];
    }
    std::span<const std::uint8_t> x_row(std::uint32_t i) const { return std::span(X).subspan(i * w_node, w_node); }
    std::span<const std::uint8_t> e_row(std::uint32_t l) const { return std::span(E).subspan(l * w_pred, w_pred); }

    /// A | X | E flattened into one feature vector.
    Bits flatten() const;
};

std::size_t sg_width(const EncodingSpec &spec, SgShape shape);

/// Throws Error(capacity_exceeded) naming the required n/e.
SgEncoding encode_sg(const QueryPattern &qp, const EncodingSpec &spec, SgShape shape);

} // namespace lmkg

#include "lmkg/encoders.hpp"

#include "lmkg/error.hpp"

#include <bit>

namespace lmkg {

std::uint32_t binary_width(std::uint64_t n) { return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::bit_width(n))); }

EncodingSpec EncodingSpec::for_domains(std::uint32_t d, std::uint32_t b, TermMode mode) {
    return {d, b, binary_width(d), binary_width(b), mode};
}

EncodingSpec EncodingSpec::for_graph(const KnowledgeGraph &kg, TermMode mode) {
    return for_domains(static_cast<std::uint32_t>(kg.node_count()), static_cast<std::uint32_t>(kg.pred_count()), mode);
}

Bits onehot_encode(std::uint32_t id, std::uint32_t domain_size) {
    if (id > domain_size)
        throw Error(ErrorCode::out_of_range,
                    "id " + std::to_string(id) + " exceeds one-hot domain " + std::to_string(domain_size));
    Bits bits(domain_size, 0);
    if (id != kUnbound) bits[id - 1] = 1;
    return bits;
}

Bits binary_encode(std::uint32_t id, std::uint32_t width) {
    if (width < 32 && (static_cast<std::uint64_t>(id) >> width) != 0)
        throw Error(ErrorCode::out_of_range, "id " + std::to_string(id) + " needs more than " + std::to_string(width) + " bits");
    Bits bits(width, 0);
    for (std::uint32_t i = 0; i < width; ++i) {
        const auto shift = width - 1 - i;
        bits[i] = shift < 32 ? static_cast<std::uint8_t>((id >> shift) & 1u) : 0;
    }
    return bits;
}

namespace {

void append_term(Bits &out, std::uint32_t id, bool is_pred, const EncodingSpec &spec) {
    const auto domain = is_pred ? spec.b : spec.d;
    if (id > domain)
        throw Error(ErrorCode::out_of_range, "id " + std::to_string(id) + " outside encoding domain " + std::to_string(domain));
    const Bits code = spec.term_mode == TermMode::binary ? binary_encode(id, is_pred ? spec.w_pred : spec.w_node)
                                                         : onehot_encode(id, domain);
    out.insert(out.end(), code.begin(), code.end());
}

std::uint32_t decode_term(std::span<const std::uint8_t> bits, bool is_pred, const EncodingSpec &spec) {
    const auto domain = is_pred ? spec.b : spec.d;
    std::uint64_t id = 0;
    if (spec.term_mode == TermMode::binary) {
        for (auto bit : bits) {
            if (bit > 1) throw Error(ErrorCode::malformed_input, "encoding bit is not 0/1");
            id = (id << 1) | bit;
        }
    } else {
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i] > 1) throw Error(ErrorCode::malformed_input, "encoding bit is not 0/1");
            if (bits[i] == 0) continue;
            if (id != 0) throw Error(ErrorCode::malformed_input, "one-hot slot has several bits set");
            id = i + 1;
        }
    }
    if (id > domain)
        throw Error(ErrorCode::out_of_range, "decoded id " + std::to_string(id) + " exceeds domain " + std::to_string(domain));
    return static_cast<std::uint32_t>(id);
}

void check_shape(const QueryPattern &qp, Shape shape) {
    if (qp.topology != shape.topology || qp.k() > shape.k)
        throw Error(ErrorCode::shape_mismatch, "pattern " + to_string(qp.shape()) + " does not fit " + to_string(shape));
}

} // namespace

std::size_t pattern_bound_width(const EncodingSpec &spec, Shape shape) {
    return spec.node_slot_width() + static_cast<std::size_t>(shape.k) * (spec.pred_slot_width() + spec.node_slot_width());
}

FlatEncoding encode_pattern_bound(const QueryPattern &qp, const EncodingSpec &spec, Shape shape) {
    check_shape(qp, shape);
    FlatEncoding enc;
    enc.bits.reserve(pattern_bound_width(spec, shape));
    const std::size_t slots = 2 * static_cast<std::size_t>(shape.k) + 1;
    for (std::size_t i = 0; i < slots; ++i) {
        const bool is_pred = QueryPattern::is_pred_slot(i);
        // slots beyond the pattern's own size are absent (zero padding)
        const std::uint32_t id = i < qp.slot_count() ? qp.slot(i).id() : kUnbound;
        append_term(enc.bits, id, is_pred, spec);
        enc.slot_widths.push_back(is_pred ? spec.pred_slot_width() : spec.node_slot_width());
    }
    return enc;
}

QueryPattern decode_pattern_bound(const FlatEncoding &enc, const EncodingSpec &spec, Shape shape) {
    if (enc.bits.size() != pattern_bound_width(spec, shape))
        throw Error(ErrorCode::shape_mismatch, "encoding width does not match layout");
    QueryPattern qp;
    qp.topology = shape.topology;
    std::size_t pos = 0;
    std::uint32_t next_var = 0;
    for (std::size_t i = 0; i < 2 * static_cast<std::size_t>(shape.k) + 1; ++i) {
        const bool is_pred = QueryPattern::is_pred_slot(i);
        const auto w = is_pred ? spec.pred_slot_width() : spec.node_slot_width();
        const auto id = decode_term(std::span(enc.bits).subspan(pos, w), is_pred, spec);
        pos += w;
        const Slot slot = id == kUnbound ? Slot::var(next_var++) : Slot::bound(id);
        (is_pred ? qp.preds : qp.nodes).push_back(slot);
    }
    return qp;
}

std::size_t sg_width(const EncodingSpec &spec, SgShape shape) {
    const std::size_t n = shape.n_max;
    const std::size_t e = shape.e_max;
    return n * n * e + n * spec.w_node + e * spec.w_pred;
}

Bits SgEncoding::flatten() const {
    Bits out;
    out.reserve(A.size() + X.size() + E.size());
    out.insert(out.end(), A.begin(), A.end());
    out.insert(out.end(), X.begin(), X.end());
    out.insert(out.end(), E.begin(), E.end());
    return out;
}

SgEncoding encode_sg(const QueryPattern &qp, const EncodingSpec &spec, SgShape shape) {
    if (shape.n_max < 2 || shape.e_max < 1) throw Error(ErrorCode::invalid_argument, "SG shape needs n >= 2 and e >= 1");
    const auto need_n = static_cast<std::uint32_t>(qp.nodes.size());
    const auto need_e = qp.k();
    if (need_n > shape.n_max || need_e > shape.e_max)
        throw Error(ErrorCode::capacity_exceeded, "pattern needs n=" + std::to_string(need_n) + ", e=" +
                                                      std::to_string(need_e) + " but SG shape is n=" +
                                                      std::to_string(shape.n_max) + ", e=" + std::to_string(shape.e_max));
    SgEncoding enc;
    enc.shape = shape;
    enc.w_node = spec.w_node;
    enc.w_pred = spec.w_pred;
    const std::size_t n = shape.n_max;
    const std::size_t e = shape.e_max;
    enc.A.assign(n * n * e, 0);
    enc.X.assign(n * spec.w_node, 0);
    enc.E.assign(e * spec.w_pred, 0);

    for (std::uint32_t l = 0; l < qp.k(); ++l) {
        const std::size_t i = qp.topology == Topology::star ? 0 : l;
        const std::size_t j = l + 1;
        enc.A[(i * n + j) * e + l] = 1;
    }
    for (std::size_t i = 0; i < qp.nodes.size(); ++i) {
        const auto id = qp.nodes[i].id();
        if (id > spec.d) throw Error(ErrorCode::out_of_range, "node id outside encoding domain");
        const auto code = binary_encode(id, spec.w_node);
        std::copy(code.begin(), code.end(), enc.X.begin() + static_cast<std::ptrdiff_t>(i * spec.w_node));
    }
    for (std::size_t l = 0; l < qp.preds.size(); ++l) {
        const auto id = qp.preds[l].id();
        if (id > spec.b) throw Error(ErrorCode::out_of_range, "predicate id outside encoding domain");
        const auto code = binary_encode(id, spec.w_pred);
        std::copy(code.begin(), code.end(), enc.E.begin() + static_cast<std::ptrdiff_t>(l * spec.w_pred));
    }
    return enc;
}

} // namespace lmkg

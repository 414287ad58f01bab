#include "lmkg/kg_store.hpp"

#include "lmkg/binary_io.hpp"
#include "lmkg/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <zlib.h>

namespace lmkg {

std::string Term::to_ntriples() const {
    switch (kind) {
    case TermKind::iri: return "<" + lexical + ">";
    case TermKind::blank: return "_:" + lexical;
    case TermKind::literal: return lexical;
    }
    return lexical;
}

std::uint32_t Dictionary::intern(const Term &term) {
    auto [it, inserted] = ids_.try_emplace(term, static_cast<std::uint32_t>(terms_.size() + 1));
    if (inserted) terms_.push_back(term);
    return it->second;
}

std::optional<std::uint32_t> Dictionary::find(const Term &term) const {
    auto it = ids_.find(term);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

const Term &Dictionary::term(std::uint32_t id) const {
    if (id == 0 || id > terms_.size())
        throw Error(ErrorCode::out_of_range, "id " + std::to_string(id) + " outside [1, " +
                                                 std::to_string(terms_.size()) + "]");
    return terms_[id - 1];
}

namespace {

// Builds a CSR index: offsets has n_keys + 2 entries so that key k's range is [offsets[k], offsets[k+1]).
template <class Entry, class KeyFn, class EntryFn>
void build_csr(std::span<const Triple> triples, std::size_t n_keys, KeyFn key, EntryFn make,
               std::vector<std::size_t> &offsets, std::vector<Entry> &entries) {
    offsets.assign(n_keys + 2, 0);
    for (const auto &t : triples) ++offsets[key(t) + 1];
    for (std::size_t k = 1; k < offsets.size(); ++k) offsets[k] += offsets[k - 1];
    entries.resize(triples.size());
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto &t : triples) entries[cursor[key(t)]++] = make(t);
    for (std::size_t k = 0; k + 1 < offsets.size(); ++k)
        std::sort(entries.begin() + static_cast<std::ptrdiff_t>(offsets[k]),
                  entries.begin() + static_cast<std::ptrdiff_t>(offsets[k + 1]));
}

} // namespace

KnowledgeGraph::KnowledgeGraph(Dictionary nodes, Dictionary preds, std::vector<Triple> triples)
    : nodes_(std::move(nodes)), preds_(std::move(preds)), triples_(std::move(triples)) {
    std::sort(triples_.begin(), triples_.end());
    triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());
    for (const auto &t : triples_) {
        if (t.s == 0 || t.s > nodes_.size() || t.o == 0 || t.o > nodes_.size() || t.p == 0 ||
            t.p > preds_.size())
            throw Error(ErrorCode::out_of_range, "triple id does not resolve in its dictionary");
    }
    const std::size_t d = nodes_.size();
    const std::size_t b = preds_.size();
    build_csr<OutEdge>(
        triples_, d, [](const Triple &t) { return t.s; }, [](const Triple &t) { return OutEdge{t.p, t.o}; },
        out_offsets_, out_);
    build_csr<InEdge>(
        triples_, d, [](const Triple &t) { return t.o; }, [](const Triple &t) { return InEdge{t.s, t.p}; },
        in_offsets_, in_);
    std::vector<std::size_t> pred_offsets_os;
    build_csr<NodePair>(
        triples_, b, [](const Triple &t) { return t.p; }, [](const Triple &t) { return NodePair{t.s, t.o}; },
        pred_offsets_, pred_so_);
    build_csr<NodePair>(
        triples_, b, [](const Triple &t) { return t.p; }, [](const Triple &t) { return NodePair{t.o, t.s}; },
        pred_offsets_os, pred_os_);
}

std::span<const OutEdge> KnowledgeGraph::out_edges(NodeId s) const {
    if (s == 0 || s > nodes_.size()) return {};
    return std::span(out_).subspan(out_offsets_[s], out_offsets_[s + 1] - out_offsets_[s]);
}

std::span<const InEdge> KnowledgeGraph::in_edges(NodeId o) const {
    if (o == 0 || o > nodes_.size()) return {};
    return std::span(in_).subspan(in_offsets_[o], in_offsets_[o + 1] - in_offsets_[o]);
}

std::span<const NodePair> KnowledgeGraph::pred_subject_object(PredId p) const {
    if (p == 0 || p > preds_.size()) return {};
    return std::span(pred_so_).subspan(pred_offsets_[p], pred_offsets_[p + 1] - pred_offsets_[p]);
}

std::span<const NodePair> KnowledgeGraph::pred_object_subject(PredId p) const {
    if (p == 0 || p > preds_.size()) return {};
    return std::span(pred_os_).subspan(pred_offsets_[p], pred_offsets_[p + 1] - pred_offsets_[p]);
}

std::span<const OutEdge> KnowledgeGraph::out_edges(NodeId s, PredId p) const {
    auto row = out_edges(s);
    auto lo = std::lower_bound(row.begin(), row.end(), OutEdge{p, 0});
    auto hi = std::lower_bound(lo, row.end(), OutEdge{p + 1, 0});
    return {lo, hi};
}

bool KnowledgeGraph::contains(NodeId s, PredId p, NodeId o) const {
    auto row = out_edges(s);
    return std::binary_search(row.begin(), row.end(), OutEdge{p, o});
}

// ---------------------------------------------------------------------------
// N-Triples ingestion

namespace {

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len;
        std::uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xe0) == 0xc0) {
            len = 2;
            cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            len = 3;
            cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > s.size()) return false;
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xc0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3f);
        }
        // reject overlong forms, surrogates and out-of-range code points
        static constexpr std::array<std::uint32_t, 5> min_cp{0, 0, 0x80, 0x800, 0x10000};
        if (cp < min_cp[len] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
        i += len;
    }
    return true;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

class LineParser {
  public:
    explicit LineParser(std::string_view line) : s_(line) {}

    void skip_ws() {
        while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
    }

    bool at_end() const { return pos_ >= s_.size(); }

    Term iri() {
        expect('<');
        const auto close = s_.find('>', pos_);
        if (close == std::string_view::npos) fail("unterminated IRI");
        const auto body = s_.substr(pos_, close - pos_);
        if (body.empty()) fail("empty IRI");
        for (char c : body)
            if (is_space(c) || c == '<' || c == '"') fail("illegal character in IRI");
        pos_ = close + 1;
        return Term::iri(std::string(body));
    }

    Term blank() {
        expect('_');
        expect(':');
        const auto start = pos_;
        while (pos_ < s_.size() && !is_space(s_[pos_]) && s_[pos_] != '<' && s_[pos_] != '"') ++pos_;
        // a label cannot end with '.', which is the statement terminator
        while (pos_ > start && s_[pos_ - 1] == '.') --pos_;
        if (pos_ == start) fail("empty blank node label");
        return Term::blank(std::string(s_.substr(start, pos_ - start)));
    }

    Term literal() {
        const auto start = pos_;
        expect('"');
        bool closed = false;
        while (pos_ < s_.size()) {
            const char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) fail("dangling escape in literal");
                ++pos_;
            } else if (c == '"') {
                closed = true;
                break;
            }
        }
        if (!closed) fail("unterminated literal");
        if (pos_ + 1 < s_.size() && s_[pos_] == '^' && s_[pos_ + 1] == '^') {
            pos_ += 2;
            iri();
        } else if (pos_ < s_.size() && s_[pos_] == '@') {
            ++pos_;
            const auto tag = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '-'))
                ++pos_;
            if (pos_ == tag) fail("empty language tag");
        }
        return Term::literal(std::string(s_.substr(start, pos_ - start)));
    }

    Term subject() {
        skip_ws();
        if (peek() == '<') return iri();
        if (peek() == '_') return blank();
        fail("expected IRI or blank node as subject");
    }

    Term predicate() {
        skip_ws();
        if (peek() != '<') fail("expected IRI as predicate");
        return iri();
    }

    Term object() {
        skip_ws();
        if (peek() == '<') return iri();
        if (peek() == '_') return blank();
        if (peek() == '"') return literal();
        fail("expected IRI, blank node or literal as object");
    }

    void terminator() {
        skip_ws();
        expect('.');
        skip_ws();
        if (!at_end() && s_[pos_] != '#') fail("trailing characters after '.'");
    }

  private:
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    [[noreturn]] void fail(const std::string &msg) { throw Error(ErrorCode::malformed_input, msg); }

    std::string_view s_;
    std::size_t pos_ = 0;
};

std::string inflate_gzip(std::span<const std::uint8_t> bytes) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error(ErrorCode::io, "zlib init failed");
    zs.next_in = const_cast<Bytef *>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    std::string out;
    std::array<char, 1 << 16> chunk;
    int rc;
    do {
        zs.next_out = reinterpret_cast<Bytef *>(chunk.data());
        zs.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw Error(ErrorCode::malformed_input, "corrupt gzip stream");
        }
        out.append(chunk.data(), chunk.size() - zs.avail_out);
        // concatenated gzip members
        if (rc == Z_STREAM_END && zs.avail_in > 0) inflateReset(&zs);
    } while (rc != Z_STREAM_END || zs.avail_in > 0);
    inflateEnd(&zs);
    return out;
}

} // namespace

IngestResult ingest_ntriples(std::string_view text, OnError on_error) {
    Dictionary nodes;
    Dictionary preds;
    std::vector<Triple> triples;
    IngestReport report;

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        ++report.lines_read;

        if (!valid_utf8(line)) throw Error(ErrorCode::invalid_encoding, "line " + std::to_string(line_no) + ": invalid UTF-8");

        LineParser parser(line);
        parser.skip_ws();
        if (parser.at_end() || line[line.find_first_not_of(" \t\r")] == '#') continue;

        Term s, p, o;
        try {
            s = parser.subject();
            p = parser.predicate();
            o = parser.object();
            parser.terminator();
        } catch (const Error &e) {
            if (on_error == OnError::fail) throw ParseError(line_no, e.what());
            ++report.malformed;
            continue;
        }
        triples.push_back({nodes.intern(s), preds.intern(p), nodes.intern(o)});
    }

    const auto parsed = triples.size();
    KnowledgeGraph kg(std::move(nodes), std::move(preds), std::move(triples));
    report.triples_kept = kg.triple_count();
    report.duplicates = parsed - kg.triple_count();
    return {std::move(kg), report};
}

IngestResult ingest_ntriples_file(const std::filesystem::path &path, OnError on_error) {
    const auto bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return ingest_ntriples(inflate_gzip(bytes), on_error);
    return ingest_ntriples(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()), on_error);
}

std::optional<std::uint32_t> term_to_id(const KnowledgeGraph &kg, const Term &term, IdSpace space) {
    return space == IdSpace::node ? kg.nodes().find(term) : kg.preds().find(term);
}

const Term &id_to_term(const KnowledgeGraph &kg, std::uint32_t id, IdSpace space) {
    return space == IdSpace::node ? kg.nodes().term(id) : kg.preds().term(id);
}

GraphStats graph_stats(const KnowledgeGraph &kg) {
    GraphStats st;
    st.triple_count = kg.triple_count();
    st.node_count = kg.node_count();
    st.pred_count = kg.pred_count();
    for (NodeId n = 1; n <= kg.node_count(); ++n) {
        st.max_out_degree = std::max(st.max_out_degree, kg.out_degree(n));
        st.max_in_degree = std::max(st.max_in_degree, kg.in_degree(n));
    }
    return st;
}

std::string to_ntriples(const KnowledgeGraph &kg) {
    std::string out;
    for (const auto &t : kg.triples()) {
        out += kg.nodes().term(t.s).to_ntriples();
        out += ' ';
        out += kg.preds().term(t.p).to_ntriples();
        out += ' ';
        out += kg.nodes().term(t.o).to_ntriples();
        out += " .\n";
    }
    return out;
}

} // namespace lmkg

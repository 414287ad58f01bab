#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lmkg {

/// Node and predicate ids are dense and 1-based; 0 means unbound/absent.
using NodeId = std::uint32_t;
using PredId = std::uint32_t;
inline constexpr std::uint32_t kUnbound = 0;

enum class TermKind : std::uint8_t { iri = 0, literal = 1, blank = 2 };

/// An RDF term. IRIs are stored without angle brackets, blank nodes without the
/// `_:` prefix, literals verbatim including quotes and any datatype/language suffix.
struct Term {
    TermKind kind = TermKind::iri;
    std::string lexical;

    static Term iri(std::string s) { return {TermKind::iri, std::move(s)}; }
    static Term literal(std::string s) { return {TermKind::literal, std::move(s)}; }
    static Term blank(std::string s) { return {TermKind::blank, std::move(s)}; }

    /// N-Triples surface form.
    std::string to_ntriples() const;

    bool operator==(const Term &) const = default;
};

struct TermHash {
    std::size_t operator()(const Term &t) const noexcept {
        return std::hash<std::string_view>{}(t.lexical) * 31 + static_cast<std::size_t>(t.kind);
    }
};

/// Bijection between terms and dense 1-based ids, in first-appearance order.
class Dictionary {
  public:
    std::uint32_t intern(const Term &term);
    std::optional<std::uint32_t> find(const Term &term) const;
    /// Throws Error(out_of_range) unless 1 <= id <= size().
    const Term &term(std::uint32_t id) const;
    std::size_t size() const noexcept { return terms_.size(); }

  private:
    std::vector<Term> terms_;
    std::unordered_map<Term, std::uint32_t, TermHash> ids_;
};

struct Triple {
    NodeId s = 0;
    PredId p = 0;
    NodeId o = 0;
    auto operator<=>(const Triple &) const = default;
};

struct OutEdge {
    PredId p;
    NodeId o;
    auto operator<=>(const OutEdge &) const = default;
};

struct InEdge {
    NodeId s;
    PredId p;
    auto operator<=>(const InEdge &) const = default;
};

/// (first, second) pair stored in per-predicate indexes: (s, o) or (o, s).
struct NodePair {
    NodeId first;
    NodeId second;
    auto operator<=>(const NodePair &) const = default;
};

/// Immutable dictionary-encoded triple set with adjacency indexes.
class KnowledgeGraph {
  public:
    KnowledgeGraph() : KnowledgeGraph(Dictionary{}, Dictionary{}, {}) {}
    /// Sorts and deduplicates `triples`; every id must resolve in its dictionary.
    KnowledgeGraph(Dictionary nodes, Dictionary preds, std::vector<Triple> triples);

    std::span<const Triple> triples() const noexcept { return triples_; }
    std::size_t triple_count() const noexcept { return triples_.size(); }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t pred_count() const noexcept { return preds_.size(); }

    const Dictionary &nodes() const noexcept { return nodes_; }
    const Dictionary &preds() const noexcept { return preds_; }

    /// Sorted by (p, o).
    std::span<const OutEdge> out_edges(NodeId s) const;
    /// Sorted by (s, p).
    std::span<const InEdge> in_edges(NodeId o) const;
    /// Edges of predicate p as (s, o), sorted.
    std::span<const NodePair> pred_subject_object(PredId p) const;
    /// Edges of predicate p as (o, s), sorted.
    std::span<const NodePair> pred_object_subject(PredId p) const;

    /// Out-edges of s restricted to predicate p, sorted by o.
    std::span<const OutEdge> out_edges(NodeId s, PredId p) const;

    std::size_t out_degree(NodeId s) const { return out_edges(s).size(); }
    std::size_t in_degree(NodeId o) const { return in_edges(o).size(); }
    bool contains(NodeId s, PredId p, NodeId o) const;

  private:
    Dictionary nodes_;
    Dictionary preds_;
    std::vector<Triple> triples_;
    std::vector<std::size_t> out_offsets_;
    std::vector<OutEdge> out_;
    std::vector<std::size_t> in_offsets_;
    std::vector<InEdge> in_;
    std::vector<std::size_t> pred_offsets_;
    std::vector<NodePair> pred_so_;
    std::vector<NodePair> pred_os_;
};

enum class OnError { fail, skip_and_count };

struct IngestReport {
    std::size_t lines_read = 0;
    std::size_t triples_kept = 0;
    std::size_t duplicates = 0;
    std::size_t malformed = 0;
};

struct IngestResult {
    KnowledgeGraph kg;
    IngestReport report;
};

/// Parses N-Triples text. Malformed lines throw ParseError under OnError::fail and
/// are counted otherwise; invalid UTF-8 always throws.
IngestResult ingest_ntriples(std::string_view text, OnError on_error = OnError::fail);

/// Reads a `.nt` file, transparently inflating gzip input (detected by magic bytes).
IngestResult ingest_ntriples_file(const std::filesystem::path &path, OnError on_error = OnError::fail);

enum class IdSpace { node, predicate };

/// Unknown terms yield std::nullopt.
std::optional<std::uint32_t> term_to_id(const KnowledgeGraph &kg, const Term &term, IdSpace space);
/// Throws Error(out_of_range) for ids outside [1, d] / [1, b].
const Term &id_to_term(const KnowledgeGraph &kg, std::uint32_t id, IdSpace space);

struct GraphStats {
    std::size_t triple_count = 0;
    std::size_t node_count = 0;
    std::size_t pred_count = 0;
    std::size_t max_out_degree = 0;
    std::size_t max_in_degree = 0;
    bool operator==(const GraphStats &) const = default;
};

GraphStats graph_stats(const KnowledgeGraph &kg);

/// Renders every triple back to N-Triples, in id order.
std::string to_ntriples(const KnowledgeGraph &kg);

/// Binary snapshot: "LMKGKG\0", u32 version, little-endian tables, CRC32 trailer.
void save_snapshot(const KnowledgeGraph &kg, const std::filesystem::path &path);
KnowledgeGraph load_snapshot(const std::filesystem::path &path);
std::vector<std::uint8_t> snapshot_bytes(const KnowledgeGraph &kg);
KnowledgeGraph snapshot_from_bytes(std::span<const std::uint8_t> bytes);

} // namespace lmkg

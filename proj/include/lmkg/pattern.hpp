#pragma once

#include "lmkg/kg_store.hpp"

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lmkg {

enum class Topology : std::uint8_t { star = 0, chain = 1 };

const char *to_string(Topology t);
Topology parse_topology(std::string_view s);

/// A (topology, k) pair: the unit models are specialised on.
struct Shape {
    Topology topology = Topology::star;
    std::uint32_t k = 1;
    auto operator<=>(const Shape &) const = default;
};

std::string to_string(Shape s);

/// A term slot: a bound node/predicate id, or a positional variable.
class Slot {
  public:
    static Slot bound(std::uint32_t id);
    static Slot var(std::uint32_t index) { return Slot(true, index); }

    bool is_var() const noexcept { return is_var_; }
    bool is_bound() const noexcept { return !is_var_; }
    /// Bound id; 0 (= kUnbound) for variables.
    std::uint32_t id() const noexcept { return is_var_ ? kUnbound : value_; }
    std::uint32_t var_index() const noexcept { return value_; }

    bool operator==(const Slot &) const = default;

  private:
    Slot(bool is_var, std::uint32_t v) : is_var_(is_var), value_(v) {}
    bool is_var_;
    std::uint32_t value_;
};

/// Star or chain basic graph pattern.
///
/// Both topologies share one layout: `nodes` and `preds` with
/// `preds.size() == k` and `nodes.size() == k + 1`. Triple i is
///   star:  (nodes[0], preds[i], nodes[i + 1])
///   chain: (nodes[i], preds[i], nodes[i + 1])
/// so nodes are in SG node order and preds in SG edge order. The flat slot
/// order is nodes[0], preds[0], nodes[1], ..., preds[k-1], nodes[k].
struct QueryPattern {
    Topology topology = Topology::star;
    std::vector<Slot> nodes;
    std::vector<Slot> preds;

    std::uint32_t k() const noexcept { return static_cast<std::uint32_t>(preds.size()); }
    Shape shape() const noexcept { return {topology, k()}; }
    std::size_t slot_count() const noexcept { return nodes.size() + preds.size(); }
    /// Flat slot i: even positions are nodes, odd positions predicates.
    const Slot &slot(std::size_t i) const { return i % 2 == 0 ? nodes[i / 2] : preds[i / 2]; }
    Slot &slot(std::size_t i) { return i % 2 == 0 ? nodes[i / 2] : preds[i / 2]; }
    static bool is_pred_slot(std::size_t i) noexcept { return i % 2 == 1; }

    std::size_t var_count() const;
    struct TripleSlots {
        Slot s, p, o;
    };
    TripleSlots triple(std::size_t i) const {
        return {topology == Topology::star ? nodes[0] : nodes[i], preds[i], nodes[i + 1]};
    }

    bool operator==(const QueryPattern &) const = default;

    static QueryPattern star(Slot subject, std::vector<std::pair<Slot, Slot>> pairs);
    static QueryPattern chain(std::vector<Slot> nodes, std::vector<Slot> preds);
    /// Fully unbound pattern of the given shape.
    static QueryPattern unbound(Shape shape);
};

/// Checks the structural invariants (sizes, k >= 1, distinct variables).
void validate(const QueryPattern &qp);

/// Parses `?x <p> <o> . ?x <q> "lit" .` style text; bound terms resolve against kg.
QueryPattern parse_query_text(std::string_view text, const KnowledgeGraph &kg);

/// Star: sorts pairs (variables before bound ids), drops duplicate fully-bound
/// pairs. Variables are renumbered by first appearance in flat slot order.
QueryPattern canonicalize_pattern(const QueryPattern &qp);

bool is_canonical(const QueryPattern &qp);

/// Stable textual key of a canonical pattern, e.g. "star|2|?,3,7,3,?".
std::string canonical_key(const QueryPattern &qp);

/// Homomorphism count: number of variable assignments embedding qp in kg.
std::uint64_t count_matches(const KnowledgeGraph &kg, const QueryPattern &qp);

/// count_matches for a batch; OpenMP-parallel over patterns.
std::vector<std::uint64_t> count_matches_batch(const KnowledgeGraph &kg, std::span<const QueryPattern> patterns);

/// Number of canonical bound instances: star Σ_s C(outdeg(s), k); chain: k-edge walks.
std::uint64_t population_size(const KnowledgeGraph &kg, Shape shape);

/// JSON form: {"topology", "k", "slots": [{"role", "bound": term|null}]} in flat slot order.
nlohmann::json pattern_to_json(const QueryPattern &qp, const KnowledgeGraph &kg);
QueryPattern pattern_from_json(const nlohmann::json &j, const KnowledgeGraph &kg);

/// Human-readable query text that parse_query_text accepts.
std::string pattern_to_text(const QueryPattern &qp, const KnowledgeGraph &kg);

} // namespace lmkg

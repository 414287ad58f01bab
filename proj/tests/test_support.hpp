#pragma once

// Helpers shared by the unit tests and the acceptance suite: small KG
// builders and a naive nested-loop match counter used as the oracle.

#include "lmkg/pattern.hpp"
#include "lmkg/rng.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lmkg::testing {

/// KG over nodes n1..n<nodes> and predicates p1..p<preds> whose ids equal the
/// numbers in their names.
inline KnowledgeGraph numbered_kg(std::size_t nodes, std::size_t preds, std::vector<Triple> triples) {
    Dictionary nd, pd;
    for (std::size_t i = 1; i <= nodes; ++i) nd.intern(Term::iri("http://example.org/n" + std::to_string(i)));
    for (std::size_t i = 1; i <= preds; ++i) pd.intern(Term::iri("http://example.org/p" + std::to_string(i)));
    return KnowledgeGraph(std::move(nd), std::move(pd), std::move(triples));
}

/// {(1,1,2), (1,1,3), (4,1,2), (2,2,5)}
inline KnowledgeGraph small_kg() { return numbered_kg(5, 2, {{1, 1, 2}, {1, 1, 3}, {4, 1, 2}, {2, 2, 5}}); }

/// Counts tuples of KG triples (one per pattern triple) that agree with every
/// bound slot and bind each variable slot consistently. Knows nothing about the
/// KG indexes.
inline std::uint64_t naive_count(const KnowledgeGraph &kg, const QueryPattern &qp) {
    const auto triples = kg.triples();
    const std::size_t k = qp.k();
    std::vector<std::optional<std::uint32_t>> value(qp.slot_count());
    for (std::size_t i = 0; i < qp.slot_count(); ++i)
        if (qp.slot(i).is_bound()) value[i] = qp.slot(i).id();

    auto slots_of = [&](std::size_t t) -> std::array<std::size_t, 3> {
        const std::size_t s = qp.topology == Topology::star ? 0 : 2 * t;
        return {s, 2 * t + 1, 2 * t + 2};
    };

    std::uint64_t count = 0;
    auto rec = [&](auto &self, std::size_t t) -> void {
        if (t == k) {
            ++count;
            return;
        }
        const auto slots = slots_of(t);
        for (const auto &tr : triples) {
            const std::uint32_t vals[3] = {tr.s, tr.p, tr.o};
            std::array<bool, 3> assigned{};
            bool ok = true;
            for (int j = 0; j < 3 && ok; ++j) {
                auto &v = value[slots[j]];
                if (v) {
                    ok = *v == vals[j];
                } else {
                    v = vals[j];
                    assigned[j] = true;
                }
            }
            if (ok) self(self, t + 1);
            for (int j = 0; j < 3; ++j)
                if (assigned[j]) value[slots[j]].reset();
        }
    };
    rec(rec, 0);
    return count;
}

/// Random pattern of the given shape: an instance drawn from the KG's triples
/// (a walk or a subject's edges) with `unbound` random slots turned into
/// variables. Falls back to random ids when the KG has no such instance.
inline QueryPattern random_pattern(const KnowledgeGraph &kg, Shape shape, std::size_t unbound, Rng &rng) {
    QueryPattern qp;
    qp.topology = shape.topology;
    const auto triples = kg.triples();
    auto random_node = [&] { return static_cast<NodeId>(1 + uniform_below(rng, kg.node_count())); };
    auto random_pred = [&] { return static_cast<PredId>(1 + uniform_below(rng, kg.pred_count())); };
    if (shape.topology == Topology::star) {
        const auto &first = triples[uniform_below(rng, triples.size())];
        qp.nodes.push_back(Slot::bound(first.s));
        const auto row = kg.out_edges(first.s);
        for (std::uint32_t i = 0; i < shape.k; ++i) {
            const auto &e = row[uniform_below(rng, row.size())];
            qp.preds.push_back(Slot::bound(e.p));
            qp.nodes.push_back(Slot::bound(e.o));
        }
    } else {
        NodeId at = triples[uniform_below(rng, triples.size())].s;
        qp.nodes.push_back(Slot::bound(at));
        for (std::uint32_t i = 0; i < shape.k; ++i) {
            const auto row = kg.out_edges(at);
            if (row.empty()) {
                qp.preds.push_back(Slot::bound(random_pred()));
                at = random_node();
            } else {
                const auto &e = row[uniform_below(rng, row.size())];
                qp.preds.push_back(Slot::bound(e.p));
                at = e.o;
            }
            qp.nodes.push_back(Slot::bound(at));
        }
    }
    std::vector<std::size_t> idx(qp.slot_count());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_below(rng, i)]);
    std::vector<bool> unbind(qp.slot_count(), false);
    for (std::size_t i = 0; i < std::min(unbound, idx.size()); ++i) unbind[idx[i]] = true;
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < qp.slot_count(); ++i)
        if (unbind[i]) qp.slot(i) = Slot::var(v++);
    return qp;
}

} // namespace lmkg::testing

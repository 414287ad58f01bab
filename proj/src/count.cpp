#include "lmkg/error.hpp"
#include "lmkg/pattern.hpp"

#include <algorithm>
#include <exception>
#include <mutex>

namespace lmkg {

namespace {

using Wide = unsigned __int128;

std::uint64_t narrow(Wide v) {
    if (v > UINT64_MAX) throw Error(ErrorCode::overflow, "count exceeds 64-bit range");
    return static_cast<std::uint64_t>(v);
}

// Matches of one (pred, obj) pair for a fixed subject.
std::uint64_t pair_matches(const KnowledgeGraph &kg, NodeId s, const Slot &p, const Slot &o) {
    if (p.is_bound()) {
        auto row = kg.out_edges(s, p.id());
        if (o.is_var()) return row.size();
        return std::binary_search(row.begin(), row.end(), OutEdge{p.id(), o.id()}) ? 1 : 0;
    }
    auto row = kg.out_edges(s);
    if (o.is_var()) return row.size();
    return static_cast<std::uint64_t>(std::count_if(row.begin(), row.end(), [&](const OutEdge &e) { return e.o == o.id(); }));
}

std::uint64_t count_star(const KnowledgeGraph &kg, const QueryPattern &qp) {
    auto product_for = [&](NodeId s) -> Wide {
        Wide prod = 1;
        for (std::size_t i = 0; i < qp.k(); ++i) {
            const auto m = pair_matches(kg, s, qp.preds[i], qp.nodes[i + 1]);
            if (m == 0) return 0;
            prod *= m;
            if (prod > UINT64_MAX) throw Error(ErrorCode::overflow, "count exceeds 64-bit range");
        }
        return prod;
    };

    const Slot &subject = qp.nodes[0];
    if (subject.is_bound()) return narrow(product_for(subject.id()));

    // Candidate subjects from the most selective pair.
    std::vector<NodeId> candidates;
    bool restricted = false;
    for (std::size_t i = 0; i < qp.k() && !restricted; ++i) {
        const Slot &p = qp.preds[i];
        const Slot &o = qp.nodes[i + 1];
        if (p.is_bound() && o.is_bound()) {
            auto rows = kg.pred_object_subject(p.id());
            auto lo = std::lower_bound(rows.begin(), rows.end(), NodePair{o.id(), 0});
            for (auto it = lo; it != rows.end() && it->first == o.id(); ++it) candidates.push_back(it->second);
            restricted = true;
        }
    }
    for (std::size_t i = 0; i < qp.k() && !restricted; ++i) {
        const Slot &p = qp.preds[i];
        if (p.is_bound()) {
            for (const auto &e : kg.pred_subject_object(p.id()))
                if (candidates.empty() || candidates.back() != e.first) candidates.push_back(e.first);
            restricted = true;
        }
    }
    for (std::size_t i = 0; i < qp.k() && !restricted; ++i) {
        const Slot &o = qp.nodes[i + 1];
        if (o.is_bound()) {
            for (const auto &e : kg.in_edges(o.id()))
                if (candidates.empty() || candidates.back() != e.s) candidates.push_back(e.s);
            restricted = true;
        }
    }

    Wide total = 0;
    if (restricted) {
        for (NodeId s : candidates) total += product_for(s);
    } else {
        for (NodeId s = 1; s <= kg.node_count(); ++s) total += product_for(s);
    }
    return narrow(total);
}

// Walk-count propagation along the chain using a dense accumulator.
class Frontier {
  public:
    explicit Frontier(std::size_t d) : acc_(d + 1, 0) {}

    void add(NodeId n, Wide c) {
        if (acc_[n] == 0) touched_.push_back(n);
        acc_[n] += c;
        if (acc_[n] > UINT64_MAX) throw Error(ErrorCode::overflow, "count exceeds 64-bit range");
    }

    std::vector<std::pair<NodeId, std::uint64_t>> drain() {
        std::vector<std::pair<NodeId, std::uint64_t>> out;
        out.reserve(touched_.size());
        for (NodeId n : touched_) {
            out.emplace_back(n, static_cast<std::uint64_t>(acc_[n]));
            acc_[n] = 0;
        }
        touched_.clear();
        return out;
    }

  private:
    std::vector<Wide> acc_;
    std::vector<NodeId> touched_;
};

std::uint64_t count_chain(const KnowledgeGraph &kg, const QueryPattern &qp) {
    const std::size_t k = qp.k();
    const bool backward = qp.nodes[0].is_var() && qp.nodes[k].is_bound();
    Frontier next(kg.node_count());
    std::vector<std::pair<NodeId, std::uint64_t>> frontier;

    const Slot &start = backward ? qp.nodes[k] : qp.nodes[0];
    if (start.is_bound()) {
        frontier.emplace_back(start.id(), 1);
    } else {
        frontier.reserve(kg.node_count());
        for (NodeId n = 1; n <= kg.node_count(); ++n) frontier.emplace_back(n, 1);
    }

    for (std::size_t step = 0; step < k && !frontier.empty(); ++step) {
        const std::size_t edge = backward ? k - 1 - step : step;
        const Slot &p = qp.preds[edge];
        const Slot &target = backward ? qp.nodes[edge] : qp.nodes[edge + 1];
        for (const auto &[n, c] : frontier) {
            if (!backward) {
                auto row = p.is_bound() ? kg.out_edges(n, p.id()) : kg.out_edges(n);
                for (const auto &e : row)
                    if (target.is_var() || e.o == target.id()) next.add(e.o, c);
            } else if (p.is_bound()) {
                auto rows = kg.pred_object_subject(p.id());
                auto lo = std::lower_bound(rows.begin(), rows.end(), NodePair{n, 0});
                for (auto it = lo; it != rows.end() && it->first == n; ++it)
                    if (target.is_var() || it->second == target.id()) next.add(it->second, c);
            } else {
                for (const auto &e : kg.in_edges(n))
                    if (target.is_var() || e.s == target.id()) next.add(e.s, c);
            }
        }
        frontier = next.drain();
    }

    Wide total = 0;
    for (const auto &[n, c] : frontier) total += c;
    return narrow(total);
}

Wide binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    Wide r = 1;
    for (std::uint64_t i = 0; i < k; ++i) {
        r = r * (n - i) / (i + 1);
        if (r > UINT64_MAX) throw Error(ErrorCode::overflow, "population exceeds 64-bit range");
    }
    return r;
}

} // namespace

std::uint64_t count_matches(const KnowledgeGraph &kg, const QueryPattern &qp) {
    validate(qp);
    return qp.topology == Topology::star ? count_star(kg, qp) : count_chain(kg, qp);
}

std::vector<std::uint64_t> count_matches_batch(const KnowledgeGraph &kg, std::span<const QueryPattern> patterns) {
    std::vector<std::uint64_t> out(patterns.size());
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto n = static_cast<std::ptrdiff_t>(patterns.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = count_matches(kg, patterns[static_cast<std::size_t>(i)]);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::uint64_t population_size(const KnowledgeGraph &kg, Shape shape) {
    if (shape.k < 1) throw Error(ErrorCode::invalid_argument, "population_size needs k >= 1");
    if (shape.topology == Topology::chain) return count_matches(kg, QueryPattern::unbound(shape));
    Wide total = 0;
    for (NodeId s = 1; s <= kg.node_count(); ++s) {
        total += binomial(kg.out_degree(s), shape.k);
        if (total > UINT64_MAX) throw Error(ErrorCode::overflow, "population exceeds 64-bit range");
    }
    return static_cast<std::uint64_t>(total);
}

} // namespace lmkg

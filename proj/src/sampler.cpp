#include "lmkg/sampler.hpp"

#include "lmkg/error.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <numeric>
#include <unordered_set>

namespace lmkg {

const char *to_string(SampleMode m) {
    switch (m) {
    case SampleMode::enumerate: return "enumerate";
    case SampleMode::uniform: return "uniform";
    case SampleMode::random_walk: return "random-walk";
    }
    return "?";
}

SampleMode parse_sample_mode(std::string_view s) {
    if (s == "enumerate") return SampleMode::enumerate;
    if (s == "uniform") return SampleMode::uniform;
    if (s == "random-walk" || s == "random_walk") return SampleMode::random_walk;
    throw Error(ErrorCode::invalid_argument, "unknown sampling mode '" + std::string(s) + "'");
}

void SamplerConfig::validate() const {
    if (shape.k < 1) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
    if (count < 1) throw Error(ErrorCode::invalid_argument, "count must be >= 1");
    if (!(mask.unbind_prob >= 0.0 && mask.unbind_prob <= 1.0))
        throw Error(ErrorCode::invalid_argument, "mask probability must lie in [0, 1]");
    if (supervised && mask.min_unbound < 1)
        throw Error(ErrorCode::invalid_argument, "supervised data needs min_unbound >= 1");
    if (workers < 1) throw Error(ErrorCode::invalid_argument, "workers must be >= 1");
}

namespace {

using Wide = unsigned __int128;

QueryPattern star_instance(NodeId s, std::span<const OutEdge> row, std::span<const std::size_t> picks) {
    std::vector<std::pair<Slot, Slot>> pairs;
    pairs.reserve(picks.size());
    for (auto i : picks) pairs.emplace_back(Slot::bound(row[i].p), Slot::bound(row[i].o));
    return QueryPattern::star(Slot::bound(s), std::move(pairs));
}

std::size_t pick_cumulative(std::span<const std::uint64_t> cumulative, std::uint64_t r) {
    return static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
}

} // namespace

std::vector<QueryPattern> enumerate_instances(const KnowledgeGraph &kg, Shape shape, std::uint64_t limit) {
    const auto population = population_size(kg, shape);
    if (population > limit)
        throw Error(ErrorCode::population_exceeds_limit,
                    "population of " + to_string(shape) + " is " + std::to_string(population) + " (limit " +
                        std::to_string(limit) + ")");
    std::vector<QueryPattern> out;
    out.reserve(population);
    const std::size_t k = shape.k;

    if (shape.topology == Topology::star) {
        std::vector<std::size_t> idx(k);
        for (NodeId s = 1; s <= kg.node_count(); ++s) {
            const auto row = kg.out_edges(s);
            const std::size_t n = row.size();
            if (n < k) continue;
            // lexicographic k-combinations of the (sorted) row
            std::iota(idx.begin(), idx.end(), 0);
            while (true) {
                out.push_back(star_instance(s, row, idx));
                std::size_t i = k;
                while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
                if (i == 0) break;
                ++idx[i - 1];
                for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
            }
        }
        return out;
    }

    std::vector<Slot> nodes;
    std::vector<Slot> preds;
    auto dfs = [&](auto &&self, NodeId n) -> void {
        if (preds.size() == k) {
            out.push_back(QueryPattern::chain(nodes, preds));
            return;
        }
        for (const auto &e : kg.out_edges(n)) {
            preds.push_back(Slot::bound(e.p));
            nodes.push_back(Slot::bound(e.o));
            self(self, e.o);
            preds.pop_back();
            nodes.pop_back();
        }
    };
    for (NodeId n = 1; n <= kg.node_count(); ++n) {
        nodes.assign(1, Slot::bound(n));
        preds.clear();
        dfs(dfs, n);
    }
    return out;
}

// ---------------------------------------------------------------------------

InstanceSampler::InstanceSampler(const KnowledgeGraph &kg, Shape shape) : kg_(&kg), shape_(shape) {
    if (shape.k < 1) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
    const std::size_t d = kg.node_count();
    for (NodeId n = 1; n <= d; ++n)
        if (kg.out_degree(n) > 0) subjects_.push_back(n);

    auto push_weight = [&](NodeId n, Wide w, Wide &total) {
        if (w == 0) return;
        total += w;
        if (total > UINT64_MAX) {
            exact_weights_ = false;
            return;
        }
        weighted_nodes_.push_back(n);
        cumulative_.push_back(static_cast<std::uint64_t>(total));
    };

    Wide total = 0;
    if (shape.topology == Topology::star) {
        for (NodeId n : subjects_) {
            const std::uint64_t deg = kg.out_degree(n);
            if (deg < shape.k) continue;
            Wide w = 1;
            for (std::uint64_t i = 0; i < shape.k && exact_weights_; ++i) {
                w = w * (deg - i) / (i + 1);
                if (w > UINT64_MAX) exact_weights_ = false;
            }
            push_weight(n, w, total);
            if (!exact_weights_) break;
        }
    } else {
        walks_.assign(shape.k + 1, std::vector<std::uint64_t>(d + 1, 0));
        std::fill(walks_[0].begin() + 1, walks_[0].end(), 1);
        for (std::size_t j = 1; j <= shape.k; ++j) {
            for (NodeId n = 1; n <= d; ++n) {
                Wide w = 0;
                for (const auto &e : kg.out_edges(n)) w += walks_[j - 1][e.o];
                // saturate: the table still answers "is there a walk"
                walks_[j][n] = w > UINT64_MAX ? UINT64_MAX : static_cast<std::uint64_t>(w);
                if (w > UINT64_MAX) exact_weights_ = false;
            }
        }
        for (NodeId n = 1; n <= d && exact_weights_; ++n) push_weight(n, walks_[shape.k][n], total);
        if (!exact_weights_) {
            has_instances_ = std::any_of(walks_[shape.k].begin(), walks_[shape.k].end(), [](auto w) { return w > 0; });
            return;
        }
    }
    has_instances_ = total > 0 || !exact_weights_;
}

QueryPattern InstanceSampler::sample(SampleMode mode, Rng &rng) const {
    if (!has_instances_)
        throw Error(ErrorCode::no_instance, "knowledge graph has no " + to_string(shape_) + " instance");
    switch (mode) {
    case SampleMode::uniform:
    case SampleMode::enumerate:
        if (!exact_weights_)
            throw Error(ErrorCode::overflow, "instance weights overflow 64 bits; use random-walk sampling");
        return shape_.topology == Topology::star ? uniform_star(rng) : uniform_chain(rng);
    case SampleMode::random_walk:
        return shape_.topology == Topology::star ? walk_star(rng) : walk_chain(rng);
    }
    throw Error(ErrorCode::invalid_argument, "bad sampling mode");
}

QueryPattern InstanceSampler::uniform_star(Rng &rng) const {
    const auto r = uniform_below(rng, cumulative_.back());
    const NodeId s = weighted_nodes_[pick_cumulative(cumulative_, r)];
    const auto row = kg_->out_edges(s);
    // Floyd's algorithm: uniform k-subset of row indices
    std::vector<std::size_t> picks;
    const std::size_t n = row.size();
    for (std::size_t j = n - shape_.k; j < n; ++j) {
        const auto t = static_cast<std::size_t>(uniform_below(rng, j + 1));
        if (std::find(picks.begin(), picks.end(), t) == picks.end())
            picks.push_back(t);
        else
            picks.push_back(j);
    }
    std::sort(picks.begin(), picks.end());
    return star_instance(s, row, picks);
}

QueryPattern InstanceSampler::uniform_chain(Rng &rng) const {
    const auto r = uniform_below(rng, cumulative_.back());
    NodeId n = weighted_nodes_[pick_cumulative(cumulative_, r)];
    std::vector<Slot> nodes{Slot::bound(n)};
    std::vector<Slot> preds;
    for (std::size_t remaining = shape_.k; remaining > 0; --remaining) {
        const auto &next_walks = walks_[remaining - 1];
        const auto row = kg_->out_edges(n);
        std::uint64_t total = 0;
        for (const auto &e : row) total += next_walks[e.o];
        auto pick = uniform_below(rng, total);
        for (const auto &e : row) {
            if (pick < next_walks[e.o]) {
                preds.push_back(Slot::bound(e.p));
                nodes.push_back(Slot::bound(e.o));
                n = e.o;
                break;
            }
            pick -= next_walks[e.o];
        }
    }
    return QueryPattern::chain(std::move(nodes), std::move(preds));
}

QueryPattern InstanceSampler::walk_star(Rng &rng) const {
    for (unsigned attempt = 0; attempt < kRetryBudget; ++attempt) {
        const NodeId s = subjects_[uniform_below(rng, subjects_.size())];
        const auto row = kg_->out_edges(s);
        if (row.size() < shape_.k) continue;
        // k uniform steps from s; a repeated edge is drawn again
        std::vector<std::size_t> picks;
        while (picks.size() < shape_.k) {
            const auto t = static_cast<std::size_t>(uniform_below(rng, row.size()));
            if (std::find(picks.begin(), picks.end(), t) == picks.end()) picks.push_back(t);
        }
        std::sort(picks.begin(), picks.end());
        return star_instance(s, row, picks);
    }
    throw Error(ErrorCode::retry_budget_exhausted,
                "random walk found no subject with " + std::to_string(shape_.k) + " distinct out-edges in " +
                    std::to_string(kRetryBudget) + " attempts");
}

QueryPattern InstanceSampler::walk_chain(Rng &rng) const {
    for (unsigned attempt = 0; attempt < kRetryBudget; ++attempt) {
        NodeId n = subjects_[uniform_below(rng, subjects_.size())];
        std::vector<Slot> nodes{Slot::bound(n)};
        std::vector<Slot> preds;
        while (preds.size() < shape_.k) {
            const auto row = kg_->out_edges(n);
            if (row.empty()) break; // dead end: restart
            const auto &e = row[uniform_below(rng, row.size())];
            preds.push_back(Slot::bound(e.p));
            nodes.push_back(Slot::bound(e.o));
            n = e.o;
        }
        if (preds.size() == shape_.k) return QueryPattern::chain(std::move(nodes), std::move(preds));
    }
    throw Error(ErrorCode::retry_budget_exhausted,
                "random walk hit dead ends " + std::to_string(kRetryBudget) + " times");
}

QueryPattern sample_instance(const KnowledgeGraph &kg, Shape shape, SampleMode mode, Rng &rng) {
    return InstanceSampler(kg, shape).sample(mode, rng);
}

// ---------------------------------------------------------------------------

namespace {

QueryPattern mask_pattern(const QueryPattern &instance, const MaskPolicy &policy, Rng &rng) {
    std::vector<std::size_t> maskable;
    for (std::size_t i = 0; i < instance.slot_count(); ++i)
        if (!QueryPattern::is_pred_slot(i) || policy.allow_unbound_predicates) maskable.push_back(i);

    std::vector<bool> unbind(instance.slot_count(), false);
    std::size_t unbound = 0;
    for (auto i : maskable) {
        if (uniform_unit(rng) < policy.unbind_prob) {
            unbind[i] = true;
            ++unbound;
        }
    }
    // top up to the required minimum with uniformly chosen extra slots
    const std::size_t target = std::min<std::size_t>(policy.min_unbound, maskable.size());
    while (unbound < target) {
        std::vector<std::size_t> still_bound;
        for (auto i : maskable)
            if (!unbind[i]) still_bound.push_back(i);
        unbind[still_bound[uniform_below(rng, still_bound.size())]] = true;
        ++unbound;
    }

    QueryPattern qp = instance;
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < qp.slot_count(); ++i)
        if (unbind[i] || qp.slot(i).is_var()) qp.slot(i) = Slot::var(v++);
    return canonicalize_pattern(qp);
}

std::vector<QueryPattern> sample_many(const InstanceSampler &sampler, SampleMode mode, std::size_t n, Rng &rng) {
    std::vector<QueryPattern> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.sample(mode, rng));
    return out;
}

// Runs fn(worker, rng) for every worker with rng seeded from (seed, stream).
template <class Fn> void for_workers(unsigned workers, std::uint64_t seed, std::uint64_t stream_base, Fn fn) {
    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel for schedule(static, 1) if (workers > 1)
    for (int w = 0; w < static_cast<int>(workers); ++w) {
        try {
            Rng rng(derive_seed(seed, stream_base + static_cast<std::uint64_t>(w)));
            fn(static_cast<unsigned>(w), rng);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

std::size_t share(std::size_t total, unsigned workers, unsigned w) {
    return total / workers + (w < total % workers ? 1 : 0);
}

} // namespace

DatasetRecord mask_instance(const KnowledgeGraph &kg, const QueryPattern &instance, const MaskPolicy &policy,
                            Rng &rng) {
    auto qp = mask_pattern(instance, policy, rng);
    const auto card = count_matches(kg, qp);
    return {std::move(qp), card};
}

std::vector<DatasetRecord> generate_training_set(const KnowledgeGraph &kg, const SamplerConfig &config,
                                                 const std::unordered_set<std::string> *exclude) {
    config.validate();
    const unsigned workers = config.workers;
    std::vector<DatasetRecord> out;

    if (!config.supervised) {
        if (config.mode == SampleMode::enumerate) {
            for (auto &qp : enumerate_instances(kg, config.shape, config.enumerate_limit))
                out.push_back({std::move(qp), std::nullopt});
            return out;
        }
        const InstanceSampler sampler(kg, config.shape);
        std::vector<std::vector<QueryPattern>> parts(workers);
        for_workers(workers, config.seed, 0, [&](unsigned w, Rng &rng) {
            parts[w] = sample_many(sampler, config.mode, share(config.count, workers, w), rng);
        });
        for (auto &part : parts)
            for (auto &qp : part) out.push_back({std::move(qp), std::nullopt});
        return out;
    }

    // Supervised: masked, deduplicated on the canonical pattern, labelled exactly.
    std::unordered_set<std::string> seen;
    std::vector<QueryPattern> accepted;
    std::vector<QueryPattern> population;
    std::unique_ptr<InstanceSampler> sampler;
    if (config.mode == SampleMode::enumerate) {
        population = enumerate_instances(kg, config.shape, config.enumerate_limit);
        if (population.empty())
            throw Error(ErrorCode::no_instance, "knowledge graph has no " + to_string(config.shape) + " instance");
    } else {
        sampler = std::make_unique<InstanceSampler>(kg, config.shape);
    }

    constexpr unsigned kMaxRounds = 64;
    for (unsigned round = 0; round < kMaxRounds && accepted.size() < config.count; ++round) {
        const std::size_t needed = config.count - accepted.size();
        // oversample a little to absorb duplicates
        const std::size_t batch = needed + needed / 4 + workers;
        std::vector<std::vector<QueryPattern>> parts(workers);
        for_workers(workers, config.seed, static_cast<std::uint64_t>(round) * workers, [&](unsigned w, Rng &rng) {
            const auto n = share(batch, workers, w);
            auto &part = parts[w];
            part.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                const QueryPattern instance = sampler ? sampler->sample(config.mode, rng)
                                                      : population[uniform_below(rng, population.size())];
                part.push_back(mask_pattern(instance, config.mask, rng));
            }
        });
        for (auto &part : parts)
            for (auto &qp : part) {
                if (accepted.size() == config.count) break;
                auto key = canonical_key(qp);
                if (exclude && exclude->count(key)) continue;
                if (seen.insert(std::move(key)).second) accepted.push_back(std::move(qp));
            }
    }
    if (accepted.size() < config.count)
        throw Error(ErrorCode::no_instance, "only " + std::to_string(accepted.size()) + " distinct " +
                                                to_string(config.shape) + " queries found; requested " +
                                                std::to_string(config.count));

    const auto cards = count_matches_batch(kg, accepted);
    out.reserve(accepted.size());
    for (std::size_t i = 0; i < accepted.size(); ++i) out.push_back({std::move(accepted[i]), cards[i]});
    return out;
}

} // namespace lmkg

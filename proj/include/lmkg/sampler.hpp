#pragma once

#include "lmkg/pattern.hpp"
#include "lmkg/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace lmkg {

enum class SampleMode { enumerate, uniform, random_walk };

const char *to_string(SampleMode m);
SampleMode parse_sample_mode(std::string_view s);

struct MaskPolicy {
    /// Independent unbind probability per maskable slot.
    double unbind_prob = 0.5;
    bool allow_unbound_predicates = false;
    std::uint32_t min_unbound = 1;
};

struct SamplerConfig {
    Shape shape;
    std::size_t count = 1000;
    SampleMode mode = SampleMode::uniform;
    MaskPolicy mask;
    std::uint64_t seed = 0;
    bool supervised = true;
    unsigned workers = 1;
    /// Upper bound on the population materialised by enumerate mode.
    std::uint64_t enumerate_limit = 10'000'000;

    void validate() const;
};

/// A dataset row: a canonical pattern and, for supervised data, its exact cardinality.
struct DatasetRecord {
    QueryPattern pattern;
    std::optional<std::uint64_t> card;
};

inline constexpr unsigned kRetryBudget = 64;

/// All canonical bound instances of a shape, in deterministic order.
/// Throws Error(population_exceeds_limit) naming the population size.
std::vector<QueryPattern> enumerate_instances(const KnowledgeGraph &kg, Shape shape, std::uint64_t limit);

/// Draws canonical bound instances of one shape. Precomputes the weight tables
/// that make uniform-mode sampling exact (walk counts for chains,
/// C(outdeg, k) for stars).
class InstanceSampler {
  public:
    InstanceSampler(const KnowledgeGraph &kg, Shape shape);

    /// Throws Error(no_instance) when the shape has no instance and
    /// Error(retry_budget_exhausted) when random_walk gives up.
    QueryPattern sample(SampleMode mode, Rng &rng) const;

    bool has_instances() const noexcept { return has_instances_; }
    Shape shape() const noexcept { return shape_; }

  private:
    QueryPattern uniform_star(Rng &rng) const;
    QueryPattern uniform_chain(Rng &rng) const;
    QueryPattern walk_star(Rng &rng) const;
    QueryPattern walk_chain(Rng &rng) const;

    const KnowledgeGraph *kg_;
    Shape shape_;
    bool has_instances_ = false;
    bool exact_weights_ = true;
    std::vector<NodeId> subjects_;             // nodes with outdeg >= 1
    std::vector<NodeId> weighted_nodes_;       // nodes with non-zero start weight
    std::vector<std::uint64_t> cumulative_;    // prefix sums of start weights
    std::vector<std::vector<std::uint64_t>> walks_; // chain: walks_[j][n] = #j-edge walks from n
};

QueryPattern sample_instance(const KnowledgeGraph &kg, Shape shape, SampleMode mode, Rng &rng);

/// Unbinds slots of a canonical instance under `policy`, topping up to
/// `min_unbound` if needed, and labels the result with count_matches.
DatasetRecord mask_instance(const KnowledgeGraph &kg, const QueryPattern &instance, const MaskPolicy &policy,
                            Rng &rng);

/// Supervised: `count` distinct labelled masked queries, none of whose canonical
/// keys is in `exclude` (e.g. a held-out test set avoiding the training set).
/// Unsupervised: `count` sampled instances (duplicates kept), or the whole
/// population under enumerate.
std::vector<DatasetRecord> generate_training_set(const KnowledgeGraph &kg, const SamplerConfig &config,
                                                 const std::unordered_set<std::string> *exclude = nullptr);

} // namespace lmkg

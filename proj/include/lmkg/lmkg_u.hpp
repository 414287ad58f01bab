#pragma once

#include "lmkg/nn/made.hpp"
#include "lmkg/pattern.hpp"
#include "lmkg/rng.hpp"
#include "lmkg/sampler.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lmkg {

/// Term ids observed at one position, plus a reserved UNK entry (always last).
struct PositionVocab {
    std::vector<std::uint32_t> ids; // sorted, unique

    std::uint32_t size() const noexcept { return static_cast<std::uint32_t>(ids.size()) + 1; }
    std::uint32_t unk() const noexcept { return static_cast<std::uint32_t>(ids.size()); }
    /// Vocabulary index of a term id; unk() when unseen.
    std::uint32_t index_of(std::uint32_t id) const;
    /// Term id at a vocabulary index; nullopt for UNK.
    std::optional<std::uint32_t> id_at(std::uint32_t index) const;
};

/// Order in which the network factorizes the slot positions.
enum class ArOrder : std::uint8_t {
    /// n0, p0, n1, ... exactly as laid out.
    slot_order = 0,
    /// Predicates, then the outer nodes (star objects / chain ends), then the
    /// rest. Typical queries bind these slots, so forward sampling conditions on
    /// them before it has to draw anything.
    predicates_first = 1,
};

const char *to_string(ArOrder o);
ArOrder parse_ar_order(std::string_view s);
/// Positions (flat slot indices) in autoregressive order.
std::vector<std::uint32_t> autoregressive_order(Shape shape, ArOrder order);

struct TrainConfigU {
    std::uint32_t epochs = 5;
    std::size_t batch_size = 128;
    std::size_t hidden = 128;
    std::size_t blocks = 2;
    std::size_t embed_dim = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    ArOrder order = ArOrder::predicates_first;

    void validate() const;
};

/// Autoregressive density model over the pattern-bound slot sequence. Each
/// position has its own embedding table, used both for the network input and
/// (with a per-entry bias) to turn the position's output block into logits.
struct LmkgUModel {
    Shape shape;
    std::vector<PositionVocab> vocabs;
    std::vector<std::uint32_t> order;
    std::vector<std::vector<double>> embeddings; // per position: size() x embed_dim
    std::vector<std::vector<double>> out_bias;   // per position: size()
    nn::ResMade net;
    TrainConfigU config;
    /// Number of canonical instances of `shape` in the training KG (N_shape).
    std::uint64_t population = 0;
    SampleMode train_mode = SampleMode::uniform;
    std::vector<double> loss_curve; // mean NLL per epoch
    /// Free-form training provenance (data files, KG path), stored in the model header.
    nlohmann::json notes = nlohmann::json::object();

    std::uint32_t positions() const noexcept { return static_cast<std::uint32_t>(vocabs.size()); }
    std::size_t parameter_count() const;
    /// Vocabulary indices of a bound instance (UNK for unseen ids).
    std::vector<std::uint32_t> indices_of(const QueryPattern &instance) const;
};

/// Fresh, initialised model over the given vocabularies. `order` lists
/// positions; empty means slot order.
LmkgUModel make_u_model(std::vector<PositionVocab> vocabs, const TrainConfigU &config,
                        std::vector<std::uint32_t> order = {});
/// NLL training on rows of vocabulary indices (row-major, positions() per row).
void fit_u(LmkgUModel &model, std::span<const std::uint32_t> rows);

/// Builds vocabularies from canonical bound instances of one shape and trains.
/// N_shape is population_size(kg, shape).
LmkgUModel train_u(std::span<const QueryPattern> instances, const KnowledgeGraph &kg, const TrainConfigU &config,
                   SampleMode mode = SampleMode::uniform);

/// Conditional distribution at `position` given the indices of the earlier
/// positions (later entries are ignored).
std::vector<double> conditional(const LmkgUModel &model, std::span<const std::uint32_t> indices, std::uint32_t position);
double density_indices(const LmkgUModel &model, std::span<const std::uint32_t> indices);
/// Product of the conditionals at the observed ids; throws shape_mismatch.
double density(const LmkgUModel &model, const QueryPattern &instance);

/// Likelihood-weighted forward sampling: mean weight over `samples` particles.
/// bound[i] is a vocabulary index, or nullopt for an unbound position.
double sampled_mass(const LmkgUModel &model, std::span<const std::optional<std::uint32_t>> bound, std::size_t samples,
                    Rng &rng);

struct EstimateU {
    double value = 1.0;
    double mass = 0.0;
    /// The sampled mass was exactly zero; value is the floor.
    bool zero_mass = false;
};

inline constexpr std::size_t kDefaultSamples = 200;

EstimateU estimate_u(const LmkgUModel &model, const QueryPattern &qp, std::size_t samples, Rng &rng);

} // namespace lmkg

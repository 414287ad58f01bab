#pragma once

#include "lmkg/encoders.hpp"
#include "lmkg/nn/layers.hpp"
#include "lmkg/sampler.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lmkg {

enum class EncodingKind : std::uint8_t { pattern_bound = 0, sg = 1 };

const char *to_string(EncodingKind e);
EncodingKind parse_encoding_kind(std::string_view s);

struct TrainConfigS {
    std::uint32_t epochs = 200;
    std::size_t batch_size = 128;
    std::vector<std::size_t> hidden{512, 512};
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    /// Width of the per-part (A, X, E) layers used when SG's flattened A is large.
    std::size_t part_width = 128;
    /// Flattened-A size above which the per-part layers are switched on.
    std::size_t part_threshold = 4096;

    void validate() const;
};

/// Optional first stage for SG inputs: separate dense+ReLU layers over A, X and
/// E whose outputs are concatenated before the main network.
struct PartLayers {
    std::vector<std::size_t> part_widths; // input widths of A, X, E
    std::vector<nn::Linear> layers;

    bool enabled() const noexcept { return !layers.empty(); }
    std::size_t out_width() const;
};

struct LmkgSModel {
    EncodingKind encoding = EncodingKind::sg;
    EncodingSpec spec;
    /// Pattern-bound: the topology and largest k. SG: only k is meaningful.
    Shape max_shape;
    SgShape sg_shape;
    std::vector<Shape> shapes; // supported shapes, sorted
    PartLayers parts;
    nn::Mlp net;
    double log_min = 0.0;
    double log_max = 0.0;
    TrainConfigS config;
    std::vector<double> loss_curve; // mean training q-error per epoch
    /// Free-form training provenance (data files, KG path), stored in the model header.
    nlohmann::json notes = nlohmann::json::object();

    bool supports(Shape s) const;
    std::size_t input_width() const;
    /// Encoded input features of a canonical pattern.
    std::vector<double> encode(const QueryPattern &qp) const;
    /// u_hat in (0, 1) for a batch of encoded inputs (rows).
    std::vector<double> predict_scaled(const nn::Tensor &X) const;
    /// exp(m + u (M - m)) before clamping.
    double unscale(double u) const;
    std::size_t parameter_count() const;
};

/// Requires non-empty data with all cards >= 1. Pattern-bound needs a single topology.
LmkgSModel train_s(std::span<const DatasetRecord> data, EncodingKind encoding, const EncodingSpec &spec,
                   const TrainConfigS &config);

struct EstimateS {
    double value = 1.0;
    /// A bound term lies outside the model's term domain; the estimate is the floor.
    bool novel_term = false;
};

/// Canonicalizes qp, routes to the model's supported shapes (Error no_route otherwise).
EstimateS estimate_s(const LmkgSModel &model, const QueryPattern &qp);

} // namespace lmkg

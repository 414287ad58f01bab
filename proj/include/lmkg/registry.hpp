#pragma once

#include "lmkg/model_file.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lmkg {

enum class Grouping : std::uint8_t { single = 0, by_type = 1, by_size = 2, by_type_and_size = 3 };

const char *to_string(Grouping g);
Grouping parse_grouping(std::string_view s);

/// Partitions shapes into model groups; groups and their members are sorted.
std::vector<std::vector<Shape>> group_shapes(std::vector<Shape> shapes, Grouping g);

struct RegistryEntry {
    std::string name;
    ModelKind kind;
    std::vector<Shape> shapes;
    std::shared_ptr<const AnyModel> model;
    /// Serialized size (the on-disk size when loaded from a file).
    std::uint64_t bytes = 0;
};

/// Models keyed by the shapes they answer. Within one model kind every shape
/// routes to at most one entry; overlaps are rejected when a model is added.
class ModelRegistry {
  public:
    explicit ModelRegistry(std::optional<Grouping> grouping = std::nullopt) : grouping_(grouping) {}

    /// `bytes` = 0 means "compute the serialized size".
    void add(std::string name, AnyModel model, std::uint64_t bytes = 0);

    /// With `kind` unset the shape must be covered by exactly one kind.
    /// Throws Error(no_route) / Error(ambiguous_route).
    const RegistryEntry &route(Shape shape, std::optional<ModelKind> kind = std::nullopt) const;

    const std::vector<RegistryEntry> &entries() const noexcept { return entries_; }
    std::optional<Grouping> grouping() const noexcept { return grouping_; }

    /// Every *.lmkgm file in the directory, in file-name order.
    static ModelRegistry load_dir(const std::filesystem::path &dir, std::optional<Grouping> grouping = std::nullopt);

  private:
    std::optional<Grouping> grouping_;
    std::vector<RegistryEntry> entries_;
    std::map<std::pair<ModelKind, Shape>, std::size_t> routes_;
};

/// Exact cardinalities of the largest training queries, keyed by canonical form.
class OutlierBuffer {
  public:
    static constexpr std::size_t kDefaultCapacity = 100;

    explicit OutlierBuffer(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

    /// Keeps the `capacity` largest-card labelled records (ties by canonical key).
    static OutlierBuffer from_training(std::span<const DatasetRecord> records, std::size_t capacity = kDefaultCapacity);

    std::optional<std::uint64_t> lookup(const QueryPattern &qp) const;
    std::optional<std::uint64_t> lookup_key(const std::string &key) const;

    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    const std::map<std::string, std::uint64_t> &entries() const noexcept { return entries_; }

    nlohmann::json to_json() const;
    static OutlierBuffer from_json(const nlohmann::json &j);
    void save(const std::filesystem::path &path) const;
    static OutlierBuffer load(const std::filesystem::path &path);

  private:
    std::size_t capacity_;
    std::map<std::string, std::uint64_t> entries_;
};

enum class Provenance : std::uint8_t { buffer, lmkg_s, lmkg_u };

const char *to_string(Provenance p);

struct EstimateOptions {
    std::optional<ModelKind> kind;
    bool use_buffer = false;
    std::size_t samples = kDefaultSamples;
    std::uint64_t seed = 0;
};

struct Estimate {
    double value = 1.0;
    Provenance provenance = Provenance::lmkg_s;
    std::string model; // entry name, empty for buffer hits
    /// Novel bound term (S) or zero sampled mass (U): the estimate is the floor.
    bool floored = false;
};

/// Buffer hit (if enabled) short-circuits; otherwise the routed model answers.
Estimate estimate(const ModelRegistry &registry, const OutlierBuffer *buffer, const QueryPattern &qp,
                  const EstimateOptions &options);

} // namespace lmkg

#pragma once

#include "lmkg/registry.hpp"

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace lmkg {

/// max(e', y') / min(e', y') with e' = max(estimate, 1), y' = max(truth, 1).
double q_error(double estimate, double truth);

/// i such that truth lies in [5^i, 5^(i+1)); truth 0 counts as 1.
std::uint32_t result_bucket(std::uint64_t truth);

struct QErrorStats {
    std::size_t count = 0;
    double mean = 0, median = 0, p95 = 0, p99 = 0, max = 0;
};

/// Percentiles use linear interpolation between order statistics.
QErrorStats summarize(std::vector<double> qerrors);

struct EvalRecord {
    std::size_t index = 0;
    std::string key; // canonical key
    Shape shape;
    std::uint64_t truth = 0;
    double estimate = 0;
    double qerror = 0;
    double micros = 0;
    std::string provenance;
    std::string model;
    bool floored = false;
    std::string error; // non-empty: the query failed and is excluded from aggregates
};

struct BucketStats {
    std::uint32_t index = 0;
    std::uint64_t lo = 1, hi = 5; // [lo, hi)
    QErrorStats stats;
};

struct ModelSize {
    std::string name;
    ModelKind kind;
    std::uint64_t bytes = 0;
};

struct EvalReport {
    std::vector<EvalRecord> records; // in test-set order
    std::size_t failures = 0;
    QErrorStats overall;
    std::vector<BucketStats> buckets; // non-empty buckets, ascending
    std::vector<ModelSize> models;
    nlohmann::json config;

    std::string to_csv() const;
    nlohmann::json to_json() const;
    /// Writes prefix.csv and prefix.json.
    void write(const std::string &prefix) const;
};

/// Estimates every labelled query (OpenMP-parallel, each query timed on its own
/// worker). Query i uses seed derive_seed(options.seed, i), so results do not
/// depend on the thread count.
EvalReport evaluate_workload(const ModelRegistry &registry, const OutlierBuffer *buffer,
                             std::span<const DatasetRecord> test, const EstimateOptions &options);

} // namespace lmkg

#pragma once

#include "lmkg/sampler.hpp"

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

namespace lmkg {

/// One JSON object per line: the pattern's JSON form plus "card" (exact
/// cardinality, or null for unsupervised rows). Terms are N-Triples strings.
std::string dataset_to_jsonl(std::span<const DatasetRecord> records, const KnowledgeGraph &kg);
std::vector<DatasetRecord> dataset_from_jsonl(std::string_view text, const KnowledgeGraph &kg);

/// Writes `path` and its metadata sidecar `path + ".meta.json"`.
void write_dataset(const std::filesystem::path &path, std::span<const DatasetRecord> records, const KnowledgeGraph &kg,
                   const nlohmann::json &meta);
std::vector<DatasetRecord> read_dataset(const std::filesystem::path &path, const KnowledgeGraph &kg);
/// Sidecar metadata, or an empty object when there is none.
nlohmann::json read_dataset_meta(const std::filesystem::path &path);

nlohmann::json sampler_config_to_json(const SamplerConfig &config);

} // namespace lmkg

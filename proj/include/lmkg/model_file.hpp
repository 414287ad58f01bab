#pragma once

#include "lmkg/lmkg_s.hpp"
#include "lmkg/lmkg_u.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

namespace lmkg {

enum class ModelKind : std::uint8_t { lmkg_s = 0, lmkg_u = 1 };

const char *to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

using AnyModel = std::variant<LmkgSModel, LmkgUModel>;

ModelKind kind_of(const AnyModel &m);
/// Shapes the model answers.
std::vector<Shape> coverage_of(const AnyModel &m);

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Layout: "LMKGM\0", u32 version, u64 total length, JSON header (string),
/// binary parameter payload (little-endian float64 / uint32 arrays), CRC32 of
/// everything before it.
std::vector<std::uint8_t> serialize_model(const AnyModel &m);
/// Throws version_mismatch, truncated or checksum_mismatch.
AnyModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const AnyModel &m, const std::filesystem::path &path);
AnyModel load_model(const std::filesystem::path &path);

/// The JSON header: kind, shapes, encoding, architecture, scaling, seeds.
nlohmann::json model_header(const AnyModel &m);
/// Header of a model file without loading its parameters (still checksummed).
nlohmann::json read_model_header(std::span<const std::uint8_t> bytes);

} // namespace lmkg

#include "lmkg/dataset.hpp"

#include "lmkg/binary_io.hpp"
#include "lmkg/error.hpp"

namespace lmkg {

std::string dataset_to_jsonl(std::span<const DatasetRecord> records, const KnowledgeGraph &kg) {
    std::string out;
    for (const auto &rec : records) {
        auto j = pattern_to_json(rec.pattern, kg);
        j["card"] = rec.card ? nlohmann::json(*rec.card) : nlohmann::json(nullptr);
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<DatasetRecord> dataset_from_jsonl(std::string_view text, const KnowledgeGraph &kg) {
    std::vector<DatasetRecord> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            DatasetRecord rec;
            rec.pattern = pattern_from_json(j, kg);
            if (j.contains("card") && !j["card"].is_null()) rec.card = j["card"].get<std::uint64_t>();
            out.push_back(std::move(rec));
        } catch (const nlohmann::json::exception &e) {
            throw ParseError(line_no, std::string("dataset: ") + e.what());
        }
    }
    return out;
}

void write_dataset(const std::filesystem::path &path, std::span<const DatasetRecord> records, const KnowledgeGraph &kg,
                   const nlohmann::json &meta) {
    const auto text = dataset_to_jsonl(records, kg);
    write_file(path, std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
    const auto side = meta.dump(2) + "\n";
    write_file(path.string() + ".meta.json", std::span(reinterpret_cast<const std::uint8_t *>(side.data()), side.size()));
}

std::vector<DatasetRecord> read_dataset(const std::filesystem::path &path, const KnowledgeGraph &kg) {
    const auto bytes = read_file(path);
    return dataset_from_jsonl(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()), kg);
}

nlohmann::json read_dataset_meta(const std::filesystem::path &path) {
    const std::filesystem::path side = path.string() + ".meta.json";
    if (!std::filesystem::exists(side)) return nlohmann::json::object();
    const auto bytes = read_file(side);
    try {
        return nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::malformed_input, side.string() + ": " + e.what());
    }
}

nlohmann::json sampler_config_to_json(const SamplerConfig &c) {
    return {{"topology", to_string(c.shape.topology)},
            {"k", c.shape.k},
            {"count", c.count},
            {"mode", to_string(c.mode)},
            {"supervised", c.supervised},
            {"mask_prob", c.mask.unbind_prob},
            {"min_unbound", c.mask.min_unbound},
            {"allow_unbound_preds", c.mask.allow_unbound_predicates},
            {"seed", c.seed},
            {"workers", c.workers}};
}

} // namespace lmkg

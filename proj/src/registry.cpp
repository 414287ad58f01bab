#include "lmkg/registry.hpp"

#include "lmkg/binary_io.hpp"
#include "lmkg/error.hpp"

#include <algorithm>
#include <set>

namespace lmkg {

const char *to_string(Grouping g) {
    switch (g) {
    case Grouping::single: return "single";
    case Grouping::by_type: return "by-type";
    case Grouping::by_size: return "by-size";
    case Grouping::by_type_and_size: return "by-type-and-size";
    }
    return "?";
}

Grouping parse_grouping(std::string_view s) {
    if (s == "single") return Grouping::single;
    if (s == "by-type" || s == "by_type") return Grouping::by_type;
    if (s == "by-size" || s == "by_size") return Grouping::by_size;
    if (s == "by-type-and-size" || s == "by_type_and_size") return Grouping::by_type_and_size;
    throw Error(ErrorCode::invalid_argument, "unknown grouping '" + std::string(s) + "'");
}

std::vector<std::vector<Shape>> group_shapes(std::vector<Shape> shapes, Grouping g) {
    std::sort(shapes.begin(), shapes.end());
    shapes.erase(std::unique(shapes.begin(), shapes.end()), shapes.end());
    std::map<std::pair<int, std::uint32_t>, std::vector<Shape>> groups;
    for (auto s : shapes) {
        const int topo = g == Grouping::by_type || g == Grouping::by_type_and_size ? static_cast<int>(s.topology) : -1;
        const std::uint32_t k = g == Grouping::by_size || g == Grouping::by_type_and_size ? s.k : 0;
        groups[{topo, k}].push_back(s);
    }
    std::vector<std::vector<Shape>> out;
    for (auto &[key, members] : groups) out.push_back(std::move(members));
    return out;
}

namespace {

void check_grouping(const std::vector<Shape> &shapes, Grouping g, const std::string &name) {
    std::set<Topology> topos;
    std::set<std::uint32_t> sizes;
    for (auto s : shapes) {
        topos.insert(s.topology);
        sizes.insert(s.k);
    }
    const bool ok = g == Grouping::single || (g == Grouping::by_type && topos.size() == 1) ||
                    (g == Grouping::by_size && sizes.size() == 1) ||
                    (g == Grouping::by_type_and_size && shapes.size() == 1);
    if (!ok)
        throw Error(ErrorCode::ambiguous_route,
                    "model " + name + " does not fit grouping " + std::string(to_string(g)));
}

} // namespace

void ModelRegistry::add(std::string name, AnyModel model, std::uint64_t bytes) {
    RegistryEntry e;
    e.name = std::move(name);
    e.kind = kind_of(model);
    e.shapes = coverage_of(model);
    if (e.shapes.empty()) throw Error(ErrorCode::invalid_argument, "model " + e.name + " covers no shape");
    if (grouping_) {
        check_grouping(e.shapes, *grouping_, e.name);
        if (*grouping_ == Grouping::single)
            for (const auto &other : entries_)
                if (other.kind == e.kind)
                    throw Error(ErrorCode::ambiguous_route, "grouping single allows one model per kind");
    }
    for (auto s : e.shapes) {
        const auto it = routes_.find({e.kind, s});
        if (it != routes_.end())
            throw Error(ErrorCode::ambiguous_route, "models " + entries_[it->second].name + " and " + e.name +
                                                        " both cover " + to_string(s));
    }
    e.bytes = bytes ? bytes : serialize_model(model).size();
    e.model = std::make_shared<const AnyModel>(std::move(model));
    for (auto s : e.shapes) routes_[{e.kind, s}] = entries_.size();
    entries_.push_back(std::move(e));
}

const RegistryEntry &ModelRegistry::route(Shape shape, std::optional<ModelKind> kind) const {
    if (kind) {
        const auto it = routes_.find({*kind, shape});
        if (it == routes_.end())
            throw Error(ErrorCode::no_route, std::string("no ") + to_string(*kind) + " model covers " + to_string(shape));
        return entries_[it->second];
    }
    const auto s = routes_.find({ModelKind::lmkg_s, shape});
    const auto u = routes_.find({ModelKind::lmkg_u, shape});
    if (s != routes_.end() && u != routes_.end())
        throw Error(ErrorCode::ambiguous_route, "both model kinds cover " + to_string(shape) + "; choose one");
    if (s != routes_.end()) return entries_[s->second];
    if (u != routes_.end()) return entries_[u->second];
    throw Error(ErrorCode::no_route, "no model covers " + to_string(shape));
}

ModelRegistry ModelRegistry::load_dir(const std::filesystem::path &dir, std::optional<Grouping> grouping) {
    if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::io, dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto &f : std::filesystem::directory_iterator(dir))
        if (f.is_regular_file() && f.path().extension() == ".lmkgm") files.push_back(f.path());
    std::sort(files.begin(), files.end());
    ModelRegistry reg(grouping);
    for (const auto &f : files) {
        const auto bytes = read_file(f);
        reg.add(f.filename().string(), deserialize_model(bytes), bytes.size());
    }
    return reg;
}

OutlierBuffer OutlierBuffer::from_training(std::span<const DatasetRecord> records, std::size_t capacity) {
    std::map<std::string, std::uint64_t> all;
    for (const auto &r : records)
        if (r.card) all[canonical_key(canonicalize_pattern(r.pattern))] = *r.card;
    std::vector<std::pair<std::uint64_t, std::string>> ranked;
    ranked.reserve(all.size());
    for (auto &[key, card] : all) ranked.emplace_back(card, key);
    std::sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    OutlierBuffer buf(capacity);
    for (std::size_t i = 0; i < ranked.size() && i < capacity; ++i) buf.entries_[ranked[i].second] = ranked[i].first;
    return buf;
}

std::optional<std::uint64_t> OutlierBuffer::lookup(const QueryPattern &qp) const {
    return lookup_key(canonical_key(canonicalize_pattern(qp)));
}

std::optional<std::uint64_t> OutlierBuffer::lookup_key(const std::string &key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

nlohmann::json OutlierBuffer::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &[key, card] : entries_) rows.push_back({{"key", key}, {"card", card}});
    return {{"capacity", capacity_}, {"entries", rows}};
}

OutlierBuffer OutlierBuffer::from_json(const nlohmann::json &j) {
    try {
        OutlierBuffer buf(j.at("capacity").get<std::size_t>());
        for (const auto &row : j.at("entries")) buf.entries_[row.at("key").get<std::string>()] = row.at("card").get<std::uint64_t>();
        if (buf.entries_.size() > buf.capacity_) throw Error(ErrorCode::capacity_exceeded, "buffer holds more than its capacity");
        return buf;
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::malformed_input, std::string("buffer file: ") + e.what());
    }
}

void OutlierBuffer::save(const std::filesystem::path &path) const {
    const auto text = to_json().dump(1) + "\n";
    write_file(path, std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

OutlierBuffer OutlierBuffer::load(const std::filesystem::path &path) {
    const auto bytes = read_file(path);
    try {
        return from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::malformed_input, path.string() + ": " + e.what());
    }
}

const char *to_string(Provenance p) {
    switch (p) {
    case Provenance::buffer: return "buffer";
    case Provenance::lmkg_s: return "lmkg_s";
    case Provenance::lmkg_u: return "lmkg_u";
    }
    return "?";
}

Estimate estimate(const ModelRegistry &registry, const OutlierBuffer *buffer, const QueryPattern &qp,
                  const EstimateOptions &options) {
    const auto canon = canonicalize_pattern(qp);
    if (options.use_buffer && buffer)
        if (const auto hit = buffer->lookup_key(canonical_key(canon)))
            return {static_cast<double>(*hit), Provenance::buffer, {}, false};
    const auto &entry = registry.route(canon.shape(), options.kind);
    Estimate out;
    out.model = entry.name;
    if (const auto *s = std::get_if<LmkgSModel>(entry.model.get())) {
        const auto e = estimate_s(*s, canon);
        out.value = e.value;
        out.floored = e.novel_term;
        out.provenance = Provenance::lmkg_s;
    } else {
        Rng rng(options.seed);
        const auto e = estimate_u(std::get<LmkgUModel>(*entry.model), canon, options.samples, rng);
        out.value = e.value;
        out.floored = e.zero_mass;
        out.provenance = Provenance::lmkg_u;
    }
    return out;
}

} // namespace lmkg

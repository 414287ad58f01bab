#include "lmkg/model_file.hpp"

#include "lmkg/binary_io.hpp"
#include "lmkg/error.hpp"

#include <algorithm>

namespace lmkg {

namespace {

constexpr std::string_view kMagic{"LMKGM\0", 6};
constexpr const char *kInit = "glorot_uniform";

nlohmann::json shape_json(Shape s) { return {{"topology", to_string(s.topology)}, {"k", s.k}}; }

Shape shape_from(const nlohmann::json &j) {
    return {parse_topology(j.at("topology").get<std::string>()), j.at("k").get<std::uint32_t>()};
}

nlohmann::json spec_json(const EncodingSpec &s) {
    return {{"d", s.d},
            {"b", s.b},
            {"w_node", s.w_node},
            {"w_pred", s.w_pred},
            {"term_mode", s.term_mode == TermMode::binary ? "binary" : "onehot"}};
}

EncodingSpec spec_from(const nlohmann::json &j) {
    EncodingSpec s;
    s.d = j.at("d").get<std::uint32_t>();
    s.b = j.at("b").get<std::uint32_t>();
    s.w_node = j.at("w_node").get<std::uint32_t>();
    s.w_pred = j.at("w_pred").get<std::uint32_t>();
    s.term_mode = j.at("term_mode").get<std::string>() == "binary" ? TermMode::binary : TermMode::onehot;
    return s;
}

void write_linear(ByteWriter &w, const nn::Linear &l) {
    w.u64(l.in());
    w.u64(l.out());
    w.f64s(l.weights());
    w.f64s(l.bias());
}

void read_linear(ByteReader &r, nn::Linear &l) {
    const auto in = r.u64();
    const auto out = r.u64();
    if (in != l.in() || out != l.out()) throw Error(ErrorCode::shape_mismatch, "layer shape in model file does not match header");
    auto wt = r.f64s();
    auto b = r.f64s();
    if (wt.size() != l.weights().size() || b.size() != l.bias().size())
        throw Error(ErrorCode::shape_mismatch, "parameter count in model file does not match header");
    l.weights() = std::move(wt);
    l.bias() = std::move(b);
    l.apply_mask();
}

nlohmann::json header_s(const LmkgSModel &m) {
    nlohmann::json shapes = nlohmann::json::array();
    for (auto s : m.shapes) shapes.push_back(shape_json(s));
    const auto &c = m.config;
    return {{"kind", "lmkg_s"},
            {"shapes", shapes},
            {"encoding", to_string(m.encoding)},
            {"spec", spec_json(m.spec)},
            {"max_shape", shape_json(m.max_shape)},
            {"sg_shape", {{"n", m.sg_shape.n_max}, {"e", m.sg_shape.e_max}}},
            {"input_width", m.input_width()},
            {"part_widths", m.parts.part_widths},
            {"part_width", c.part_width},
            {"part_threshold", c.part_threshold},
            {"widths", m.net.widths()},
            {"hidden_activation", nn::to_string(m.net.hidden_activation())},
            {"output_activation", nn::to_string(m.net.output_activation())},
            {"log_min", m.log_min},
            {"log_max", m.log_max},
            {"log_base", "e"},
            {"init", kInit},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"hidden", c.hidden},
            {"seed", c.seed},
            {"loss_curve", m.loss_curve},
            {"parameters", m.parameter_count()},
            {"training", m.notes}};
}

nlohmann::json header_u(const LmkgUModel &m) {
    std::vector<std::uint32_t> vocab_sizes;
    for (const auto &v : m.vocabs) vocab_sizes.push_back(v.size());
    const auto &c = m.config;
    return {{"kind", "lmkg_u"},
            {"shapes", nlohmann::json::array({shape_json(m.shape)})},
            {"encoding", "pattern-bound"},
            {"positions", m.positions()},
            {"vocab_sizes", vocab_sizes},
            {"order", m.order},
            {"order_policy", to_string(c.order)},
            {"embed_dim", c.embed_dim},
            {"hidden", c.hidden},
            {"blocks", c.blocks},
            {"population", m.population},
            {"train_mode", to_string(m.train_mode)},
            {"default_samples", kDefaultSamples},
            {"init", kInit},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"seed", c.seed},
            {"loss_curve", m.loss_curve},
            {"parameters", m.parameter_count()},
            {"training", m.notes}};
}

LmkgSModel read_s(const nlohmann::json &h, ByteReader &r) {
    LmkgSModel m;
    for (const auto &s : h.at("shapes")) m.shapes.push_back(shape_from(s));
    m.encoding = parse_encoding_kind(h.at("encoding").get<std::string>());
    m.spec = spec_from(h.at("spec"));
    m.max_shape = shape_from(h.at("max_shape"));
    m.sg_shape = {h.at("sg_shape").at("n").get<std::uint32_t>(), h.at("sg_shape").at("e").get<std::uint32_t>()};
    m.log_min = h.at("log_min").get<double>();
    m.log_max = h.at("log_max").get<double>();
    auto &c = m.config;
    c.epochs = h.at("epochs").get<std::uint32_t>();
    c.batch_size = h.at("batch_size").get<std::size_t>();
    c.learning_rate = h.at("learning_rate").get<double>();
    c.hidden = h.at("hidden").get<std::vector<std::size_t>>();
    c.seed = h.at("seed").get<std::uint64_t>();
    c.part_width = h.at("part_width").get<std::size_t>();
    c.part_threshold = h.at("part_threshold").get<std::size_t>();
    m.loss_curve = h.at("loss_curve").get<std::vector<double>>();
    m.notes = h.value("training", nlohmann::json::object());

    m.parts.part_widths = h.at("part_widths").get<std::vector<std::size_t>>();
    for (auto w : m.parts.part_widths) m.parts.layers.emplace_back(w, c.part_width);
    m.net = nn::Mlp(h.at("widths").get<std::vector<std::size_t>>(), nn::Activation::relu, nn::Activation::sigmoid);
    if (r.u64() != m.parts.layers.size() + m.net.layers().size())
        throw Error(ErrorCode::shape_mismatch, "layer count in model file does not match header");
    for (auto &l : m.parts.layers) read_linear(r, l);
    for (auto &l : m.net.layers()) read_linear(r, l);
    return m;
}

LmkgUModel read_u(const nlohmann::json &h, ByteReader &r) {
    TrainConfigU c;
    c.epochs = h.at("epochs").get<std::uint32_t>();
    c.batch_size = h.at("batch_size").get<std::size_t>();
    c.learning_rate = h.at("learning_rate").get<double>();
    c.seed = h.at("seed").get<std::uint64_t>();
    c.hidden = h.at("hidden").get<std::size_t>();
    c.blocks = h.at("blocks").get<std::size_t>();
    c.embed_dim = h.at("embed_dim").get<std::size_t>();
    c.order = parse_ar_order(h.at("order_policy").get<std::string>());

    const auto D = h.at("positions").get<std::uint32_t>();
    std::vector<PositionVocab> vocabs(D);
    for (auto &v : vocabs) v.ids = r.u32s();
    LmkgUModel m = make_u_model(std::move(vocabs), c, h.at("order").get<std::vector<std::uint32_t>>());
    m.shape = shape_from(h.at("shapes").at(0));
    m.population = h.at("population").get<std::uint64_t>();
    m.train_mode = parse_sample_mode(h.at("train_mode").get<std::string>());
    m.loss_curve = h.at("loss_curve").get<std::vector<double>>();
    m.notes = h.value("training", nlohmann::json::object());
    for (std::uint32_t p = 0; p < D; ++p) {
        auto e = r.f64s();
        auto b = r.f64s();
        if (e.size() != m.embeddings[p].size() || b.size() != m.out_bias[p].size())
            throw Error(ErrorCode::shape_mismatch, "embedding size in model file does not match header");
        m.embeddings[p] = std::move(e);
        m.out_bias[p] = std::move(b);
    }
    auto layers = m.net.layers();
    if (r.u64() != layers.size()) throw Error(ErrorCode::shape_mismatch, "layer count in model file does not match header");
    for (auto *l : layers) read_linear(r, *l);
    return m;
}

struct Parsed {
    nlohmann::json header;
    ByteReader payload;
};

Parsed open_container(std::span<const std::uint8_t> bytes) {
    ByteReader head(bytes);
    head.expect_magic(kMagic);
    const auto version = head.u32();
    if (version != kModelFormatVersion)
        throw Error(ErrorCode::version_mismatch, "model format version " + std::to_string(version) + ", expected " +
                                                     std::to_string(kModelFormatVersion));
    const auto length = head.u64();
    if (length > bytes.size()) throw Error(ErrorCode::truncated, "model file is truncated");
    if (length < bytes.size()) throw Error(ErrorCode::malformed_input, "trailing bytes after model");
    const auto body = verify_crc_trailer(bytes);
    ByteReader r(body.subspan(kMagic.size() + 12));
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.str());
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::malformed_input, std::string("model header: ") + e.what());
    }
    return {std::move(header), r};
}

} // namespace

const char *to_string(ModelKind k) { return k == ModelKind::lmkg_s ? "lmkg_s" : "lmkg_u"; }

ModelKind parse_model_kind(std::string_view s) {
    if (s == "s" || s == "lmkg_s" || s == "lmkg-s") return ModelKind::lmkg_s;
    if (s == "u" || s == "lmkg_u" || s == "lmkg-u") return ModelKind::lmkg_u;
    throw Error(ErrorCode::invalid_argument, "unknown model kind '" + std::string(s) + "'");
}

ModelKind kind_of(const AnyModel &m) { return m.index() == 0 ? ModelKind::lmkg_s : ModelKind::lmkg_u; }

std::vector<Shape> coverage_of(const AnyModel &m) {
    if (const auto *s = std::get_if<LmkgSModel>(&m)) return s->shapes;
    return {std::get<LmkgUModel>(m).shape};
}

nlohmann::json model_header(const AnyModel &m) {
    if (const auto *s = std::get_if<LmkgSModel>(&m)) return header_s(*s);
    return header_u(std::get<LmkgUModel>(m));
}

std::vector<std::uint8_t> serialize_model(const AnyModel &m) {
    ByteWriter w;
    w.bytes(kMagic.data(), kMagic.size());
    w.u32(kModelFormatVersion);
    w.u64(0); // total length, patched below
    w.str(model_header(m).dump());
    if (const auto *s = std::get_if<LmkgSModel>(&m)) {
        w.u64(s->parts.layers.size() + s->net.layers().size());
        for (const auto &l : s->parts.layers) write_linear(w, l);
        for (const auto &l : s->net.layers()) write_linear(w, l);
    } else {
        const auto &u = std::get<LmkgUModel>(m);
        for (const auto &v : u.vocabs) w.u32s(v.ids);
        for (std::uint32_t p = 0; p < u.positions(); ++p) {
            w.f64s(u.embeddings[p]);
            w.f64s(u.out_bias[p]);
        }
        const auto layers = u.net.layers();
        w.u64(layers.size());
        for (const auto *l : layers) write_linear(w, *l);
    }
    auto &buf = w.buffer();
    const std::uint64_t total = buf.size() + 4;
    std::memcpy(buf.data() + kMagic.size() + 4, &total, sizeof total);
    w.crc_trailer();
    return std::move(w.buffer());
}

AnyModel deserialize_model(std::span<const std::uint8_t> bytes) {
    auto [header, r] = open_container(bytes);
    try {
        const auto kind = header.at("kind").get<std::string>();
        if (kind != "lmkg_s" && kind != "lmkg_u") throw Error(ErrorCode::malformed_input, "unknown model kind " + kind);
        AnyModel out = kind == "lmkg_s" ? AnyModel(read_s(header, r)) : AnyModel(read_u(header, r));
        if (r.remaining() != 0) throw Error(ErrorCode::malformed_input, "unread bytes in model payload");
        return out;
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::malformed_input, std::string("model header: ") + e.what());
    }
}

nlohmann::json read_model_header(std::span<const std::uint8_t> bytes) { return open_container(bytes).header; }

void save_model(const AnyModel &m, const std::filesystem::path &path) { write_file(path, serialize_model(m)); }

AnyModel load_model(const std::filesystem::path &path) {
    const auto bytes = read_file(path);
    return deserialize_model(bytes);
}

} // namespace lmkg

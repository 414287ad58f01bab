#include "lmkg/lmkg_s.hpp"

#include "lmkg/error.hpp"
#include "lmkg/nn/adam.hpp"
#include "lmkg/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace lmkg {

const char *to_string(EncodingKind e) { return e == EncodingKind::sg ? "sg" : "pattern-bound"; }

EncodingKind parse_encoding_kind(std::string_view s) {
    if (s == "sg") return EncodingKind::sg;
    if (s == "pattern-bound" || s == "pattern_bound") return EncodingKind::pattern_bound;
    throw Error(ErrorCode::invalid_argument, "unknown encoding '" + std::string(s) + "'");
}

void TrainConfigS::validate() const {
    if (epochs < 1) throw Error(ErrorCode::invalid_argument, "epochs must be >= 1");
    if (batch_size < 1) throw Error(ErrorCode::invalid_argument, "batch size must be >= 1");
    if (hidden.empty()) throw Error(ErrorCode::invalid_argument, "need at least one hidden layer");
    for (auto w : hidden)
        if (w < 1) throw Error(ErrorCode::invalid_argument, "hidden widths must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::invalid_argument, "learning rate must be positive");
}

std::size_t PartLayers::out_width() const {
    std::size_t w = 0;
    for (const auto &l : layers) w += l.out();
    return w;
}

namespace {

struct Forward {
    std::vector<nn::Tensor> part_in, part_out;
    nn::Tensor joined;
    nn::Mlp::Cache cache;
};

void split_parts(const PartLayers &parts, const nn::Tensor &X, Forward &f) {
    f.part_in.resize(parts.layers.size());
    f.part_out.resize(parts.layers.size());
    std::size_t off = 0;
    for (std::size_t p = 0; p < parts.layers.size(); ++p) {
        const auto w = parts.part_widths[p];
        f.part_in[p].resize(X.rows(), w);
        for (std::size_t r = 0; r < X.rows(); ++r) {
            auto src = X.row(r).subspan(off, w);
            std::copy(src.begin(), src.end(), f.part_in[p].row(r).begin());
        }
        parts.layers[p].forward(f.part_in[p], f.part_out[p]);
        nn::activate(nn::Activation::relu, f.part_out[p]);
        off += w;
    }
    f.joined.resize(X.rows(), parts.out_width());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        auto dst = f.joined.row(r).begin();
        for (const auto &t : f.part_out) dst = std::copy(t.row(r).begin(), t.row(r).end(), dst);
    }
}

const nn::Tensor &run_forward(const LmkgSModel &m, const nn::Tensor &X, Forward &f) {
    if (X.cols() != m.input_width()) throw Error(ErrorCode::shape_mismatch, "input width does not match model");
    if (!m.parts.enabled()) return m.net.forward(X, f.cache);
    split_parts(m.parts, X, f);
    return m.net.forward(f.joined, f.cache);
}

void run_backward(LmkgSModel &m, Forward &f, nn::Tensor &dOut) {
    if (!m.parts.enabled()) {
        m.net.backward(f.cache, dOut);
        return;
    }
    nn::Tensor dJoined;
    m.net.backward(f.cache, dOut, &dJoined);
    std::size_t off = 0;
    for (std::size_t p = 0; p < m.parts.layers.size(); ++p) {
        const auto w = m.parts.layers[p].out();
        nn::Tensor d(std::vector<std::size_t>{dJoined.rows(), w});
        for (std::size_t r = 0; r < dJoined.rows(); ++r) {
            auto src = dJoined.row(r).subspan(off, w);
            std::copy(src.begin(), src.end(), d.row(r).begin());
        }
        nn::activation_backward(nn::Activation::relu, f.part_out[p], d);
        m.parts.layers[p].backward(f.part_in[p], d, nullptr);
        off += w;
    }
}

std::vector<nn::ParamRef> parameters(LmkgSModel &m) {
    std::vector<nn::ParamRef> out;
    for (auto &l : m.parts.layers) l.collect(out);
    m.net.collect(out);
    return out;
}

bool within_domain(const QueryPattern &qp, const EncodingSpec &spec) {
    for (const auto &n : qp.nodes)
        if (n.id() > spec.d) return false;
    for (const auto &p : qp.preds)
        if (p.id() > spec.b) return false;
    return true;
}

} // namespace

bool LmkgSModel::supports(Shape s) const { return std::binary_search(shapes.begin(), shapes.end(), s); }

std::size_t LmkgSModel::input_width() const {
    return encoding == EncodingKind::sg ? sg_width(spec, sg_shape) : pattern_bound_width(spec, max_shape);
}

std::vector<double> LmkgSModel::encode(const QueryPattern &qp) const {
    const Bits bits = encoding == EncodingKind::sg ? encode_sg(qp, spec, sg_shape).flatten()
                                                   : encode_pattern_bound(qp, spec, max_shape).bits;
    return {bits.begin(), bits.end()};
}

std::vector<double> LmkgSModel::predict_scaled(const nn::Tensor &X) const {
    Forward f;
    const auto &out = run_forward(*this, X, f);
    return {out.values().begin(), out.values().end()};
}

double LmkgSModel::unscale(double u) const { return std::exp(log_min + u * (log_max - log_min)); }

std::size_t LmkgSModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto &l : parts.layers) n += l.weights().size() + l.bias().size();
    for (const auto &l : net.layers()) n += l.weights().size() + l.bias().size();
    return n;
}

LmkgSModel train_s(std::span<const DatasetRecord> data, EncodingKind encoding, const EncodingSpec &spec,
                   const TrainConfigS &config) {
    config.validate();
    if (data.empty()) throw Error(ErrorCode::invalid_argument, "training set is empty");

    LmkgSModel model;
    model.encoding = encoding;
    model.spec = spec;
    model.config = config;

    std::vector<QueryPattern> patterns;
    std::vector<double> logs;
    patterns.reserve(data.size());
    std::set<Shape> shapes;
    std::uint32_t max_k = 0;
    for (const auto &rec : data) {
        if (!rec.card) throw Error(ErrorCode::invalid_argument, "supervised training needs labelled records");
        if (*rec.card < 1)
            throw Error(ErrorCode::invalid_argument,
                        "record with cardinality 0: " + canonical_key(rec.pattern) + " (labels must be >= 1)");
        patterns.push_back(canonicalize_pattern(rec.pattern));
        logs.push_back(std::log(static_cast<double>(*rec.card)));
        shapes.insert(rec.pattern.shape());
        max_k = std::max(max_k, rec.pattern.k());
    }
    model.shapes.assign(shapes.begin(), shapes.end());
    if (encoding == EncodingKind::pattern_bound) {
        const auto topo = model.shapes.front().topology;
        for (auto s : model.shapes)
            if (s.topology != topo)
                throw Error(ErrorCode::unsupported_topology, "pattern-bound encoding needs a single topology");
        model.max_shape = {topo, max_k};
    } else {
        model.max_shape = {model.shapes.front().topology, max_k};
        model.sg_shape = SgShape::for_max_k(max_k);
    }

    model.log_min = *std::min_element(logs.begin(), logs.end());
    model.log_max = *std::max_element(logs.begin(), logs.end());
    const bool flat = !(model.log_max > model.log_min);
    std::vector<double> target(logs.size(), 0.5);
    if (!flat)
        for (std::size_t i = 0; i < logs.size(); ++i) target[i] = (logs[i] - model.log_min) / (model.log_max - model.log_min);

    const std::size_t width = model.input_width();
    const std::size_t n = patterns.size();
    nn::Tensor inputs = nn::Tensor::matrix(n, width);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = model.encode(patterns[i]);
        std::copy(x.begin(), x.end(), inputs.row(i).begin());
    }

    Rng rng(config.seed);
    std::size_t net_in = width;
    if (encoding == EncodingKind::sg) {
        const std::size_t a = static_cast<std::size_t>(model.sg_shape.n_max) * model.sg_shape.n_max * model.sg_shape.e_max;
        if (a > config.part_threshold) {
            model.parts.part_widths = {a, static_cast<std::size_t>(model.sg_shape.n_max) * spec.w_node,
                                       static_cast<std::size_t>(model.sg_shape.e_max) * spec.w_pred};
            for (auto w : model.parts.part_widths) {
                model.parts.layers.emplace_back(w, config.part_width);
                model.parts.layers.back().init_glorot(rng);
            }
            net_in = model.parts.out_width();
        }
    }
    std::vector<std::size_t> widths{net_in};
    widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
    widths.push_back(1);
    model.net = nn::Mlp(widths, nn::Activation::relu, nn::Activation::sigmoid);
    model.net.init_glorot(rng);

    if (flat) {
        // Every label is equal: u = 0.5 everywhere and unscale() returns that card
        // for any output, so there is nothing to fit.
        model.loss_curve.assign(config.epochs, 1.0);
        return model;
    }

    nn::Adam adam(parameters(model), {config.learning_rate});
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Forward f;
    nn::Tensor batch_x, d_out;
    std::vector<double> batch_u, grad;
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);
        double epoch_total = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t bs = std::min(config.batch_size, n - start);
            batch_x.resize(bs, width);
            batch_u.resize(bs);
            for (std::size_t j = 0; j < bs; ++j) {
                auto src = inputs.row(order[start + j]);
                std::copy(src.begin(), src.end(), batch_x.row(j).begin());
                batch_u[j] = target[order[start + j]];
            }
            adam.zero_grad();
            const auto &out = run_forward(model, batch_x, f);
            const double loss = nn::qerror_loss(out.values(), batch_u, model.log_min, model.log_max, grad);
            epoch_total += loss * static_cast<double>(bs);
            d_out.resize(bs, 1);
            std::copy(grad.begin(), grad.end(), d_out.data());
            run_backward(model, f, d_out);
            adam.step();
        }
        model.loss_curve.push_back(epoch_total / static_cast<double>(n));
    }
    return model;
}

EstimateS estimate_s(const LmkgSModel &model, const QueryPattern &qp) {
    const auto canon = canonicalize_pattern(qp);
    if (!model.supports(canon.shape()))
        throw Error(ErrorCode::no_route, "model does not cover " + to_string(canon.shape()));
    if (!within_domain(canon, model.spec)) return {1.0, true};
    const auto x = model.encode(canon);
    nn::Tensor X = nn::Tensor::matrix(1, x.size());
    std::copy(x.begin(), x.end(), X.data());
    const double u = model.predict_scaled(X)[0];
    const double y = model.unscale(u);
    return {std::max(1.0, y), false};
}

} // namespace lmkg

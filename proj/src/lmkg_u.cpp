#include "lmkg/lmkg_u.hpp"

#include "lmkg/error.hpp"
#include "lmkg/nn/adam.hpp"
#include "lmkg/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace lmkg {

std::uint32_t PositionVocab::index_of(std::uint32_t id) const {
    const auto it = std::lower_bound(ids.begin(), ids.end(), id);
    return it != ids.end() && *it == id ? static_cast<std::uint32_t>(it - ids.begin()) : unk();
}

std::optional<std::uint32_t> PositionVocab::id_at(std::uint32_t index) const {
    if (index < ids.size()) return ids[index];
    if (index == unk()) return std::nullopt;
    throw Error(ErrorCode::out_of_range, "vocabulary index " + std::to_string(index) + " out of range");
}

const char *to_string(ArOrder o) { return o == ArOrder::slot_order ? "slot-order" : "predicates-first"; }

ArOrder parse_ar_order(std::string_view s) {
    if (s == "slot-order" || s == "slot_order") return ArOrder::slot_order;
    if (s == "predicates-first" || s == "predicates_first") return ArOrder::predicates_first;
    throw Error(ErrorCode::invalid_argument, "unknown autoregressive order '" + std::string(s) + "'");
}

std::vector<std::uint32_t> autoregressive_order(Shape shape, ArOrder order) {
    const std::uint32_t D = 2 * shape.k + 1;
    std::vector<std::uint32_t> out;
    if (order == ArOrder::slot_order) {
        out.resize(D);
        std::iota(out.begin(), out.end(), 0u);
        return out;
    }
    for (std::uint32_t i = 1; i < D; i += 2) out.push_back(i);
    if (shape.topology == Topology::star) {
        for (std::uint32_t i = 2; i < D; i += 2) out.push_back(i);
        out.push_back(0);
    } else {
        out.push_back(0);
        out.push_back(D - 1);
        for (std::uint32_t i = 2; i + 1 < D; i += 2) out.push_back(i);
    }
    return out;
}

void TrainConfigU::validate() const {
    if (epochs < 1) throw Error(ErrorCode::invalid_argument, "epochs must be >= 1");
    if (batch_size < 1) throw Error(ErrorCode::invalid_argument, "batch size must be >= 1");
    if (hidden < 1 || embed_dim < 1) throw Error(ErrorCode::invalid_argument, "widths must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::invalid_argument, "learning rate must be positive");
}

std::size_t LmkgUModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto *l : net.layers()) n += l->weights().size() + l->bias().size();
    for (std::size_t p = 0; p < embeddings.size(); ++p) n += embeddings[p].size() + out_bias[p].size();
    return n;
}

std::vector<std::uint32_t> LmkgUModel::indices_of(const QueryPattern &instance) const {
    if (instance.shape() != shape || instance.slot_count() != positions())
        throw Error(ErrorCode::shape_mismatch, "pattern " + to_string(instance.shape()) + " does not match model " +
                                                   to_string(shape));
    std::vector<std::uint32_t> idx(positions());
    for (std::uint32_t i = 0; i < positions(); ++i) {
        const auto &slot = instance.slot(i);
        if (slot.is_var()) throw Error(ErrorCode::invalid_argument, "instance has an unbound slot");
        idx[i] = vocabs[i].index_of(slot.id());
    }
    return idx;
}

namespace {

constexpr std::uint32_t kUnset = UINT32_MAX;

void embed(const LmkgUModel &m, nn::Tensor &X, std::size_t row, std::uint32_t pos, std::uint32_t idx) {
    const std::size_t E = m.config.embed_dim;
    double *dst = X.data() + row * X.cols() + pos * E;
    if (idx == kUnset) {
        std::fill(dst, dst + E, 0.0);
        return;
    }
    if (idx >= m.vocabs[pos].size()) throw Error(ErrorCode::out_of_range, "vocabulary index out of range");
    const double *src = m.embeddings[pos].data() + idx * E;
    std::copy(src, src + E, dst);
}

// logits[r][j] = z[r] . emb[j] + bias[j] for one position; z rows have stride z_stride.
// Tiled over the vocabulary so a block of embeddings stays in cache across rows.
void position_logits(const LmkgUModel &m, std::uint32_t pos, const double *z, std::size_t z_stride, std::size_t rows,
                     double *logits) {
    constexpr std::size_t kTile = 128;
    const std::size_t E = m.config.embed_dim;
    const std::size_t V = m.vocabs[pos].size();
    const double *emb = m.embeddings[pos].data();
    const double *bias = m.out_bias[pos].data();
    const auto tiles = static_cast<std::ptrdiff_t>((V + kTile - 1) / kTile);
#pragma omp parallel for schedule(static) if (rows * V * E >= (1u << 16))
    for (std::ptrdiff_t t = 0; t < tiles; ++t) {
        const std::size_t j0 = static_cast<std::size_t>(t) * kTile;
        const std::size_t w = std::min(V, j0 + kTile) - j0;
        // transposed tile: et[c * w + j] = emb[j0 + j][c]
        std::vector<double> et(E * w);
        for (std::size_t j = 0; j < w; ++j)
            for (std::size_t c = 0; c < E; ++c) et[c * w + j] = emb[(j0 + j) * E + c];
        for (std::size_t r = 0; r < rows; ++r) {
            const double *zr = z + r * z_stride;
            double *out = logits + r * V + j0;
            std::copy(bias + j0, bias + j0 + w, out);
            for (std::size_t c = 0; c < E; ++c) {
                const double a = zr[c];
                const double *e = et.data() + c * w;
#pragma omp simd
                for (std::size_t j = 0; j < w; ++j) out[j] += a * e[j];
            }
        }
    }
}

std::vector<std::uint32_t> ranks_of(const LmkgUModel &m) {
    std::vector<std::uint32_t> rank(m.positions());
    for (std::uint32_t r = 0; r < m.order.size(); ++r) rank[m.order[r]] = r;
    return rank;
}

// Conditional at `pos` for every row of X (rows x V, softmax-normalised).
void conditionals(const LmkgUModel &m, const nn::Tensor &X, std::uint32_t pos, nn::ResMade::Cache &cache, nn::Tensor &z,
                  nn::Tensor &probs) {
    const std::size_t E = m.config.embed_dim;
    const std::size_t V = m.vocabs[pos].size();
    const std::size_t off = m.net.out_offset(pos);
    m.net.forward_columns(X, off, off + E, z, cache);
    probs.resize(X.rows(), V);
    position_logits(m, pos, z.data(), E, X.rows(), probs.data());
    for (std::size_t r = 0; r < X.rows(); ++r) nn::softmax(probs.row(r), probs.row(r));
}

std::uint32_t draw(std::span<const double> p, Rng &rng) {
    const double u = uniform_unit(rng);
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        acc += p[j];
        if (u < acc) return static_cast<std::uint32_t>(j);
    }
    // Rounding left u above the total; take the last entry with mass.
    for (std::size_t j = p.size(); j-- > 0;)
        if (p[j] > 0.0) return static_cast<std::uint32_t>(j);
    return 0;
}

} // namespace

LmkgUModel make_u_model(std::vector<PositionVocab> vocabs, const TrainConfigU &config, std::vector<std::uint32_t> order) {
    config.validate();
    if (vocabs.empty()) throw Error(ErrorCode::invalid_argument, "model needs at least one position");
    LmkgUModel m;
    m.config = config;
    m.vocabs = std::move(vocabs);
    const auto D = m.positions();
    const std::size_t E = config.embed_dim;

    nn::ResMadeConfig rc;
    rc.in_widths.assign(D, E);
    rc.out_widths.assign(D, E);
    rc.hidden = config.hidden;
    rc.blocks = config.blocks;
    rc.seed = config.seed;
    rc.order = std::move(order);
    m.net = nn::ResMade(rc);
    m.order = m.net.plan().order;

    Rng init(derive_seed(config.seed, 1));
    m.net.init_glorot(init);
    const double limit = std::sqrt(3.0 / static_cast<double>(E));
    for (std::uint32_t p = 0; p < D; ++p) {
        std::vector<double> emb(static_cast<std::size_t>(m.vocabs[p].size()) * E);
        for (auto &v : emb) v = (2.0 * uniform_unit(init) - 1.0) * limit;
        m.embeddings.push_back(std::move(emb));
        m.out_bias.emplace_back(m.vocabs[p].size(), 0.0);
    }
    return m;
}

void fit_u(LmkgUModel &m, std::span<const std::uint32_t> rows) {
    const std::uint32_t D = m.positions();
    const std::size_t E = m.config.embed_dim;
    if (rows.empty() || rows.size() % D != 0) throw Error(ErrorCode::shape_mismatch, "training rows do not match positions");
    const std::size_t n = rows.size() / D;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i] >= m.vocabs[i % D].size()) throw Error(ErrorCode::out_of_range, "training index outside vocabulary");

    std::vector<std::vector<double>> g_emb, g_bias;
    for (std::uint32_t p = 0; p < D; ++p) {
        g_emb.emplace_back(m.embeddings[p].size(), 0.0);
        g_bias.emplace_back(m.out_bias[p].size(), 0.0);
    }
    std::vector<nn::ParamRef> params;
    m.net.collect(params);
    for (std::uint32_t p = 0; p < D; ++p) {
        params.push_back({m.embeddings[p], g_emb[p]});
        params.push_back({m.out_bias[p], g_bias[p]});
    }
    nn::Adam adam(params, {m.config.learning_rate});

    std::vector<std::size_t> group_sizes(D), group_off(D + 1, 0);
    for (std::uint32_t p = 0; p < D; ++p) {
        group_sizes[p] = m.vocabs[p].size();
        group_off[p + 1] = group_off[p] + group_sizes[p];
    }

    Rng rng(derive_seed(m.config.seed, 3));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    nn::Tensor X, logits, d_logits, dY, dX;
    nn::ResMade::Cache cache;
    std::vector<std::uint32_t> ids;
    m.loss_curve.clear();
    for (std::uint32_t epoch = 0; epoch < m.config.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);
        double total = 0.0;
        for (std::size_t start = 0; start < n; start += m.config.batch_size) {
            const std::size_t bs = std::min(m.config.batch_size, n - start);
            X.resize(bs, D * E);
            ids.resize(bs * D);
            for (std::size_t b = 0; b < bs; ++b)
                for (std::uint32_t p = 0; p < D; ++p) {
                    const auto idx = rows[order[start + b] * D + p];
                    ids[b * D + p] = idx;
                    embed(m, X, b, p, idx);
                }
            adam.zero_grad();
            const auto &Y = m.net.forward(X, cache);
            logits.resize(bs, group_off[D]);
            {
                nn::Tensor block;
                for (std::uint32_t p = 0; p < D; ++p) {
                    block.resize(bs, group_sizes[p]);
                    position_logits(m, p, Y.data() + m.net.out_offset(p), Y.cols(), bs, block.data());
                    for (std::size_t b = 0; b < bs; ++b)
                        std::copy(block.row(b).begin(), block.row(b).end(), logits.row(b).begin() + group_off[p]);
                }
            }
            total += nn::nll_loss(logits, group_sizes, ids, d_logits) * static_cast<double>(bs);

            dY.resize(bs, Y.cols());
            dY.fill(0.0);
            for (std::uint32_t p = 0; p < D; ++p) {
                const std::size_t V = group_sizes[p];
                const std::size_t yo = m.net.out_offset(p);
                const double *emb = m.embeddings[p].data();
                const auto nb = static_cast<std::ptrdiff_t>(bs);
#pragma omp parallel for schedule(static) if (bs * V * E >= (1u << 16))
                for (std::ptrdiff_t b = 0; b < nb; ++b) {
                    const double *g = d_logits.data() + static_cast<std::size_t>(b) * d_logits.cols() + group_off[p];
                    double *dz = dY.data() + static_cast<std::size_t>(b) * dY.cols() + yo;
                    for (std::size_t j = 0; j < V; ++j) {
                        const double gj = g[j];
                        const double *e = emb + j * E;
                        for (std::size_t c = 0; c < E; ++c) dz[c] += gj * e[c];
                    }
                }
                double *ge = g_emb[p].data();
                double *gb = g_bias[p].data();
                const auto nv = static_cast<std::ptrdiff_t>(V);
#pragma omp parallel for schedule(static) if (bs * V * E >= (1u << 16))
                for (std::ptrdiff_t jj = 0; jj < nv; ++jj) {
                    const auto j = static_cast<std::size_t>(jj);
                    for (std::size_t b = 0; b < bs; ++b) {
                        const double gj = d_logits.data()[b * d_logits.cols() + group_off[p] + j];
                        if (gj == 0.0) continue;
                        const double *z = Y.data() + b * Y.cols() + yo;
                        for (std::size_t c = 0; c < E; ++c) ge[j * E + c] += gj * z[c];
                        gb[j] += gj;
                    }
                }
            }
            m.net.backward(cache, dY, &dX);
            for (std::size_t b = 0; b < bs; ++b)
                for (std::uint32_t p = 0; p < D; ++p) {
                    const double *src = dX.data() + b * dX.cols() + p * E;
                    double *dst = g_emb[p].data() + static_cast<std::size_t>(ids[b * D + p]) * E;
                    for (std::size_t c = 0; c < E; ++c) dst[c] += src[c];
                }
            adam.step();
        }
        m.loss_curve.push_back(total / static_cast<double>(n));
    }
}

LmkgUModel train_u(std::span<const QueryPattern> instances, const KnowledgeGraph &kg, const TrainConfigU &config,
                   SampleMode mode) {
    if (instances.empty()) throw Error(ErrorCode::invalid_argument, "training set is empty");
    const Shape shape = instances.front().shape();
    const std::uint32_t D = 2 * shape.k + 1;
    std::vector<std::vector<std::uint32_t>> seen(D);
    std::vector<QueryPattern> canon;
    canon.reserve(instances.size());
    for (const auto &inst : instances) {
        if (inst.shape() != shape)
            throw Error(ErrorCode::shape_mismatch,
                        "mixed shapes in training data: " + to_string(shape) + " and " + to_string(inst.shape()));
        if (inst.var_count() != 0) throw Error(ErrorCode::invalid_argument, "unsupervised training needs bound instances");
        canon.push_back(canonicalize_pattern(inst));
        for (std::uint32_t i = 0; i < D; ++i) seen[i].push_back(canon.back().slot(i).id());
    }
    std::vector<PositionVocab> vocabs(D);
    for (std::uint32_t i = 0; i < D; ++i) {
        std::sort(seen[i].begin(), seen[i].end());
        seen[i].erase(std::unique(seen[i].begin(), seen[i].end()), seen[i].end());
        vocabs[i].ids = std::move(seen[i]);
    }
    LmkgUModel m = make_u_model(std::move(vocabs), config, autoregressive_order(shape, config.order));
    m.shape = shape;
    m.population = population_size(kg, shape);
    m.train_mode = mode;

    std::vector<std::uint32_t> rows;
    rows.reserve(canon.size() * D);
    for (const auto &c : canon) {
        const auto idx = m.indices_of(c);
        rows.insert(rows.end(), idx.begin(), idx.end());
    }
    fit_u(m, rows);
    return m;
}

std::vector<double> conditional(const LmkgUModel &m, std::span<const std::uint32_t> indices, std::uint32_t position) {
    const auto D = m.positions();
    if (indices.size() != D || position >= D) throw Error(ErrorCode::shape_mismatch, "index row does not match model");
    const auto rank = ranks_of(m);
    nn::Tensor X = nn::Tensor::matrix(1, D * m.config.embed_dim);
    for (std::uint32_t p = 0; p < D; ++p) embed(m, X, 0, p, rank[p] < rank[position] ? indices[p] : kUnset);
    nn::ResMade::Cache cache;
    nn::Tensor z, probs;
    conditionals(m, X, position, cache, z, probs);
    return {probs.values().begin(), probs.values().end()};
}

double density_indices(const LmkgUModel &m, std::span<const std::uint32_t> indices) {
    const auto D = m.positions();
    if (indices.size() != D) throw Error(ErrorCode::shape_mismatch, "index row does not match model");
    nn::Tensor X = nn::Tensor::matrix(1, D * m.config.embed_dim);
    for (std::uint32_t p = 0; p < D; ++p) embed(m, X, 0, p, indices[p]);
    nn::ResMade::Cache cache;
    const auto &Y = m.net.forward(X, cache);
    double prob = 1.0;
    std::vector<double> logits;
    for (std::uint32_t p = 0; p < D; ++p) {
        logits.resize(m.vocabs[p].size());
        position_logits(m, p, Y.data() + m.net.out_offset(p), Y.cols(), 1, logits.data());
        nn::softmax(logits, logits);
        prob *= logits[indices[p]];
    }
    return prob;
}

double density(const LmkgUModel &m, const QueryPattern &instance) {
    const auto idx = m.indices_of(canonicalize_pattern(instance));
    return density_indices(m, idx);
}

double sampled_mass(const LmkgUModel &m, std::span<const std::optional<std::uint32_t>> bound, std::size_t samples,
                    Rng &rng) {
    const auto D = m.positions();
    if (bound.size() != D) throw Error(ErrorCode::shape_mismatch, "bound vector does not match model");
    if (samples < 1) throw Error(ErrorCode::invalid_argument, "need at least one sample");
    for (std::uint32_t p = 0; p < D; ++p)
        if (bound[p] && *bound[p] >= m.vocabs[p].size()) throw Error(ErrorCode::out_of_range, "bound index outside vocabulary");

    // Positions after the last bound one only ever multiply the weight by 1.
    std::size_t last = 0;
    bool any_bound = false;
    for (std::size_t r = 0; r < D; ++r)
        if (bound[m.order[r]]) {
            last = r;
            any_bound = true;
        }
    if (!any_bound) return 1.0;

    const std::size_t E = m.config.embed_dim;
    nn::ResMade::Cache cache;
    nn::Tensor z, probs;

    // Until the first unbound position every particle is identical: run one row.
    nn::Tensor X1 = nn::Tensor::matrix(1, D * E);
    double shared = 1.0;
    std::size_t r = 0;
    for (; r <= last && bound[m.order[r]]; ++r) {
        const auto pos = m.order[r];
        conditionals(m, X1, pos, cache, z, probs);
        shared *= probs[*bound[pos]];
        if (shared == 0.0) return 0.0;
        embed(m, X1, 0, pos, *bound[pos]);
    }
    if (r > last) return shared;
    std::vector<std::size_t> unbound_ranks;

    // Particles that drew the same values so far share a conditional, so
    // each step runs the network once per distinct prefix.
    std::vector<std::vector<std::uint32_t>> drawn(samples);
    std::vector<std::size_t> group(samples, 0);
    nn::Tensor X;
    std::vector<double> weights(samples, shared);
    for (; r <= last; ++r) {
        const auto pos = m.order[r];
        std::map<std::vector<std::uint32_t>, std::size_t> ids;
        std::vector<std::size_t> first;
        for (std::size_t s = 0; s < samples; ++s) {
            const auto [it, fresh] = ids.try_emplace(drawn[s], first.size());
            if (fresh) first.push_back(s);
            group[s] = it->second;
        }
        X.resize(first.size(), D * E);
        for (std::size_t g = 0; g < first.size(); ++g) {
            std::copy(X1.row(0).begin(), X1.row(0).end(), X.row(g).begin());
            const auto &d = drawn[first[g]];
            for (std::size_t i = 0; i < d.size(); ++i) embed(m, X, g, m.order[unbound_ranks[i]], d[i]);
        }
        conditionals(m, X, pos, cache, z, probs);
        if (bound[pos]) {
            for (std::size_t s = 0; s < samples; ++s) weights[s] *= probs.row(group[s])[*bound[pos]];
            embed(m, X1, 0, pos, *bound[pos]);
        } else {
            for (std::size_t s = 0; s < samples; ++s) drawn[s].push_back(draw(probs.row(group[s]), rng));
            unbound_ranks.push_back(r);
        }
    }
    double total = 0.0;
    for (double w : weights) total += w;
    return total / static_cast<double>(samples);
}

EstimateU estimate_u(const LmkgUModel &m, const QueryPattern &qp, std::size_t samples, Rng &rng) {
    if (samples < 1) throw Error(ErrorCode::invalid_argument, "need at least one sample");
    const auto canon = canonicalize_pattern(qp);
    if (canon.shape() != m.shape)
        throw Error(ErrorCode::no_route, "model covers " + to_string(m.shape) + ", not " + to_string(canon.shape()));
    std::vector<std::optional<std::uint32_t>> bound(m.positions());
    for (std::uint32_t i = 0; i < m.positions(); ++i)
        if (canon.slot(i).is_bound()) bound[i] = m.vocabs[i].index_of(canon.slot(i).id());
    EstimateU est;
    est.mass = sampled_mass(m, bound, samples, rng);
    if (est.mass == 0.0) {
        est.zero_mass = true;
        est.value = 1.0;
        return est;
    }
    est.value = std::max(1.0, static_cast<double>(m.population) * est.mass);
    return est;
}

} // namespace lmkg

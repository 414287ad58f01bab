#include "lmkg/evaluation.hpp"

#include "lmkg/binary_io.hpp"
#include "lmkg/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

namespace lmkg {

double q_error(double estimate, double truth) {
    const double e = std::max(estimate, 1.0);
    const double y = std::max(truth, 1.0);
    return e >= y ? e / y : y / e;
}

std::uint32_t result_bucket(std::uint64_t truth) {
    std::uint32_t i = 0;
    for (std::uint64_t hi = 5; truth >= hi; ++i) {
        if (hi > UINT64_MAX / 5) return i + 1;
        hi *= 5;
    }
    return i;
}

QErrorStats summarize(std::vector<double> q) {
    QErrorStats s;
    s.count = q.size();
    if (q.empty()) return s;
    std::sort(q.begin(), q.end());
    double total = 0;
    for (double v : q) total += v;
    s.mean = total / static_cast<double>(q.size());
    auto pct = [&](double p) {
        const double pos = p * static_cast<double>(q.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, q.size() - 1);
        return q[lo] + (pos - static_cast<double>(lo)) * (q[hi] - q[lo]);
    };
    s.median = pct(0.5);
    s.p95 = pct(0.95);
    s.p99 = pct(0.99);
    s.max = q.back();
    return s;
}

namespace {

nlohmann::json stats_json(const QErrorStats &s) {
    return {{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"p95", s.p95}, {"p99", s.p99}, {"max", s.max}};
}

std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::uint64_t pow5(std::uint32_t i) {
    std::uint64_t v = 1;
    for (std::uint32_t j = 0; j < i; ++j) v = v > UINT64_MAX / 5 ? UINT64_MAX : v * 5;
    return v;
}

} // namespace

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "index,query,topology,k,truth,estimate,qerror,micros,provenance,model,floored,error\n";
    for (const auto &r : records)
        out << r.index << ',' << csv_field(r.key) << ',' << to_string(r.shape.topology) << ',' << r.shape.k << ','
            << r.truth << ',' << r.estimate << ',' << r.qerror << ',' << r.micros << ',' << r.provenance << ','
            << csv_field(r.model) << ',' << (r.floored ? 1 : 0) << ',' << csv_field(r.error) << '\n';
    return out.str();
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json b = nlohmann::json::array();
    for (const auto &bk : buckets) {
        auto j = stats_json(bk.stats);
        j["bucket"] = bk.index;
        j["lo"] = bk.lo;
        j["hi"] = bk.hi;
        b.push_back(j);
    }
    nlohmann::json m = nlohmann::json::array();
    for (const auto &ms : models) m.push_back({{"name", ms.name}, {"kind", to_string(ms.kind)}, {"bytes", ms.bytes}});
    std::vector<double> micros;
    for (const auto &r : records)
        if (r.error.empty()) micros.push_back(r.micros);
    const auto t = summarize(micros);
    return {{"config", config},
            {"queries", records.size()},
            {"evaluated", overall.count},
            {"failures", failures},
            {"qerror", stats_json(overall)},
            {"micros", {{"mean", t.mean}, {"median", t.median}, {"p95", t.p95}, {"max", t.max}}},
            {"buckets", b},
            {"models", m}};
}

void EvalReport::write(const std::string &prefix) const {
    const auto csv = to_csv();
    write_file(prefix + ".csv", std::span(reinterpret_cast<const std::uint8_t *>(csv.data()), csv.size()));
    const auto js = to_json().dump(2) + "\n";
    write_file(prefix + ".json", std::span(reinterpret_cast<const std::uint8_t *>(js.data()), js.size()));
}

EvalReport evaluate_workload(const ModelRegistry &registry, const OutlierBuffer *buffer,
                             std::span<const DatasetRecord> test, const EstimateOptions &options) {
    if (test.empty()) throw Error(ErrorCode::invalid_argument, "test set is empty");
    for (const auto &r : test)
        if (!r.card) throw Error(ErrorCode::invalid_argument, "test queries need exact cardinalities");

    EvalReport rep;
    rep.records.resize(test.size());
    const auto n = static_cast<std::ptrdiff_t>(test.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        auto &rec = rep.records[i];
        rec.index = i;
        rec.truth = *test[i].card;
        try {
            const auto canon = canonicalize_pattern(test[i].pattern);
            rec.key = canonical_key(canon);
            rec.shape = canon.shape();
            EstimateOptions opt = options;
            opt.seed = derive_seed(options.seed, i);
            // warm-up so the timed call sees hot caches and allocated buffers
            (void)estimate(registry, buffer, canon, opt);
            const auto t0 = std::chrono::steady_clock::now();
            const auto e = estimate(registry, buffer, canon, opt);
            const auto t1 = std::chrono::steady_clock::now();
            rec.micros = std::chrono::duration<double, std::micro>(t1 - t0).count();
            rec.estimate = e.value;
            rec.provenance = to_string(e.provenance);
            rec.model = e.model;
            rec.floored = e.floored;
            rec.qerror = q_error(e.value, static_cast<double>(rec.truth));
            if (!std::isfinite(rec.qerror)) throw Error(ErrorCode::non_finite, "non-finite q-error");
        } catch (const std::exception &ex) {
            rec.error = ex.what();
        }
    }

    std::vector<double> all;
    std::map<std::uint32_t, std::vector<double>> by_bucket;
    for (const auto &r : rep.records) {
        if (!r.error.empty()) {
            ++rep.failures;
            continue;
        }
        all.push_back(r.qerror);
        by_bucket[result_bucket(r.truth)].push_back(r.qerror);
    }
    rep.overall = summarize(std::move(all));
    for (auto &[idx, q] : by_bucket) rep.buckets.push_back({idx, pow5(idx), pow5(idx + 1), summarize(std::move(q))});
    for (const auto &e : registry.entries()) rep.models.push_back({e.name, e.kind, e.bytes});
    rep.config = {{"kind", options.kind ? to_string(*options.kind) : "auto"},
                  {"use_buffer", options.use_buffer},
                  {"buffer_size", buffer ? buffer->size() : 0},
                  {"samples", options.samples},
                  {"seed", options.seed}};
    return rep;
}

} // namespace lmkg

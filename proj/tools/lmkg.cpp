// Command-line front end: ingest, sample, train, estimate, eval, info.

#include "lmkg/binary_io.hpp"
#include "lmkg/dataset.hpp"
#include "lmkg/error.hpp"
#include "lmkg/evaluation.hpp"
#include "lmkg/model_file.hpp"
#include "lmkg/registry.hpp"
#include "lmkg/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace lmkg;
using nlohmann::json;

namespace {

std::string read_text(const std::string &path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    const auto bytes = read_file(path);
    return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path &path, const std::string &text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

std::vector<std::size_t> parse_widths(const std::string &s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(item, &pos);
        } catch (const std::exception &) {
            pos = 0;
        }
        if (pos != item.size() || v == 0) throw Error(ErrorCode::invalid_argument, "bad layer width '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw Error(ErrorCode::invalid_argument, "--layers needs at least one width");
    return out;
}

// ---- ingest

struct IngestArgs {
    std::string input, out, on_error = "fail";
};

int run_ingest(const IngestArgs &a) {
    const auto mode = a.on_error == "skip" ? OnError::skip_and_count : OnError::fail;
    auto result = ingest_ntriples_file(a.input, mode);
    save_snapshot(result.kg, a.out);
    const auto st = graph_stats(result.kg);
    std::cout << json{{"lines", result.report.lines_read},
                      {"triples", result.report.triples_kept},
                      {"duplicates", result.report.duplicates},
                      {"malformed", result.report.malformed},
                      {"nodes", st.node_count},
                      {"predicates", st.pred_count}}
                     .dump()
              << "\n";
    return 0;
}

// ---- generate

struct GenerateArgs {
    std::string kind = "university", out;
    std::size_t triples = 50'000, nodes = 500, preds = 10;
    double skew = 1.0;
    std::uint64_t seed = 0;
};

int run_generate(const GenerateArgs &a) {
    KnowledgeGraph kg;
    if (a.kind == "university") {
        UniversityKgConfig c;
        c.target_triples = a.triples;
        c.skew = a.skew;
        c.seed = a.seed;
        kg = generate_university_kg(c);
    } else {
        kg = generate_random_kg({a.nodes, a.preds, a.triples, a.skew, a.seed});
    }
    write_text(a.out, to_ntriples(kg));
    std::cerr << kg.triple_count() << " triples, " << kg.node_count() << " nodes, " << kg.pred_count()
              << " predicates\n";
    return 0;
}

// ---- sample

struct SampleArgs {
    std::string kg, topology, mode = "uniform", out, exclude;
    std::uint32_t size = 2;
    std::size_t count = 1000;
    bool supervised = false, unsupervised = false, allow_unbound_preds = false;
    double mask_prob = 0.5;
    std::uint32_t min_unbound = 1;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

int run_sample(const SampleArgs &a) {
    if (a.supervised && a.unsupervised) throw Error(ErrorCode::invalid_argument, "choose --supervised or --unsupervised");
    const auto kg = load_snapshot(a.kg);
    SamplerConfig c;
    c.shape = {parse_topology(a.topology), a.size};
    c.count = a.count;
    c.mode = parse_sample_mode(a.mode);
    c.supervised = !a.unsupervised;
    c.mask = {a.mask_prob, a.allow_unbound_preds, a.min_unbound};
    c.seed = a.seed;
    c.workers = a.workers;
    std::unordered_set<std::string> exclude;
    if (!a.exclude.empty())
        for (const auto &r : read_dataset(a.exclude, kg)) exclude.insert(canonical_key(canonicalize_pattern(r.pattern)));
    const auto records = generate_training_set(kg, c, exclude.empty() ? nullptr : &exclude);
    auto meta = sampler_config_to_json(c);
    meta["kg"] = fs::absolute(a.kg).string();
    meta["records"] = records.size();
    if (!a.exclude.empty()) meta["exclude"] = a.exclude;
    write_dataset(a.out, records, kg, meta);
    std::cerr << records.size() << " records written to " << a.out << "\n";
    return 0;
}

// ---- train

struct TrainArgs {
    std::string kg, kind, encoding = "sg", out, layers, order = "predicates-first";
    std::vector<std::string> data;
    std::optional<std::uint32_t> epochs;
    std::optional<std::size_t> batch;
    std::optional<double> lr;
    std::size_t embed_dim = 32, hidden = 128, blocks = 2;
    std::uint64_t seed = 0;
};

int run_train(const TrainArgs &a) {
    const auto kg = load_snapshot(a.kg);
    std::vector<DatasetRecord> data;
    json metas = json::array();
    for (const auto &path : a.data) {
        auto part = read_dataset(path, kg);
        data.insert(data.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
        metas.push_back({{"path", fs::absolute(path).string()}, {"meta", read_dataset_meta(path)}});
    }
    const json notes = {{"kg", fs::absolute(a.kg).string()}, {"data", metas}};
    const auto kind = parse_model_kind(a.kind);
    AnyModel model;
    if (kind == ModelKind::lmkg_s) {
        TrainConfigS c;
        if (a.epochs) c.epochs = *a.epochs;
        if (a.batch) c.batch_size = *a.batch;
        if (a.lr) c.learning_rate = *a.lr;
        if (!a.layers.empty()) c.hidden = parse_widths(a.layers);
        c.seed = a.seed;
        auto m = train_s(data, parse_encoding_kind(a.encoding), EncodingSpec::for_graph(kg), c);
        m.notes = notes;
        std::cerr << "final training q-error " << m.loss_curve.back() << "\n";
        model = std::move(m);
    } else {
        if (parse_encoding_kind(a.encoding) != EncodingKind::pattern_bound)
            throw Error(ErrorCode::invalid_argument, "LMKG-U uses the pattern-bound encoding (pass --encoding pattern-bound)");
        TrainConfigU c;
        if (a.epochs) c.epochs = *a.epochs;
        if (a.batch) c.batch_size = *a.batch;
        if (a.lr) c.learning_rate = *a.lr;
        c.embed_dim = a.embed_dim;
        c.hidden = a.hidden;
        c.blocks = a.blocks;
        c.order = parse_ar_order(a.order);
        c.seed = a.seed;
        std::vector<QueryPattern> instances;
        for (auto &r : data) instances.push_back(std::move(r.pattern));
        SampleMode mode = SampleMode::uniform;
        if (!metas.empty() && metas[0]["meta"].contains("mode"))
            mode = parse_sample_mode(metas[0]["meta"]["mode"].get<std::string>());
        auto m = train_u(instances, kg, c, mode);
        m.notes = notes;
        std::cerr << "final training NLL " << m.loss_curve.back() << "\n";
        model = std::move(m);
    }
    save_model(model, a.out);
    std::cerr << "model written to " << a.out << " (" << fs::file_size(a.out) << " bytes)\n";
    return 0;
}

// ---- build-buffer

struct BufferArgs {
    std::string kg, out;
    std::vector<std::string> data;
    std::size_t capacity = OutlierBuffer::kDefaultCapacity;
};

int run_build_buffer(const BufferArgs &a) {
    const auto kg = load_snapshot(a.kg);
    std::vector<DatasetRecord> data;
    for (const auto &path : a.data) {
        auto part = read_dataset(path, kg);
        data.insert(data.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    const auto buf = OutlierBuffer::from_training(data, a.capacity);
    buf.save(a.out);
    std::cerr << buf.size() << " buffered queries written to " << a.out << "\n";
    return 0;
}

// ---- shared by estimate / eval

struct ServeArgs {
    std::string models, kg, kind;
    bool use_buffer = false;
    std::size_t samples = kDefaultSamples;
    std::uint64_t seed = 0;
};

struct Serving {
    ModelRegistry registry;
    std::optional<OutlierBuffer> buffer;
    KnowledgeGraph kg;
    EstimateOptions options;
};

Serving open_serving(const ServeArgs &a) {
    Serving s;
    s.registry = ModelRegistry::load_dir(a.models);
    if (s.registry.entries().empty()) throw Error(ErrorCode::no_route, "no .lmkgm models in " + a.models);
    std::string kg_path = a.kg;
    if (kg_path.empty()) {
        const auto &first = *s.registry.entries().front().model;
        const auto &notes = std::holds_alternative<LmkgSModel>(first) ? std::get<LmkgSModel>(first).notes
                                                                      : std::get<LmkgUModel>(first).notes;
        kg_path = notes.value("kg", "");
        if (kg_path.empty()) throw Error(ErrorCode::invalid_argument, "models do not record their KG; pass --kg");
    }
    s.kg = load_snapshot(kg_path);
    const auto buffer_path = fs::path(a.models) / "buffer.json";
    if (a.use_buffer) {
        if (!fs::exists(buffer_path)) throw Error(ErrorCode::io, "--use-buffer given but " + buffer_path.string() + " is missing");
        s.buffer = OutlierBuffer::load(buffer_path);
    }
    if (!a.kind.empty()) s.options.kind = parse_model_kind(a.kind);
    s.options.use_buffer = a.use_buffer;
    s.options.samples = a.samples;
    s.options.seed = a.seed;
    if (a.samples < 1) throw Error(ErrorCode::invalid_argument, "--samples must be >= 1");
    return s;
}

// ---- estimate

struct EstimateArgs {
    ServeArgs serve;
    std::string query, format = "text";
};

int run_estimate(const EstimateArgs &a) {
    const auto s = open_serving(a.serve);
    const auto text = read_text(a.query);
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') continue;
        json row = {{"query", line}};
        try {
            const auto trimmed = line.substr(line.find_first_not_of(" \t"));
            const QueryPattern qp = trimmed.front() == '{' ? pattern_from_json(json::parse(trimmed), s.kg)
                                                           : parse_query_text(trimmed, s.kg);
            const auto e = estimate(s.registry, s.buffer ? &*s.buffer : nullptr, qp, s.options);
            row["estimate"] = e.value;
            row["provenance"] = to_string(e.provenance);
            row["model"] = e.model;
            row["floored"] = e.floored;
        } catch (const Error &e) {
            if (e.code() != ErrorCode::unknown_term) throw;
            // A term the KG has never seen cannot match anything.
            row["estimate"] = 1.0;
            row["provenance"] = "novel_term";
            row["model"] = "";
            row["floored"] = true;
        }
        if (a.format == "json") {
            std::cout << row.dump() << "\n";
        } else {
            std::cout << row["estimate"].get<double>() << "\t" << row["provenance"].get<std::string>() << "\t"
                      << row["model"].get<std::string>() << "\n";
        }
    }
    return 0;
}

// ---- eval

struct EvalArgs {
    ServeArgs serve;
    std::string test, report;
};

int run_eval(const EvalArgs &a) {
    const auto s = open_serving(a.serve);
    const auto test = read_dataset(a.test, s.kg);
    auto rep = evaluate_workload(s.registry, s.buffer ? &*s.buffer : nullptr, test, s.options);
    rep.config["models"] = fs::absolute(a.serve.models).string();
    rep.config["test"] = fs::absolute(a.test).string();
    rep.write(a.report);
    const auto &o = rep.overall;
    std::cout << "evaluated " << o.count << " queries (" << rep.failures << " failed): mean q-error " << o.mean
              << ", median " << o.median << ", p95 " << o.p95 << ", max " << o.max << "\n";
    for (const auto &b : rep.buckets)
        std::cout << "  [" << b.lo << ", " << b.hi << "): " << b.stats.count << " queries, median " << b.stats.median
                  << "\n";
    return 0;
}

// ---- info

int run_info(const std::string &path) {
    const auto bytes = read_file(path);
    auto header = read_model_header(bytes);
    header["file_bytes"] = bytes.size();
    header["format_version"] = kModelFormatVersion;
    std::cout << header.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Learned cardinality estimation for star and chain queries over RDF knowledge graphs"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto *c_ingest = app.add_subcommand("ingest", "Parse N-Triples (optionally gzipped) into a KG snapshot");
    c_ingest->add_option("--input", ingest.input, "N-Triples file")->required();
    c_ingest->add_option("--on-error", ingest.on_error, "skip or fail on malformed lines")
        ->check(CLI::IsMember({"skip", "fail"}));
    c_ingest->add_option("--out", ingest.out, "snapshot path")->required();

    GenerateArgs gen;
    auto *c_gen = app.add_subcommand("generate", "Write a synthetic KG as N-Triples");
    c_gen->add_option("--kind", gen.kind, "university or random")->check(CLI::IsMember({"university", "random"}));
    c_gen->add_option("--triples", gen.triples, "target triple count");
    c_gen->add_option("--nodes", gen.nodes, "node count (random)");
    c_gen->add_option("--preds", gen.preds, "predicate count (random)");
    c_gen->add_option("--skew", gen.skew, "Zipf exponent");
    c_gen->add_option("--seed", gen.seed)->required();
    c_gen->add_option("--out", gen.out)->required();

    SampleArgs sample;
    auto *c_sample = app.add_subcommand("sample", "Generate a training or test workload");
    c_sample->add_option("--kg", sample.kg)->required();
    c_sample->add_option("--topology", sample.topology)->required()->check(CLI::IsMember({"star", "chain"}));
    c_sample->add_option("--size", sample.size, "triple patterns per query (k)")->required();
    c_sample->add_option("--count", sample.count)->required();
    c_sample->add_option("--mode", sample.mode)->check(CLI::IsMember({"enumerate", "uniform", "random-walk"}));
    c_sample->add_flag("--supervised", sample.supervised, "masked queries with exact cardinalities (default)");
    c_sample->add_flag("--unsupervised", sample.unsupervised, "bound instances without labels");
    c_sample->add_option("--mask-prob", sample.mask_prob);
    c_sample->add_option("--min-unbound", sample.min_unbound);
    c_sample->add_flag("--allow-unbound-preds", sample.allow_unbound_preds);
    c_sample->add_option("--exclude", sample.exclude, "dataset whose queries must not be generated again");
    c_sample->add_option("--workers", sample.workers);
    c_sample->add_option("--seed", sample.seed)->required();
    c_sample->add_option("--out", sample.out)->required();

    TrainArgs train;
    auto *c_train = app.add_subcommand("train", "Train an LMKG-S or LMKG-U model");
    c_train->add_option("--kg", train.kg)->required();
    c_train->add_option("--data", train.data, "dataset (repeatable)")->required();
    c_train->add_option("--model-kind", train.kind)->required()->check(CLI::IsMember({"s", "u"}));
    c_train->add_option("--encoding", train.encoding)->check(CLI::IsMember({"pattern-bound", "sg"}));
    c_train->add_option("--epochs", train.epochs);
    c_train->add_option("--batch-size", train.batch);
    c_train->add_option("--lr", train.lr);
    c_train->add_option("--layers", train.layers, "LMKG-S hidden widths, e.g. 512,512");
    c_train->add_option("--embed-dim", train.embed_dim);
    c_train->add_option("--hidden", train.hidden, "LMKG-U hidden width");
    c_train->add_option("--blocks", train.blocks, "LMKG-U residual blocks");
    c_train->add_option("--order", train.order, "LMKG-U autoregressive order")
        ->check(CLI::IsMember({"predicates-first", "slot-order"}));
    c_train->add_option("--seed", train.seed)->required();
    c_train->add_option("--out", train.out)->required();

    BufferArgs buffer;
    auto *c_buffer = app.add_subcommand("build-buffer", "Store the largest training queries exactly");
    c_buffer->add_option("--kg", buffer.kg)->required();
    c_buffer->add_option("--data", buffer.data, "labelled dataset (repeatable)")->required();
    c_buffer->add_option("--capacity", buffer.capacity);
    c_buffer->add_option("--out", buffer.out, "usually <models>/buffer.json")->required();

    auto add_serve = [](CLI::App *c, ServeArgs &s) {
        c->add_option("--models", s.models, "directory of .lmkgm files")->required();
        c->add_option("--kg", s.kg, "KG snapshot (default: the one recorded in the models)");
        c->add_option("--kind", s.kind, "s or u when both kinds cover a shape")->check(CLI::IsMember({"s", "u"}));
        c->add_flag("--use-buffer", s.use_buffer, "answer buffered queries exactly");
        c->add_option("--samples", s.samples, "LMKG-U forward samples");
        c->add_option("--seed", s.seed);
    };

    EstimateArgs est;
    auto *c_est = app.add_subcommand("estimate", "Estimate cardinalities (one query per line)");
    add_serve(c_est, est.serve);
    c_est->add_option("--query", est.query, "file or - for stdin")->required();
    c_est->add_option("--format", est.format, "output format")->check(CLI::IsMember({"text", "json"}));

    EvalArgs ev;
    auto *c_eval = app.add_subcommand("eval", "Evaluate q-errors on a labelled test set");
    add_serve(c_eval, ev.serve);
    c_eval->add_option("--test", ev.test)->required();
    c_eval->add_option("--report", ev.report, "output prefix for .csv and .json")->required();

    std::string info_path;
    auto *c_info = app.add_subcommand("info", "Describe a model file");
    c_info->add_option("--model", info_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*c_ingest) return run_ingest(ingest);
        if (*c_gen) return run_generate(gen);
        if (*c_sample) return run_sample(sample);
        if (*c_train) return run_train(train);
        if (*c_buffer) return run_build_buffer(buffer);
        if (*c_est) return run_estimate(est);
        if (*c_eval) return run_eval(ev);
        if (*c_info) return run_info(info_path);
    } catch (const Error &e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

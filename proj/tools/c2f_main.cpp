#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "c2f/curriculum/trainer.hpp"
#include "c2f/datagen/dataset_io.hpp"
#include "c2f/datagen/split.hpp"
#include "c2f/error.hpp"
#include "c2f/harness/config.hpp"
#include "c2f/harness/experiment.hpp"
#include "c2f/harness/reports.hpp"
#include "c2f/hierarchy.hpp"
#include "c2f/netcore/checkpoint.hpp"
#include "c2f/rng.hpp"
#include "c2f/similarity.hpp"

namespace fs = std::filesystem;
using namespace c2f;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    bool deterministic = true;
    std::optional<int> threads;
};

void apply_globals(const Globals& g, harness::ExperimentConfig& cfg)
{
    if (g.seed) {
        cfg.seeds = {*g.seed};
    }
    cfg.deterministic = g.deterministic;
    if (g.threads) {
        cfg.threads = *g.threads;
    }
}

void gen_data(const std::string& kind, const fs::path& config, const fs::path& out, const Globals& g)
{
    const nlohmann::json doc = harness::read_json_file(config);
    data::Dataset ds;
    if (kind == "cifar") {
        harness::KeyReader r(doc, "cifar config");
        const fs::path dir = r.get<std::string>("dir", "");
        const auto variant = data::cifar_variant_from_string(r.get<std::string>("variant", "cifar10"));
        const std::string split = r.get<std::string>("split", "train");
        r.finish();
        if (split != "train" && split != "test") {
            throw ValidationError("cifar split must be 'train' or 'test'");
        }
        ds = data::load_cifar_split(dir.is_absolute() ? dir : config.parent_path() / dir, variant, split == "train");
    } else {
        const std::size_t per_class = doc.value("samplesPerClass", std::size_t{0});
        ds = harness::generate(kind, doc, per_class, g.seed.value_or(0));
    }
    data::save_dataset(ds, out);
    std::cout << "wrote " << out.string() << ": N=" << ds.size() << " K=" << ds.num_classes << "\n";
}

void train(const fs::path& config, const fs::path& out, const Globals& g)
{
    auto cfg = harness::load_experiment_config(config);
    apply_globals(g, cfg);
    const std::uint64_t seed = cfg.seeds.front();
    data::Dataset pool;
    data::Dataset test;
    if (!cfg.dataset.generator.empty()) {
        pool = harness::generate(cfg.dataset.generator, cfg.dataset.generator_config, cfg.dataset.pool_per_class,
                                 derive_seed(seed, 10));
        test = harness::generate(cfg.dataset.generator, cfg.dataset.generator_config, cfg.dataset.test_per_class,
                                 derive_seed(seed, 11));
    } else {
        pool = data::load_dataset(cfg.dataset.file);
        test = data::load_dataset(cfg.dataset.test_file);
    }
    const auto split = data::split_and_subsample(pool, cfg.val_fraction, cfg.per_class_train_counts.front(),
                                                 derive_seed(seed, 12));
    cur::TrainData td{cur::labelled_set(split.train), cur::labelled_set(split.val), cur::labelled_set(test),
                      pool.num_classes};
    const net::ModelSpec spec = harness::model_spec(cfg, pool);
    const cur::TrainReport report = cur::train_baseline(spec, td, harness::train_config(cfg), derive_seed(seed, 20));
    fs::create_directories(out);
    net::save_checkpoint({report.final_spec, report.final_params, data::class_names_or_ids(pool)},
                         out / "checkpoint.json");
    data::save_dataset(split.val, out / "val.c2fd");
    harness::write_file_atomic(out / "report.json", cur::to_json(report).dump(2) + "\n");
    harness::write_file_atomic(out / "curve.csv", cur::epochs_csv(report));
    std::cout << "epochs=" << report.total_epochs() << " best_val=" << report.best_val_acc
              << " test=" << report.test_acc << "\n";
    if (report.failed) {
        throw RuntimeFailure(report.failure);
    }
}

void build_hierarchy(const fs::path& model, const std::string& metric, const fs::path& out,
                     const std::optional<fs::path>& data_file, const Globals& g)
{
    const net::Checkpoint ckpt = net::load_checkpoint(model);
    const auto kind = sim::metric_from_string(metric);
    const sim::ClassEmbeddingMatrix emb = sim::class_embeddings(ckpt.params);
    sim::MetricInputs in;
    in.embeddings = &emb;
    in.seed = g.seed.value_or(0);
    std::optional<sim::ConfusionMatrix> confusion;
    if (kind == sim::MetricKind::Confusion || kind == sim::MetricKind::ConfusionDist) {
        if (!data_file) {
            throw ValidationError("metric " + metric + " needs --data");
        }
        const data::Dataset ds = data::load_dataset(*data_file);
        net::ExecContext ctx;
        ctx.deterministic = g.deterministic;
        ctx.threads = g.threads.value_or(0);
        confusion = sim::estimate_confusion(ckpt.spec, ckpt.params, data::to_tensor(ds), ds.labels, ctx);
        in.confusion = &*confusion;
    }
    const hier::LabelHierarchy h = hier::affinity_cluster(sim::build_metric(kind, in));
    hier::save_hierarchy(h, ckpt.class_names, out);
    std::cout << "wrote " << out.string() << ": levels";
    for (const auto& level : h.levels) {
        std::cout << ' ' << level.size();
    }
    std::cout << "\n";
}

void run(const fs::path& config, const fs::path& out, bool full_sweep, const Globals& g)
{
    auto cfg = harness::load_experiment_config(config);
    apply_globals(g, cfg);
    cfg.progress = [](const std::string& line) { std::cerr << line << std::endl; };
    std::vector<harness::ComparisonSummary> cells;
    if (full_sweep) {
        cells = harness::sweep(cfg);
    } else {
        std::optional<std::size_t> length;
        if (!cfg.curriculum_length_sweep.empty()) {
            length = cfg.curriculum_length_sweep.front();
        }
        cells.push_back(harness::run_experiment(cfg, cfg.per_class_train_counts.front(), length));
    }
    harness::emit_reports(cells, out);
    std::cout << harness::summary_csv(cells);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Coarse-to-fine curriculum toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed = 0;
    int threads = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Seed (overrides the config's seed list)");
    app.add_option("--deterministic", g.deterministic, "Fixed-order reductions (default true)");
    auto* threads_opt = app.add_option("--threads", threads, "OpenMP threads (0: default)");

    std::string kind;
    fs::path config;
    fs::path out;
    auto* gen = app.add_subcommand("gen-data", "Generate or ingest a dataset");
    gen->add_option("--kind", kind)->required()->check(CLI::IsMember({"shapes", "blobs", "vectors", "cifar"}));
    gen->add_option("--config", config)->required();
    gen->add_option("--out", out)->required();

    auto* tr = app.add_subcommand("train", "Train a baseline model");
    tr->add_option("--config", config)->required();
    fs::path train_out = "train-out";
    tr->add_option("--out", train_out);

    fs::path model;
    std::string metric;
    std::string data_file;
    auto* hi = app.add_subcommand("hierarchy", "Build a label hierarchy from a checkpoint");
    hi->add_option("--model", model)->required();
    hi->add_option("--metric", metric)->required();
    hi->add_option("--out", out)->required();
    hi->add_option("--data", data_file, "Dataset for confusion-based metrics");

    auto* ru = app.add_subcommand("run", "Run one comparison cell");
    ru->add_option("--config", config)->required();
    ru->add_option("--out", out)->required();
    auto* sw = app.add_subcommand("sweep", "Run the full sweep");
    sw->add_option("--config", config)->required();
    sw->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    if (seed_opt->count() > 0) {
        g.seed = seed;
    }
    if (threads_opt->count() > 0) {
        g.threads = threads;
    }

    try {
        if (gen->parsed()) {
            gen_data(kind, config, out, g);
        } else if (tr->parsed()) {
            train(config, train_out, g);
        } else if (hi->parsed()) {
            build_hierarchy(model, metric, out,
                            data_file.empty() ? std::nullopt : std::optional<fs::path>(data_file), g);
        } else if (ru->parsed()) {
            run(config, out, false, g);
        } else if (sw->parsed()) {
            run(config, out, true, g);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include <CLI11.hpp>

#include "c2f/curriculum/trainer.hpp"
#include "c2f/datagen/dataset_io.hpp"
#include "c2f/datagen/generators.hpp"
#include "c2f/harness/config.hpp"
#include "c2f/harness/experiment.hpp"
#include "c2f/harness/reports.hpp"
#include "c2f/hierarchy.hpp"
#include "support/oracles.hpp"

using namespace c2f;
namespace fs = std::filesystem;

namespace {

// Tolerances pinned by the criteria.
constexpr double kLayerGradTol = 1e-3;
constexpr double kLossGradTol = 1e-4;
constexpr double kEquivTol = 1e-6;
constexpr double kMaxSkippedFraction = 0.10;

struct Outcome {
    bool pass = false;
    std::string detail;
};

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("c2f_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

// Norm-wise relative error of an analytic loss gradient against central differences.
double loss_fd_error(const Tensor& grad, std::vector<double> x,
                     const std::function<double(const std::vector<double>&)>& loss)
{
    const double h = 1e-5;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = loss(x);
        x[i] = keep - h;
        const double down = loss(x);
        x[i] = keep;
        const double fd = (up - down) / (2.0 * h);
        num += (grad[i] - fd) * (grad[i] - fd);
        den += fd * fd;
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

std::vector<std::uint16_t> random_labels(std::size_t n, std::size_t k, Rng& rng)
{
    std::vector<std::uint16_t> y(n);
    for (auto& v : y) {
        v = static_cast<std::uint16_t>(rng.below(k));
    }
    return y;
}

Outcome gradient_suite()
{
    Rng rng(1001);
    double worst_layer = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    const std::size_t instances = 50;
    for (std::size_t t = 0; t < instances; ++t) {
        const std::size_t k = 2 + rng.below(4);
        // Alternate conv/relu/pool/flatten/dense stacks with plain dense stacks.
        const auto spec = t % 2 == 0 ? oracle::small_cnn(8 + 2 * rng.below(3), 2 + rng.below(3), k)
                                     : oracle::small_mlp(3 + rng.below(5), 3 + rng.below(6), k);
        const auto p = net::init_params(spec, 5000 + t);
        const std::size_t n = 1 + rng.below(3);
        std::vector<std::size_t> shape{n, spec.input.height, spec.input.width, spec.input.channels};
        if (spec.input.height == 1) {
            shape = {n, spec.input.channels};
        }
        const Tensor x = oracle::random_tensor(shape, rng);
        const Tensor w = oracle::random_tensor({n, k}, rng);
        net::ExecContext ctx;
        ctx.backend = t % 4 < 2 ? net::Backend::Parallel : net::Backend::Reference;
        const auto fr = net::forward(spec, p, x, ctx);
        const auto g = net::backward(p, fr.cache, w, ctx);
        Rng pick(t);
        const auto rep = oracle::finite_difference_check(spec, p, x, w, g, 1e-3, 12, pick);
        worst_layer = std::max(worst_layer, rep.worst);
        checked += rep.checked;
        skipped += rep.skipped;
    }
    double worst_ce = 0.0;
    double worst_marginal = 0.0;
    for (std::size_t t = 0; t < instances; ++t) {
        const std::size_t n = 1 + rng.below(8);
        const std::size_t k = 2 + rng.below(9);
        const auto y = random_labels(n, k, rng);
        const Tensor logits = oracle::random_tensor({n, k}, rng, 2.0);
        const std::vector<double> x(logits.values().begin(), logits.values().end());
        const auto ce = net::softmax_cross_entropy(logits, y);
        worst_ce = std::max(worst_ce, loss_fd_error(ce.dlogits, x, [&](const std::vector<double>& v) {
                                return oracle::cross_entropy(v, k, y);
                            }));
        const auto map = oracle::random_partition_map(k, 1 + rng.below(k), rng);
        const auto m = cur::marginalized_loss(logits, y, map);
        worst_marginal = std::max(worst_marginal, loss_fd_error(m.dlogits, x, [&](const std::vector<double>& v) {
                                      return oracle::marginal_loss(v, k, y, map);
                                  }));
    }
    const double skipped_fraction = static_cast<double>(skipped) / static_cast<double>(checked + skipped);
    Outcome o;
    o.pass = worst_layer <= kLayerGradTol && worst_ce <= kLossGradTol && worst_marginal <= kLossGradTol &&
             skipped_fraction <= kMaxSkippedFraction;
    o.detail = std::to_string(instances) + " network + " + std::to_string(instances) +
               " loss instances; layers " + fmt("%.2e", worst_layer) + ", CE " + fmt("%.2e", worst_ce) +
               ", marginalized " + fmt("%.2e", worst_marginal) + ", " + std::to_string(checked) +
               " parameters checked, " + fmt("%.1f%%", 100.0 * skipped_fraction) + " skipped at kinks";
    return o;
}

Outcome equivalence_suite()
{
    Rng rng(1002);
    double worst_loss = 0.0;
    double worst_grad = 0.0;
    bool zero = true;
    const std::size_t instances = 200;
    for (std::size_t t = 0; t < instances; ++t) {
        const std::size_t n = 1 + rng.below(32);
        const std::size_t k = 2 + rng.below(50);
        const auto y = random_labels(n, k, rng);
        const Tensor logits = oracle::random_tensor({n, k}, rng, 1.0 + 4.0 * rng.uniform());
        std::vector<std::size_t> ident(k);
        for (std::size_t c = 0; c < k; ++c) {
            ident[c] = c;
        }
        const auto m = cur::marginalized_loss(logits, y, ident);
        const auto ce = net::softmax_cross_entropy(logits, y);
        worst_loss = std::max(worst_loss, static_cast<double>(std::abs(m.mean_loss - ce.mean_loss)));
        for (std::size_t i = 0; i < logits.size(); ++i) {
            worst_grad = std::max(worst_grad, static_cast<double>(std::abs(m.dlogits[i] - ce.dlogits[i])));
        }
        const auto one = cur::marginalized_loss(logits, y, std::vector<std::size_t>(k, 0));
        zero = zero && one.mean_loss == 0.0f &&
               std::all_of(one.dlogits.values().begin(), one.dlogits.values().end(),
                           [](float v) { return v == 0.0f; });
    }
    Outcome o;
    o.pass = worst_loss <= kEquivTol && worst_grad <= kEquivTol && zero;
    o.detail = std::to_string(instances) + " instances; singleton loss diff " + fmt("%.2e", worst_loss) +
               ", grad diff " + fmt("%.2e", worst_grad) + "; one-cluster loss and grad " +
               (zero ? "exactly 0" : "NOT exactly 0");
    return o;
}

Outcome clustering_oracle()
{
    Rng rng(1003);
    std::size_t matches = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t k = 2 + rng.below(7);
        const auto d = oracle::random_distance(k, rng);
        matches += hier::affinity_cluster(d).levels == oracle::boruvka_levels(d) ? 1 : 0;
    }
    std::size_t clean = 0;
    std::string first_problem;
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 5 + rng.below(60);
        const auto h = hier::affinity_cluster(oracle::random_distance(k, rng));
        const auto problems = hier::validate_hierarchy(h, k);
        clean += problems.empty() ? 1 : 0;
        if (!problems.empty() && first_problem.empty()) {
            first_problem = problems.front();
        }
    }
    Outcome o;
    o.pass = matches == 100 && clean == 200;
    o.detail = std::to_string(matches) + "/100 oracle matches (K<=8), " + std::to_string(clean) +
               "/200 valid hierarchies (K in 5..64)" + (first_problem.empty() ? "" : "; " + first_problem);
    return o;
}

Outcome generator_oracles()
{
    data::BlobsConfig bc;
    bc.image_size = 32;
    bc.blobs = 3;
    bc.samples_per_class = 250;
    const auto blobs = data::gen_blobs(bc, 1004);
    std::size_t blob_ok = 0;
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        std::vector<data::BlobCenter> c;
        for (const auto& xy : blobs.meta["samples"][i]["centers"]) {
            c.push_back({xy[0].get<double>(), xy[1].get<double>()});
        }
        blob_ok += data::derive_blob_label(c) == blobs.class_names[blobs.labels[i]] ? 1 : 0;
    }

    data::ShapesConfig sc;
    sc.image_size = 32;
    sc.samples_per_class = 34;
    auto shapes = data::gen_shapes(sc, 1005);
    std::vector<std::size_t> first(1000);
    for (std::size_t i = 0; i < first.size(); ++i) {
        first[i] = i;
    }
    shapes = data::subset(shapes, first);
    const std::size_t pixels = 32 * 32;
    std::size_t shape_ok = 0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto rgb = data::color_value(data::shape_class_parts(shapes.labels[i]).second);
        shape_ok += oracle::single_colour_matches(shapes.pixels.data() + i * pixels * 3, pixels, rgb.r, rgb.g, rgb.b)
                        ? 1
                        : 0;
    }

    const fs::path dir = scratch("datagen");
    data::VectorsConfig vc;
    vc.samples_per_class = 20;
    bool round_trip = true;
    for (const data::Dataset* ds : std::initializer_list<const data::Dataset*>{&blobs, &shapes}) {
        data::save_dataset(*ds, dir / "rt.c2fd");
        const auto back = data::load_dataset(dir / "rt.c2fd");
        round_trip = round_trip && back.labels == ds->labels && back.pixels == ds->pixels &&
                     back.class_names == ds->class_names && back.sample_shape == ds->sample_shape;
    }
    const auto vec = data::gen_vectors(vc, 1006);
    data::save_dataset(vec, dir / "v.c2fd");
    const auto vback = data::load_dataset(dir / "v.c2fd");
    round_trip = round_trip && vback.labels == vec.labels && vback.features.size() == vec.features.size() &&
                 std::memcmp(vback.features.data(), vec.features.data(), vec.features.size() * sizeof(float)) == 0;
    // Bit-exact on disk too: saving the reloaded set reproduces the file.
    data::save_dataset(vback, dir / "v2.c2fd");
    round_trip = round_trip && slurp(dir / "v.c2fd") == slurp(dir / "v2.c2fd");
    fs::remove_all(dir);

    Outcome o;
    o.pass = blobs.size() == 1000 && blob_ok == 1000 && shapes.size() == 1000 && shape_ok == 1000 && round_trip;
    o.detail = std::to_string(blob_ok) + "/" + std::to_string(blobs.size()) + " blob labels re-derived, " +
               std::to_string(shape_ok) + "/" + std::to_string(shapes.size()) + " shapes single-coloured, round-trip " +
               (round_trip ? "bit-exact" : "MISMATCH");
    return o;
}

Outcome shapes_comparison(const fs::path& config, const fs::path& out_dir, std::size_t workers)
{
    auto cfg = harness::load_experiment_config(config);
    cfg.workers = std::max<std::size_t>(1, workers);
    cfg.progress = [](const std::string& line) { std::cerr << "  " << line << std::endl; };
    const auto cells = harness::sweep(cfg);
    harness::emit_reports(cells, out_dir);
    const auto& cell = cells.front();
    const harness::MethodStats* emb = nullptr;
    const harness::MethodStats* rnd = nullptr;
    const harness::MethodStats* base = nullptr;
    for (const auto& m : cell.methods) {
        if (m.method == "continuous-EmbeddingDist") {
            emb = &m;
        } else if (m.method == "continuous-Random") {
            rnd = &m;
        } else if (m.method == "baseline") {
            base = &m;
        }
    }
    Outcome o;
    if (emb == nullptr || rnd == nullptr || base == nullptr) {
        o.detail = "config must compare baseline with continuous EmbeddingDist and Random";
        return o;
    }
    const auto positive = std::count_if(emb->gains.begin(), emb->gains.end(), [](double g) { return g > 0.0; });
    o.pass = emb->gains.size() == cfg.seeds.size() && emb->gain_mean > 0.0 &&
             positive >= static_cast<long>(cfg.seeds.size()) - 1 && rnd->gain_mean < emb->gain_mean;
    std::ostringstream ss;
    ss << "baseline " << fmt("%.4f", base->mean) << " +- " << fmt("%.4f", base->stderr_) << "; EmbeddingDist gain "
       << fmt("%+.4f", emb->gain_mean) << " +- " << fmt("%.4f", emb->gain_stderr) << " (positive in " << positive << "/"
       << emb->gains.size() << " seeds); Random gain " << fmt("%+.4f", rnd->gain_mean) << " +- "
       << fmt("%.4f", rnd->gain_stderr) << "; reports in " << out_dir.string();
    o.detail = ss.str();
    return o;
}

Outcome degenerate_identity()
{
    data::ShapesConfig sc;
    sc.image_size = 16;
    sc.samples_per_class = 8;
    const auto train = data::gen_shapes(sc, 1007);
    const auto val = data::gen_shapes(sc, 1008);
    cur::TrainData d{cur::labelled_set(train), cur::labelled_set(val), cur::labelled_set(val), train.num_classes};
    net::ModelSpec spec = oracle::small_cnn(16, 4, train.num_classes);
    spec.input.channels = 3;
    cur::TrainConfig cfg;
    cfg.batch_size = 32;
    cfg.max_epochs = 6;
    cfg.patience = 6;
    cur::CurriculumConfig cc;
    cc.total_coarse_epochs = 3;
    const auto base = cur::train_baseline(spec, d, cfg, 42);
    const auto cont = cur::train_continuous(spec, d, hier::singleton_hierarchy(train.num_classes), cc, cfg, 42);
    bool same = base.epochs.size() == cont.epochs.size() && !base.failed && !cont.failed;
    for (std::size_t i = 0; same && i < base.epochs.size(); ++i) {
        const auto& a = base.epochs[i];
        const auto& b = cont.epochs[i];
        same = a.train_acc == b.train_acc && a.val_acc == b.val_acc && a.loss == b.loss && a.level == b.level;
    }
    same = same && base.final_params == cont.final_params && base.test_acc == cont.test_acc;
    Outcome o;
    o.pass = same;
    o.detail = std::to_string(base.epochs.size()) + " epochs on 16x16 Shapes; curves and parameters " +
               (same ? "bit-identical" : "DIFFER");
    return o;
}

Outcome t_heuristic()
{
    // Peaks at 0.50 on epoch 40; first reaches 0.45 on epoch 12.
    std::vector<double> curve(60, 0.48);
    for (std::size_t e = 1; e <= 40; ++e) {
        curve[e - 1] = e < 12 ? 0.03 * static_cast<double>(e) : 0.45 + 0.001 * static_cast<double>(e - 12);
    }
    curve[39] = 0.50;
    const auto text = cur::curriculum_length(curve, cur::TMode::AutoText);
    const auto alg3 = cur::curriculum_length(curve, cur::TMode::AutoAlg3);
    Outcome o;
    o.pass = text == 12 && alg3 == 36;
    o.detail = "auto-text T=" + std::to_string(text) + " (expect 12), auto-alg3 T=" + std::to_string(alg3) +
               " (expect 36)";
    return o;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(C2F_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome pipeline_determinism()
{
    const fs::path dir = scratch("determinism");
    const auto cfg = nlohmann::json::parse(R"({
        "dataset": {"generator": "shapes", "config": {"imageSize": 16}, "poolPerClass": 12, "testPerClass": 6},
        "model": {"layers": [{"type": "conv3x3", "units": 4}, {"type": "relu"}, {"type": "maxpool2x2"},
                             {"type": "flatten"}, {"type": "dense", "units": 16}, {"type": "relu"}]},
        "training": {"batchSize": 32, "maxEpochs": 6, "patience": 3, "valFraction": 0.25},
        "methods": ["baseline", "continuous", "staged", "multitask", "spl"],
        "metrics": ["EmbeddingDist", "ConfusionDist", "Random"],
        "seeds": [1, 2],
        "workers": 2
    })");
    std::ofstream(dir / "config.json") << cfg.dump(2);
    const std::string d = dir.string();
    const int a = run_cli("run --config " + d + "/config.json --out " + d + "/a");
    const int b = run_cli("run --config " + d + "/config.json --out " + d + "/b --threads 1");
    const std::string ja = slurp(dir / "a" / "summary.json");
    const std::string jb = slurp(dir / "b" / "summary.json");
    fs::remove_all(dir);
    Outcome o;
    o.pass = a == 0 && b == 0 && !ja.empty() && ja == jb;
    o.detail = "two `run` invocations (5 methods, 3 metrics, 2 seeds, 2 workers): exit " + std::to_string(a) + "/" +
               std::to_string(b) + ", summary.json " + std::to_string(ja.size()) + " bytes, " +
               (ja == jb ? "byte-identical" : "DIFFERENT");
    return o;
}

Outcome cifar_ingestion()
{
    const fs::path dir = scratch("cifar");
    const auto fx = oracle::cifar_fixture(false);
    {
        std::ofstream out(dir / "fixture.bin", std::ios::binary);
        out.write(reinterpret_cast<const char*>(fx.bytes.data()), static_cast<std::streamsize>(fx.bytes.size()));
    }
    const auto ds = data::load_cifar_binary(dir / "fixture.bin", data::CifarVariant::Cifar10);
    bool exact = ds.size() == 2 && ds.num_classes == 10 && ds.labels == std::vector<std::uint16_t>{3, 9};
    for (std::size_t r = 0; exact && r < 2; ++r) {
        for (std::size_t i = 0; i < 32 * 32 * 3; ++i) {
            const std::size_t c = i % 3;
            const std::size_t x = (i / 3) % 32;
            const std::size_t y = i / 96;
            exact = exact && ds.pixels[r * 3072 + i] == oracle::fixture_pixel(r, c, y, x);
        }
    }
    data::save_dataset(ds, dir / "fixture.c2fd");
    const auto back = data::load_dataset(dir / "fixture.c2fd");
    exact = exact && back.pixels == ds.pixels && back.labels == ds.labels;
    fs::remove_all(dir);
    Outcome o;
    o.pass = exact;
    o.detail = std::string("2-record fixture ") + (exact ? "round-trips exactly" : "MISMATCH");
    if (const char* real = std::getenv("C2F_CIFAR10_DIR")) {
        const auto train = data::load_cifar_split(real, data::CifarVariant::Cifar10, true);
        const auto test = data::load_cifar_split(real, data::CifarVariant::Cifar10, false);
        const bool sizes = train.size() == 50000 && test.size() == 10000 && train.num_classes == 10;
        o.pass = o.pass && sizes;
        o.detail += "; real CIFAR-10: N=" + std::to_string(train.size()) + "/" + std::to_string(test.size()) +
                    ", K=" + std::to_string(train.num_classes);
    } else {
        o.detail += "; real CIFAR-10 not checked (set C2F_CIFAR10_DIR to the extracted binary batches)";
    }
    return o;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    std::set<int> only;
    fs::path shapes_config = fs::path(C2F_SOURCE_DIR) / "configs" / "shapes_desk.json";
    fs::path out_dir = fs::temp_directory_path() / "c2f_acceptance_shapes";
    std::size_t workers = 1;
    app.add_option("--only", only, "Criteria to run, e.g. --only 1,3 (default: all)")->delimiter(',')->check(CLI::Range(1, 9));
    app.add_option("--shapes-config", shapes_config, "Experiment config for criterion 5");
    app.add_option("--out", out_dir, "Report directory for criterion 5");
    app.add_option("--workers", workers, "Concurrent seeds for criterion 5");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient suite", gradient_suite},
        {"equivalence suite", equivalence_suite},
        {"clustering oracle", clustering_oracle},
        {"generator oracles", generator_oracles},
        {"desk-scale Shapes comparison", [&] { return shapes_comparison(shapes_config, out_dir, workers); }},
        {"degenerate-curriculum identity", degenerate_identity},
        {"T heuristic", t_heuristic},
        {"pipeline determinism", pipeline_determinism},
        {"CIFAR ingestion", cifar_ingestion},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && only.count(id) == 0) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << " ("
                  << fmt("%.1f", secs) << " s): " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}

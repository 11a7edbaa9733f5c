#include "c2f/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "c2f/datagen/dataset_io.hpp"
#include "c2f/datagen/split.hpp"
#include "c2f/error.hpp"
#include "c2f/rng.hpp"
#include "c2f/similarity.hpp"

namespace c2f::harness {

namespace {

constexpr std::uint64_t kPoolStream = 10;
constexpr std::uint64_t kTestStream = 11;
constexpr std::uint64_t kSplitStream = 12;
constexpr std::uint64_t kModelStream = 20;
constexpr std::uint64_t kRandomMetricStream = 30;

std::string count_tag(std::optional<std::int64_t> count)
{
    return count ? "n" + std::to_string(*count) : "nall";
}

std::string length_tag(std::optional<std::size_t> length)
{
    return length ? "T" + std::to_string(*length) : "Tauto";
}

struct SeedData {
    cur::TrainData data;
    net::ModelSpec spec;
    std::vector<std::string> class_names;
};

SeedData prepare_data(const ExperimentConfig& cfg, std::optional<std::int64_t> count, std::uint64_t seed)
{
    data::Dataset pool;
    data::Dataset test;
    const DatasetSpec& d = cfg.dataset;
    if (!d.generator.empty()) {
        pool = generate(d.generator, d.generator_config, d.pool_per_class, derive_seed(seed, kPoolStream));
        test = generate(d.generator, d.generator_config, d.test_per_class, derive_seed(seed, kTestStream));
    } else {
        pool = data::load_dataset(d.file);
        test = data::load_dataset(d.test_file);
    }
    auto split = data::split_and_subsample(pool, cfg.val_fraction, count, derive_seed(seed, kSplitStream));
    SeedData out;
    out.spec = model_spec(cfg, pool);
    out.class_names = data::class_names_or_ids(pool);
    out.data.train = cur::labelled_set(split.train);
    out.data.val = cur::labelled_set(split.val);
    out.data.test = cur::labelled_set(test);
    out.data.num_classes = pool.num_classes;
    return out;
}

struct NamedHierarchy {
    std::string metric;
    hier::LabelHierarchy hierarchy;
};

std::vector<NamedHierarchy> build_hierarchies(const ExperimentConfig& cfg, const SeedData& sd,
                                              const cur::TrainReport& baseline, std::uint64_t seed)
{
    std::vector<NamedHierarchy> out;
    if (!cfg.hierarchy_file.empty()) {
        out.push_back({"provided", hier::load_hierarchy(cfg.hierarchy_file, sd.class_names)});
        return out;
    }
    if (!cfg.distance_matrix_file.empty()) {
        sim::ClassDistanceMatrix d{sim::read_matrix_csv(cfg.distance_matrix_file)};
        if (d.size() != sd.spec.num_classes) {
            throw ValidationError("distance matrix size does not match the class count");
        }
        out.push_back({"custom", hier::affinity_cluster(d)});
        return out;
    }
    if (baseline.failed) {
        throw RuntimeFailure("baseline failed: " + baseline.failure);
    }
    const sim::ClassEmbeddingMatrix emb = sim::class_embeddings(baseline.final_params);
    std::optional<sim::ConfusionMatrix> confusion;
    for (sim::MetricKind kind : cfg.metrics) {
        sim::MetricInputs in;
        in.embeddings = &emb;
        in.seed = derive_seed(seed, kRandomMetricStream);
        if (kind == sim::MetricKind::Confusion || kind == sim::MetricKind::ConfusionDist) {
            if (!confusion) {
                confusion = sim::estimate_confusion(baseline.final_spec, baseline.final_params,
                                                    sd.data.val.inputs, sd.data.val.labels, train_config(cfg).exec);
            }
            in.confusion = &*confusion;
        }
        out.push_back({sim::to_string(kind), hier::affinity_cluster(sim::build_metric(kind, in))});
    }
    return out;
}

cur::TrainReport failed_report(const std::string& method, const std::string& why)
{
    cur::TrainReport r;
    r.method = method;
    r.failed = true;
    r.failure = why;
    return r;
}

struct CellKey {
    std::optional<std::int64_t> count;
    std::optional<std::size_t> length;
};

/// All runs of one seed for one train count, across curriculum lengths.
struct SeedResult {
    std::vector<std::vector<RunRecord>> per_length;
    std::vector<HierarchyRecord> hierarchies;
};

std::mutex progress_mutex;

void report_progress(const ExperimentConfig& cfg, const RunRecord& rec)
{
    if (!cfg.progress) {
        return;
    }
    char buf[160];
    const auto& r = rec.report;
    if (r.failed) {
        std::snprintf(buf, sizeof(buf), "%s: failed (%s)", rec.name.c_str(), r.failure.c_str());
    } else {
        std::snprintf(buf, sizeof(buf), "%s: test %.4f after %zu epochs (best val at %zu), %.1f s", rec.name.c_str(),
                      r.test_acc, r.total_epochs(), r.best_val_epoch, r.wall_clock_seconds);
    }
    const std::lock_guard<std::mutex> lock(progress_mutex);
    cfg.progress(buf);
}

SeedResult run_seed(const ExperimentConfig& cfg, std::optional<std::int64_t> count,
                    const std::vector<std::optional<std::size_t>>& lengths, std::uint64_t seed)
{
    SeedResult result;
    result.per_length.resize(lengths.size());
    const SeedData sd = prepare_data(cfg, count, seed);
    const std::uint64_t model_seed = derive_seed(seed, kModelStream);
    const cur::TrainConfig base_cfg = train_config(cfg);
    const std::string ctag = count_tag(count);
    const std::string stag = "s" + std::to_string(seed);

    const cur::TrainReport baseline = cur::train_baseline(sd.spec, sd.data, base_cfg, model_seed);

    std::vector<NamedHierarchy> hierarchies;
    std::string hierarchy_error;
    const bool need_hierarchy = std::any_of(cfg.methods.begin(), cfg.methods.end(), uses_hierarchy);
    if (need_hierarchy) {
        try {
            hierarchies = build_hierarchies(cfg, sd, baseline, seed);
        } catch (const RuntimeFailure& e) {
            hierarchy_error = e.what();
        }
    }
    for (const auto& nh : hierarchies) {
        result.hierarchies.push_back(
            {"hierarchies/" + ctag + "-" + stag + "-" + nh.metric + ".json", sd.class_names, nh.hierarchy});
    }

    cur::TrainConfig capped = base_cfg;
    capped.max_epochs = baseline.total_epochs();

    for (std::size_t li = 0; li < lengths.size(); ++li) {
        auto& runs = result.per_length[li];
        const std::string prefix = ctag + "-" + length_tag(lengths[li]) + "-" + stag + "-";
        auto add = [&](const std::string& method, const std::string& metric, std::size_t t,
                       const hier::LabelHierarchy* h, const std::string& hfile, cur::TrainReport report) {
            RunRecord rec;
            rec.method = metric.empty() ? method : method + "-" + metric;
            rec.name = prefix + rec.method;
            rec.seed = seed;
            rec.metric = metric;
            rec.curriculum_length = t;
            if (h != nullptr) {
                for (const auto& level : h->levels) {
                    rec.level_sizes.push_back(level.size());
                }
            }
            rec.hierarchy_file = hfile;
            rec.report = std::move(report);
            report_progress(cfg, rec);
            runs.push_back(std::move(rec));
        };

        std::size_t t = 0;
        if (lengths[li]) {
            t = *lengths[li];
        } else if (cfg.t_mode == cur::TMode::Fixed) {
            t = *cfg.fixed_t;
        } else if (!baseline.epochs.empty()) {
            const auto curve = baseline.val_curve();
            t = cur::curriculum_length(curve, cfg.t_mode, cfg.fixed_t);
        }

        for (Method m : cfg.methods) {
            const std::string name = to_string(m);
            if (m == Method::Baseline) {
                add(name, "", 0, nullptr, "", baseline);
                continue;
            }
            if (m == Method::Spl) {
                add(name, "", 0, nullptr, "", cur::train_spl(sd.spec, sd.data, cfg.spl, capped, model_seed));
                continue;
            }
            if (!hierarchy_error.empty()) {
                add(name, "none", t, nullptr, "", failed_report(name, hierarchy_error));
                continue;
            }
            for (std::size_t hi = 0; hi < hierarchies.size(); ++hi) {
                const auto& nh = hierarchies[hi];
                const auto& hfile = result.hierarchies[hi].file;
                cur::TrainReport rep;
                if (m == Method::Continuous) {
                    cur::CurriculumConfig cc;
                    cc.t_mode = cfg.t_mode;
                    cc.total_coarse_epochs = t;
                    rep = cur::train_continuous(sd.spec, sd.data, nh.hierarchy, cc, capped, model_seed);
                } else if (m == Method::Staged) {
                    rep = cur::train_staged(sd.spec, sd.data, nh.hierarchy, capped, model_seed);
                } else {
                    rep = cur::train_multitask(sd.spec, sd.data, nh.hierarchy, capped, model_seed);
                }
                add(name, nh.metric, m == Method::Continuous ? t : 0, &nh.hierarchy, hfile, std::move(rep));
            }
        }
    }
    return result;
}

std::vector<std::optional<std::size_t>> length_axis(const ExperimentConfig& cfg)
{
    std::vector<std::optional<std::size_t>> lengths;
    for (std::size_t l : cfg.curriculum_length_sweep) {
        lengths.emplace_back(l);
    }
    if (lengths.empty()) {
        lengths.emplace_back(std::nullopt);
    }
    return lengths;
}

std::vector<ComparisonSummary> run_cells(const ExperimentConfig& cfg,
                                         const std::vector<std::optional<std::int64_t>>& counts,
                                         const std::vector<std::optional<std::size_t>>& lengths)
{
    std::vector<ComparisonSummary> out;
    for (const auto& count : counts) {
        std::vector<SeedResult> per_seed(cfg.seeds.size());
        std::vector<std::exception_ptr> errors(cfg.seeds.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
                try {
                    per_seed[i] = run_seed(cfg, count, lengths, cfg.seeds[i]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        const std::size_t workers = std::min(cfg.workers, cfg.seeds.size());
        if (workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back(worker);
            }
            for (auto& t : pool) {
                t.join();
            }
        }
        for (std::size_t i = 0; i < errors.size(); ++i) {
            if (!errors[i]) {
                continue;
            }
            try {
                std::rethrow_exception(errors[i]);
            } catch (const ValidationError&) {
                throw;
            } catch (const std::exception& e) {
                // Record the failure for every requested method of this seed.
                per_seed[i].per_length.assign(lengths.size(), {});
                for (auto& runs : per_seed[i].per_length) {
                    for (Method m : cfg.methods) {
                        RunRecord rec;
                        rec.method = to_string(m);
                        rec.name = count_tag(count) + "-s" + std::to_string(cfg.seeds[i]) + "-" + rec.method;
                        rec.seed = cfg.seeds[i];
                        rec.report = failed_report(rec.method, e.what());
                        runs.push_back(std::move(rec));
                    }
                }
            }
        }
        for (std::size_t li = 0; li < lengths.size(); ++li) {
            ComparisonSummary cell;
            cell.train_count = count;
            cell.curriculum_length = lengths[li];
            for (auto& sr : per_seed) {
                for (auto& rec : sr.per_length[li]) {
                    cell.runs.push_back(rec);
                }
                if (li == 0) {
                    cell.hierarchies.insert(cell.hierarchies.end(), sr.hierarchies.begin(), sr.hierarchies.end());
                }
            }
            cell.methods = aggregate(cell.runs);
            out.push_back(std::move(cell));
        }
    }
    return out;
}

}  // namespace

double round9(double v)
{
    if (!std::isfinite(v)) {
        return v;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::strtod(buf, nullptr);
}

std::pair<double, double> mean_stderr(const std::vector<double>& xs)
{
    if (xs.empty()) {
        return {0.0, 0.0};
    }
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    const double mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

std::vector<MethodStats> aggregate(const std::vector<RunRecord>& runs)
{
    std::vector<MethodStats> out;
    std::map<std::uint64_t, double> baseline;
    for (const auto& r : runs) {
        if (r.method == "baseline" && !r.report.failed) {
            baseline[r.seed] = r.report.test_acc;
        }
    }
    auto find = [&](const std::string& method) -> MethodStats& {
        for (auto& m : out) {
            if (m.method == method) {
                return m;
            }
        }
        out.push_back(MethodStats{});
        out.back().method = method;
        return out.back();
    };
    std::map<std::string, std::vector<double>> epochs;
    for (const auto& r : runs) {
        MethodStats& m = find(r.method);
        if (r.report.failed) {
            ++m.failures;
            continue;
        }
        m.seeds.push_back(r.seed);
        m.accuracy.push_back(r.report.test_acc);
        epochs[r.method].push_back(static_cast<double>(r.report.total_epochs()));
        const auto b = baseline.find(r.seed);
        if (r.method != "baseline" && b != baseline.end()) {
            m.gains.push_back(r.report.test_acc - b->second);
        }
    }
    for (auto& m : out) {
        std::tie(m.mean, m.stderr_) = mean_stderr(m.accuracy);
        std::tie(m.gain_mean, m.gain_stderr) = mean_stderr(m.gains);
        m.mean = round9(m.mean);
        m.stderr_ = round9(m.stderr_);
        m.gain_mean = round9(m.gain_mean);
        m.gain_stderr = round9(m.gain_stderr);
        m.mean_epochs = round9(mean_stderr(epochs[m.method]).first);
    }
    return out;
}

ComparisonSummary run_experiment(const ExperimentConfig& cfg, std::optional<std::int64_t> train_count,
                                 std::optional<std::size_t> curriculum_length)
{
    return run_cells(cfg, {train_count}, {curriculum_length}).front();
}

std::vector<ComparisonSummary> sweep(const ExperimentConfig& cfg)
{
    return run_cells(cfg, cfg.per_class_train_counts, length_axis(cfg));
}

}  // namespace c2f::harness

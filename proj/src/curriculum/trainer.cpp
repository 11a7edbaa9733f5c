#include "c2f/curriculum/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "c2f/error.hpp"
#include "c2f/netcore/loss.hpp"
#include "c2f/rng.hpp"
#include "c2f/similarity.hpp"

namespace c2f::cur {

namespace {

using Clock = std::chrono::steady_clock;
using LossFn = std::function<net::LossResult(const Tensor&, std::span<const std::uint16_t>, std::size_t)>;

constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kStagePredictorStream = 100;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_data(const net::ModelSpec& spec, const TrainData& data)
{
    net::validate(spec);
    if (data.num_classes != spec.num_classes) {
        throw ValidationError("model has " + std::to_string(spec.num_classes) + " classes, data has " +
                              std::to_string(data.num_classes));
    }
    if (data.train.size() == 0 || data.val.size() == 0) {
        throw ValidationError("training and validation sets must be nonempty");
    }
}

void check_hierarchy(const hier::LabelHierarchy& h, std::size_t k)
{
    const auto problems = hier::validate_hierarchy(h, k, false);
    if (!problems.empty()) {
        throw ValidationError("hierarchy does not match the dataset: " + problems.front());
    }
}

struct EpochStats {
    double train_acc = 0.0;
    double loss = 0.0;
};

/// Shared state of one training run: report, shuffle stream and epoch count.
class Run {
public:
    Run(std::string method, const TrainData& data, const TrainConfig& cfg, std::uint64_t seed)
        : data_(data), cfg_(cfg), shuffle_(derive_seed(seed, kShuffleStream)), start_(Clock::now())
    {
        report.method = std::move(method);
    }

    const TrainConfig& cfg() const { return cfg_; }
    const TrainData& data() const { return data_; }
    std::size_t epochs_done() const { return report.epochs.size(); }

    void begin_level(std::size_t level, const net::ModelSpec& spec, const net::ModelParams& params)
    {
        report.level_start.push_back(report.epochs.size() + 1);
        if (cfg_.on_level_start) {
            cfg_.on_level_start(LevelEvent{level, &spec, &params});
        }
    }

    void end_level(std::size_t level, const net::ModelSpec& spec, const net::ModelParams& params)
    {
        if (cfg_.on_level_end) {
            cfg_.on_level_end(LevelEvent{level, &spec, &params});
        }
    }

    EpochStats train_epoch(const net::ModelSpec& spec, net::ModelParams& params, net::OptimizerState& opt,
                           std::span<const std::uint16_t> labels, const LossFn& loss)
    {
        const Tensor& x = data_.train.inputs;
        const std::size_t n = labels.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_.shuffle(std::span<std::size_t>(order));
        const std::size_t bs = std::max<std::size_t>(1, cfg_.batch_size);
        const std::size_t epoch = report.epochs.size() + 1;
        std::size_t correct = 0;
        double loss_sum = 0.0;
        std::vector<std::uint16_t> yb;
        for (std::size_t first = 0; first < n; first += bs) {
            const std::size_t count = std::min(bs, n - first);
            const std::span<const std::size_t> rows(order.data() + first, count);
            const Tensor xb = net::gather_batch(x, rows);
            yb.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                yb[i] = labels[rows[i]];
            }
            const auto fr = net::forward(spec, params, xb, cfg_.exec);
            const net::LossResult lr = loss(fr.logits, yb, epoch);
            if (!std::isfinite(lr.mean_loss) || !lr.dlogits.all_finite()) {
                throw RuntimeFailure("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
            }
            const auto pred = net::argmax_rows(fr.logits);
            for (std::size_t i = 0; i < count; ++i) {
                correct += pred[i] == yb[i] ? 1 : 0;
            }
            loss_sum += static_cast<double>(lr.mean_loss) * static_cast<double>(count);
            const net::Gradients g = net::backward(params, fr.cache, lr.dlogits, cfg_.exec);
            net::optimizer_step(opt, params, g);
        }
        return {static_cast<double>(correct) / static_cast<double>(n), loss_sum / static_cast<double>(n)};
    }

    void record(std::size_t level, const EpochStats& stats, double val_acc, double val_acc_cluster,
                Clock::time_point t0, const net::ModelSpec& spec, const net::ModelParams& params)
    {
        EpochRecord r;
        r.epoch = report.epochs.size() + 1;
        r.level = level;
        r.train_acc = stats.train_acc;
        r.val_acc = val_acc;
        r.val_acc_cluster = val_acc_cluster;
        r.loss = stats.loss;
        r.seconds = seconds_since(t0);
        report.epochs.push_back(r);
        if (cfg_.on_epoch_end) {
            cfg_.on_epoch_end(LevelEvent{level, &spec, &params}, r.epoch);
        }
    }

    /// Trains with early stopping on validation accuracy against val_labels;
    /// leaves the best parameters (the entry state included) in params.
    double train_until_stop(std::size_t level, const net::ModelSpec& spec, net::ModelParams& params,
                            std::size_t cap, std::span<const std::uint16_t> train_labels,
                            std::span<const std::uint16_t> val_labels, const LossFn& loss,
                            std::size_t* best_epoch_out)
    {
        net::OptimizerState opt = net::make_optimizer(cfg_.optimizer, params);
        double best = net::evaluate(spec, params, data_.val.inputs, val_labels, cfg_.exec);
        std::size_t best_epoch = report.epochs.size();
        net::ModelParams best_params = params;
        for (std::size_t e = 0; e < cap; ++e) {
            const auto t0 = Clock::now();
            const EpochStats stats = train_epoch(spec, params, opt, train_labels, loss);
            const double val = net::evaluate(spec, params, data_.val.inputs, val_labels, cfg_.exec);
            record(level, stats, val, val, t0, spec, params);
            if (val > best) {
                best = val;
                best_epoch = report.epochs.size();
                best_params = params;
            } else if (report.epochs.size() - best_epoch >= cfg_.patience) {
                break;
            }
        }
        params = std::move(best_params);
        if (best_epoch_out != nullptr) {
            *best_epoch_out = best_epoch;
        }
        return best;
    }

    void finish_final(const net::ModelSpec& spec, const net::ModelParams& params, double best_val,
                      std::size_t best_epoch)
    {
        report.best_val_acc = best_val;
        report.best_val_epoch = best_epoch;
        report.final_spec = spec;
        report.final_params = params;
        if (data_.test.size() > 0) {
            report.test_acc = net::evaluate(spec, params, data_.test.inputs, data_.test.labels, cfg_.exec);
        }
        report.wall_clock_seconds = seconds_since(start_);
    }

    TrainReport report;

private:
    const TrainData& data_;
    const TrainConfig& cfg_;
    Rng shuffle_;
    Clock::time_point start_;
};

net::LossResult plain_ce(const Tensor& logits, std::span<const std::uint16_t> labels, std::size_t)
{
    return net::softmax_cross_entropy(logits, labels);
}

// The final fine-label phase shared by baseline, continuous, multitask and SPL.
void final_phase(Run& run, std::size_t level, const net::ModelSpec& spec, net::ModelParams& params,
                 std::size_t cap, const LossFn& loss)
{
    run.begin_level(level, spec, params);
    std::size_t best_epoch = 0;
    const double best = run.train_until_stop(level, spec, params, cap, run.data().train.labels,
                                             run.data().val.labels, loss, &best_epoch);
    run.end_level(level, spec, params);
    run.finish_final(spec, params, best, best_epoch);
}

template <typename Body>
TrainReport guarded(Run& run, Body&& body)
{
    try {
        body();
    } catch (const RuntimeFailure& e) {
        run.report.failed = true;
        run.report.failure = e.what();
    }
    return std::move(run.report);
}

}  // namespace

LabelledSet labelled_set(const data::Dataset& ds)
{
    return LabelledSet{data::to_tensor(ds), ds.labels};
}

std::vector<double> TrainReport::val_curve() const
{
    std::vector<double> out;
    for (const auto& e : epochs) {
        out.push_back(e.val_acc);
    }
    return out;
}

TrainReport train_baseline(const net::ModelSpec& spec, const TrainData& data, const TrainConfig& cfg,
                           std::uint64_t seed)
{
    check_data(spec, data);
    Run run("baseline", data, cfg, seed);
    return guarded(run, [&] {
        net::ModelParams params = net::init_params(spec, seed);
        final_phase(run, 0, spec, params, cfg.max_epochs, plain_ce);
    });
}

TrainReport train_continuous(const net::ModelSpec& spec, const TrainData& data,
                             const hier::LabelHierarchy& h, const CurriculumConfig& ccfg,
                             const TrainConfig& cfg, std::uint64_t seed)
{
    check_data(spec, data);
    check_hierarchy(h, spec.num_classes);
    Run run("continuous", data, cfg, seed);
    return guarded(run, [&] {
        net::ModelParams params = net::init_params(spec, seed);
        const std::size_t final_level = h.depth() - 1;
        auto budget = coarse_epoch_budget(ccfg.total_coarse_epochs, final_level);
        std::size_t spent = 0;
        for (std::size_t level = 0; level < final_level; ++level) {
            const std::size_t epochs = std::min(budget[level], cfg.max_epochs - spent);
            const auto map = hier::class_to_cluster(h, level);
            const std::size_t clusters = h.levels[level].size();
            const auto val_clusters = transform_labels(data.val.labels, h.levels[level]);
            const LossFn loss = [&map](const Tensor& logits, std::span<const std::uint16_t> y, std::size_t) {
                return marginalized_loss(logits, y, map);
            };
            run.begin_level(level, spec, params);
            net::OptimizerState opt = net::make_optimizer(cfg.optimizer, params);
            for (std::size_t e = 0; e < epochs; ++e) {
                const auto t0 = Clock::now();
                const EpochStats stats = run.train_epoch(spec, params, opt, data.train.labels, loss);
                const Tensor logits = net::predict(spec, params, data.val.inputs, cfg.exec);
                const double fine = net::accuracy(logits, data.val.labels);
                const auto pred = predict_clusters(logits, map, clusters);
                std::size_t hit = 0;
                for (std::size_t i = 0; i < pred.size(); ++i) {
                    hit += pred[i] == val_clusters[i] ? 1 : 0;
                }
                run.record(level, stats, fine, static_cast<double>(hit) / static_cast<double>(pred.size()), t0,
                           spec, params);
            }
            spent += epochs;
            run.end_level(level, spec, params);
        }
        final_phase(run, final_level, spec, params, cfg.max_epochs - spent, plain_ce);
    });
}

TrainReport train_staged(const net::ModelSpec& spec, const TrainData& data, const hier::LabelHierarchy& h,
                         const TrainConfig& cfg, std::uint64_t seed)
{
    check_data(spec, data);
    check_hierarchy(h, spec.num_classes);
    Run run("staged", data, cfg, seed);
    return guarded(run, [&] {
        const std::size_t levels = h.depth();
        const std::size_t final_level = levels - 1;
        // Each coarse stage may use at most an equal share of the budget.
        const std::size_t stage_cap = cfg.max_epochs / levels;
        net::ModelParams params = net::init_params(spec, seed);
        bool first = true;
        for (std::size_t level = 0; level < final_level; ++level) {
            net::ModelSpec stage_spec = spec;
            stage_spec.num_classes = h.levels[level].size();
            net::ModelParams stage;
            if (first) {
                stage = net::init_params(stage_spec, seed);
                first = false;
            } else {
                stage.encoder = params.encoder;
                stage.predictor = net::init_predictor(stage_spec, derive_seed(seed, kStagePredictorStream + level));
            }
            const auto train_y = transform_labels(data.train.labels, h.levels[level]);
            const auto val_y = transform_labels(data.val.labels, h.levels[level]);
            run.begin_level(level, stage_spec, stage);
            run.train_until_stop(level, stage_spec, stage, stage_cap, train_y, val_y, plain_ce, nullptr);
            run.end_level(level, stage_spec, stage);
            params.encoder = std::move(stage.encoder);
        }
        if (final_level > 0) {
            params.predictor = net::init_predictor(spec, derive_seed(seed, kStagePredictorStream + final_level));
        }
        final_phase(run, final_level, spec, params, cfg.max_epochs - std::min(cfg.max_epochs, run.epochs_done()),
                    plain_ce);
    });
}

net::LossResult multitask_loss(const Tensor& logits, std::span<const std::uint16_t> labels,
                               const std::vector<std::vector<std::size_t>>& cluster_maps)
{
    net::LossResult total{0.0f, Tensor({logits.dim(0), logits.dim(1)})};
    for (std::size_t l = 0; l < cluster_maps.size(); ++l) {
        const bool last = l + 1 == cluster_maps.size();
        net::LossResult part = last ? net::softmax_cross_entropy(logits, labels)
                                    : marginalized_loss(logits, labels, cluster_maps[l]);
        if (cluster_maps.size() == 1) {
            return part;
        }
        total.mean_loss += part.mean_loss;
        for (std::size_t i = 0; i < total.dlogits.size(); ++i) {
            total.dlogits[i] += part.dlogits[i];
        }
    }
    return total;
}

TrainReport train_multitask(const net::ModelSpec& spec, const TrainData& data,
                            const hier::LabelHierarchy& h, const TrainConfig& cfg, std::uint64_t seed)
{
    check_data(spec, data);
    check_hierarchy(h, spec.num_classes);
    Run run("multitask", data, cfg, seed);
    return guarded(run, [&] {
        std::vector<std::vector<std::size_t>> maps;
        for (std::size_t l = 0; l < h.depth(); ++l) {
            maps.push_back(hier::class_to_cluster(h, l));
        }
        net::ModelParams params = net::init_params(spec, seed);
        const LossFn loss = [&maps](const Tensor& logits, std::span<const std::uint16_t> y, std::size_t) {
            return multitask_loss(logits, y, maps);
        };
        final_phase(run, 0, spec, params, cfg.max_epochs, loss);
    });
}

std::vector<std::uint8_t> spl_select(std::span<const float> losses, double lambda)
{
    std::vector<std::uint8_t> v(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) {
        v[i] = static_cast<double>(losses[i]) < lambda ? 1 : 0;
    }
    return v;
}

net::LossResult spl_loss(const Tensor& logits, std::span<const std::uint16_t> labels, double lambda,
                         bool& fell_back)
{
    fell_back = false;
    const auto losses = net::per_sample_cross_entropy(logits, labels);
    const auto v = spl_select(losses, lambda);
    const std::size_t chosen = static_cast<std::size_t>(std::count(v.begin(), v.end(), 1));
    if (chosen == 0 || chosen == v.size()) {
        fell_back = chosen == 0 && !v.empty();
        return net::softmax_cross_entropy(logits, labels);
    }
    net::LossResult full = net::softmax_cross_entropy(logits, labels);
    const std::size_t n = labels.size();
    const std::size_t k = logits.dim(1);
    // Rescale the mean-over-N gradient to a mean over the selected samples.
    const float scale = static_cast<float>(n) / static_cast<float>(chosen);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        float* g = full.dlogits.data() + i * k;
        for (std::size_t j = 0; j < k; ++j) {
            g[j] = v[i] != 0 ? g[j] * scale : 0.0f;
        }
        if (v[i] != 0) {
            total += losses[i];
        }
    }
    full.mean_loss = static_cast<float>(total / static_cast<double>(chosen));
    return full;
}

TrainReport train_spl(const net::ModelSpec& spec, const TrainData& data, const SplConfig& spl,
                      const TrainConfig& cfg, std::uint64_t seed)
{
    check_data(spec, data);
    if (!(spl.initial_lambda > 0.0) || !(spl.growth_factor >= 1.0)) {
        throw ValidationError("SPL needs initialLambda > 0 and growthFactor >= 1");
    }
    Run run("spl", data, cfg, seed);
    return guarded(run, [&] {
        net::ModelParams params = net::init_params(spec, seed);
        const LossFn loss = [&](const Tensor& logits, std::span<const std::uint16_t> y, std::size_t epoch) {
            if (epoch <= spl.warmup_epochs) {
                return net::softmax_cross_entropy(logits, y);
            }
            const double steps = static_cast<double>(epoch - spl.warmup_epochs - 1);
            const double lambda = spl.initial_lambda * std::pow(spl.growth_factor, steps);
            bool fell_back = false;
            net::LossResult r = spl_loss(logits, y, lambda, fell_back);
            run.report.spl_fallback_batches += fell_back ? 1 : 0;
            return r;
        };
        final_phase(run, 0, spec, params, cfg.max_epochs, loss);
    });
}

std::string epochs_csv(const TrainReport& r)
{
    std::ostringstream out;
    out << "epoch,level,train_acc,val_acc,val_acc_cluster,loss,seconds\n";
    for (const auto& e : r.epochs) {
        out << e.epoch << ',' << e.level << ',' << sim::format_number(e.train_acc) << ','
            << sim::format_number(e.val_acc) << ',' << sim::format_number(e.val_acc_cluster) << ','
            << sim::format_number(e.loss) << ',' << sim::format_number(e.seconds) << '\n';
    }
    return out.str();
}

nlohmann::json to_json(const TrainReport& r)
{
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : r.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"level", e.level},
                          {"trainAcc", e.train_acc},
                          {"valAcc", e.val_acc},
                          {"valAccCluster", e.val_acc_cluster},
                          {"loss", e.loss},
                          {"seconds", e.seconds}});
    }
    nlohmann::json doc = {{"method", r.method},
                          {"epochs", epochs},
                          {"levelStart", r.level_start},
                          {"bestValEpoch", r.best_val_epoch},
                          {"bestValAcc", r.best_val_acc},
                          {"testAccAtBestVal", r.test_acc},
                          {"totalEpochs", r.total_epochs()},
                          {"wallClockSeconds", r.wall_clock_seconds},
                          {"failed", r.failed}};
    if (r.failed) {
        doc["failure"] = r.failure;
    }
    if (r.method == "spl") {
        doc["splFallbackBatches"] = r.spl_fallback_batches;
    }
    return doc;
}

}  // namespace c2f::cur

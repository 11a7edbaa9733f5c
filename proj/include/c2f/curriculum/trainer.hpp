#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "c2f/curriculum/coarse.hpp"
#include "c2f/datagen/dataset.hpp"
#include "c2f/hierarchy.hpp"
#include "c2f/netcore/model.hpp"
#include "c2f/netcore/optimizer.hpp"

namespace c2f::cur {

struct LabelledSet {
    Tensor inputs;
    std::vector<std::uint16_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

LabelledSet labelled_set(const data::Dataset& ds);

struct TrainData {
    LabelledSet train;
    LabelledSet val;
    LabelledSet test;
    std::size_t num_classes = 0;
};

struct LevelEvent {
    std::size_t level = 0;
    const net::ModelSpec* spec = nullptr;
    const net::ModelParams* params = nullptr;
};

struct TrainConfig {
    net::OptimizerHyper optimizer;
    std::size_t batch_size = 512;
    std::size_t max_epochs = 300;
    std::size_t patience = 50;
    net::ExecContext exec;
    // Observers for tests and tooling; never alter training.
    std::function<void(const LevelEvent&)> on_level_start;
    std::function<void(const LevelEvent&)> on_level_end;
    std::function<void(const LevelEvent&, std::size_t epoch)> on_epoch_end;
};

enum class CurriculumMode { Continuous, Staged };

struct CurriculumConfig {
    CurriculumMode mode = CurriculumMode::Continuous;
    TMode t_mode = TMode::AutoText;
    // Total coarse-level epochs for continuous mode.
    std::size_t total_coarse_epochs = 0;
};

struct SplConfig {
    double initial_lambda = 1.0;
    double growth_factor = 1.1;
    std::size_t warmup_epochs = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based, counted across levels
    std::size_t level = 0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double val_acc_cluster = 0.0;
    double loss = 0.0;
    double seconds = 0.0;
    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Outcome of one training run. Test accuracy is measured once, on the
/// parameters with the best validation accuracy of the final level.
struct TrainReport {
    std::string method;
    std::vector<EpochRecord> epochs;
    // First 1-based epoch of each level (a level with no epochs repeats the next start).
    std::vector<std::size_t> level_start;
    std::size_t best_val_epoch = 0;
    double best_val_acc = 0.0;
    double test_acc = 0.0;
    double wall_clock_seconds = 0.0;
    bool failed = false;
    std::string failure;
    std::size_t spl_fallback_batches = 0;
    net::ModelSpec final_spec;
    net::ModelParams final_params;

    std::size_t total_epochs() const noexcept { return epochs.size(); }
    std::vector<double> val_curve() const;
};

TrainReport train_baseline(const net::ModelSpec& spec, const TrainData& data, const TrainConfig& cfg,
                           std::uint64_t seed);
TrainReport train_continuous(const net::ModelSpec& spec, const TrainData& data,
                             const hier::LabelHierarchy& h, const CurriculumConfig& ccfg,
                             const TrainConfig& cfg, std::uint64_t seed);
TrainReport train_staged(const net::ModelSpec& spec, const TrainData& data, const hier::LabelHierarchy& h,
                         const TrainConfig& cfg, std::uint64_t seed);
TrainReport train_multitask(const net::ModelSpec& spec, const TrainData& data,
                            const hier::LabelHierarchy& h, const TrainConfig& cfg, std::uint64_t seed);
TrainReport train_spl(const net::ModelSpec& spec, const TrainData& data, const SplConfig& spl,
                      const TrainConfig& cfg, std::uint64_t seed);

// Sum over levels of the marginalized loss; the singleton level reduces to cross-entropy.
net::LossResult multitask_loss(const Tensor& logits, std::span<const std::uint16_t> labels,
                               const std::vector<std::vector<std::size_t>>& cluster_maps);

// Selection mask v_i = loss_i < lambda.
std::vector<std::uint8_t> spl_select(std::span<const float> losses, double lambda);
// Weighted mean cross-entropy over selected samples; all samples when none is selected.
// Sets fell_back when the fallback applied.
net::LossResult spl_loss(const Tensor& logits, std::span<const std::uint16_t> labels, double lambda,
                         bool& fell_back);

std::string epochs_csv(const TrainReport& r);
nlohmann::json to_json(const TrainReport& r);

}  // namespace c2f::cur

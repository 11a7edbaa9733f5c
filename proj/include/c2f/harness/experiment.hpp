#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "c2f/curriculum/trainer.hpp"
#include "c2f/harness/config.hpp"
#include "c2f/hierarchy.hpp"

namespace c2f::harness {

/// One trained model within a comparison cell.
struct RunRecord {
    std::string name;    // file stem for curves/ and runs/
    std::string method;  // summary row label, e.g. "continuous-EmbeddingDist"
    std::uint64_t seed = 0;
    std::string metric;  // empty for methods without a hierarchy
    std::size_t curriculum_length = 0;
    std::vector<std::size_t> level_sizes;
    std::string hierarchy_file;  // relative to the output directory
    cur::TrainReport report;
};

struct HierarchyRecord {
    std::string file;
    std::vector<std::string> class_names;
    hier::LabelHierarchy hierarchy;
};

struct MethodStats {
    std::string method;
    std::vector<std::uint64_t> seeds;
    std::vector<double> accuracy;  // per seed, test accuracy at best validation
    double mean = 0.0;
    double stderr_ = 0.0;
    // Paired against the baseline of the same seed (empty for the baseline).
    std::vector<double> gains;
    double gain_mean = 0.0;
    double gain_stderr = 0.0;
    std::size_t failures = 0;
    double mean_epochs = 0.0;
};

struct ComparisonSummary {
    std::optional<std::int64_t> train_count;     // per class; unset means all
    std::optional<std::size_t> curriculum_length;  // unset means the tMode rule
    std::vector<MethodStats> methods;
    std::vector<RunRecord> runs;
    std::vector<HierarchyRecord> hierarchies;
};

// Aggregates runs (in order) into per-method statistics; gains are computed
// per seed and then averaged.
std::vector<MethodStats> aggregate(const std::vector<RunRecord>& runs);

// Mean and sample-stddev / sqrt(n) (zero for n < 2).
std::pair<double, double> mean_stderr(const std::vector<double>& xs);

// Rounds to 9 significant digits so text and JSON forms agree.
double round9(double v);

ComparisonSummary run_experiment(const ExperimentConfig& cfg,
                                 std::optional<std::int64_t> train_count,
                                 std::optional<std::size_t> curriculum_length);
// Cartesian product of train counts and curriculum lengths.
std::vector<ComparisonSummary> sweep(const ExperimentConfig& cfg);

}  // namespace c2f::harness

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "c2f/curriculum/trainer.hpp"
#include "c2f/datagen/dataset.hpp"
#include "c2f/datagen/generators.hpp"
#include "c2f/similarity.hpp"

namespace c2f::harness {

/// A synthetic generator (pool and test set drawn per seed) or dataset files.
struct DatasetSpec {
    std::string generator;  // "shapes", "blobs", "vectors"; empty for files
    nlohmann::json generator_config = nlohmann::json::object();
    std::size_t pool_per_class = 0;
    std::size_t test_per_class = 0;
    std::filesystem::path file;
    std::filesystem::path test_file;
};

enum class Method { Baseline, Continuous, Staged, Multitask, Spl };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
bool uses_hierarchy(Method m);

struct ExperimentConfig {
    DatasetSpec dataset;
    std::vector<net::LayerSpec> layers;
    net::OptimizerHyper optimizer;
    std::size_t batch_size = 512;
    std::size_t max_epochs = 300;
    std::size_t patience = 50;
    double val_fraction = 0.2;
    std::vector<Method> methods = {Method::Baseline, Method::Continuous};
    std::vector<sim::MetricKind> metrics = {sim::MetricKind::EmbeddingDist};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    // Unset entries keep every available training sample.
    std::vector<std::optional<std::int64_t>> per_class_train_counts = {std::nullopt};
    cur::TMode t_mode = cur::TMode::AutoText;
    std::optional<std::size_t> fixed_t;
    std::vector<std::size_t> curriculum_length_sweep;
    cur::SplConfig spl;
    std::filesystem::path hierarchy_file;
    std::filesystem::path distance_matrix_file;
    int threads = 0;
    bool deterministic = true;
    // Concurrent seed runs.
    std::size_t workers = 1;
    // Called once per finished run, serialized across workers; not part of the file format.
    std::function<void(const std::string&)> progress;
};

// Throws ValidationError on unknown keys, bad values or missing files.
// Relative paths resolve against base_dir.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

data::ShapesConfig parse_shapes_config(const nlohmann::json& doc);
data::BlobsConfig parse_blobs_config(const nlohmann::json& doc);
data::VectorsConfig parse_vectors_config(const nlohmann::json& doc);
// Generates samples_per_class samples per class (a count field in the config is overridden).
data::Dataset generate(const std::string& generator, const nlohmann::json& config,
                       std::size_t samples_per_class, std::uint64_t seed);

net::ModelSpec model_spec(const ExperimentConfig& cfg, const data::Dataset& ds);
cur::TrainConfig train_config(const ExperimentConfig& cfg);

/// JSON object reader that remembers which keys were consumed, so leftovers
/// can be reported as typos.
class KeyReader {
public:
    KeyReader(const nlohmann::json& obj, std::string where);

    bool has(const std::string& key) const;
    const nlohmann::json& raw(const std::string& key);

    template <typename T>
    T get(const std::string& key, T fallback)
    {
        if (!has(key)) {
            return fallback;
        }
        try {
            return raw(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw_type(key);
        }
    }

    void finish() const;

private:
    [[noreturn]] void throw_type(const std::string& key) const;

    const nlohmann::json& obj_;
    std::string where_;
    std::vector<std::string> used_;
};

}  // namespace c2f::harness

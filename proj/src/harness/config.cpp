#include "c2f/harness/config.hpp"

#include <algorithm>
#include <fstream>

#include "c2f/error.hpp"

namespace c2f::harness {

namespace fs = std::filesystem;

KeyReader::KeyReader(const nlohmann::json& obj, std::string where) : obj_(obj), where_(std::move(where))
{
    if (!obj_.is_object()) {
        throw ValidationError(where_ + " must be a JSON object");
    }
}

bool KeyReader::has(const std::string& key) const
{
    return obj_.contains(key) && !obj_.at(key).is_null();
}

const nlohmann::json& KeyReader::raw(const std::string& key)
{
    used_.push_back(key);
    return obj_.at(key);
}

void KeyReader::finish() const
{
    for (const auto& item : obj_.items()) {
        if (std::find(used_.begin(), used_.end(), item.key()) == used_.end() && !item.value().is_null()) {
            throw ValidationError("unknown key '" + item.key() + "' in " + where_);
        }
    }
}

void KeyReader::throw_type(const std::string& key) const
{
    throw ValidationError("key '" + key + "' in " + where_ + " has the wrong type");
}

std::string to_string(Method m)
{
    switch (m) {
    case Method::Baseline: return "baseline";
    case Method::Continuous: return "continuous";
    case Method::Staged: return "staged";
    case Method::Multitask: return "multitask";
    case Method::Spl: return "spl";
    }
    return "unknown";
}

Method method_from_string(const std::string& name)
{
    for (Method m : {Method::Baseline, Method::Continuous, Method::Staged, Method::Multitask, Method::Spl}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw ValidationError("unknown method '" + name + "'");
}

bool uses_hierarchy(Method m)
{
    return m == Method::Continuous || m == Method::Staged || m == Method::Multitask;
}

nlohmann::json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

data::ShapesConfig parse_shapes_config(const nlohmann::json& doc)
{
    KeyReader r(doc, "shapes config");
    data::ShapesConfig c;
    c.image_size = r.get("imageSize", c.image_size);
    c.samples_per_class = r.get("samplesPerClass", c.samples_per_class);
    c.per_shape = r.get("perShape", c.per_shape);
    c.min_radius = r.get("minRadius", c.min_radius);
    c.max_radius = r.get("maxRadius", c.max_radius);
    c.min_aspect = r.get("minAspect", c.min_aspect);
    c.max_aspect = r.get("maxAspect", c.max_aspect);
    r.finish();
    return c;
}

data::BlobsConfig parse_blobs_config(const nlohmann::json& doc)
{
    KeyReader r(doc, "blobs config");
    data::BlobsConfig c;
    c.image_size = r.get("imageSize", c.image_size);
    c.blobs = r.get("k", c.blobs);
    c.samples_per_class = r.get("samplesPerClass", c.samples_per_class);
    c.min_sigma = r.get("minSigma", c.min_sigma);
    c.max_sigma = r.get("maxSigma", c.max_sigma);
    c.min_band_width = r.get("minBandWidth", c.min_band_width);
    r.finish();
    return c;
}

data::VectorsConfig parse_vectors_config(const nlohmann::json& doc)
{
    KeyReader r(doc, "vectors config");
    data::VectorsConfig c;
    c.dim = r.get("dim", c.dim);
    c.num_classes = r.get("numClasses", c.num_classes);
    c.tree_depth = r.get("treeDepth", c.tree_depth);
    c.level_scales = r.get("levelScales", c.level_scales);
    c.noise_scale = r.get("noiseScale", c.noise_scale);
    c.samples_per_class = r.get("samplesPerClass", c.samples_per_class);
    c.tree_seed = r.get("treeSeed", c.tree_seed);
    r.finish();
    return c;
}

data::Dataset generate(const std::string& generator, const nlohmann::json& config,
                       std::size_t samples_per_class, std::uint64_t seed)
{
    if (generator == "shapes") {
        auto c = parse_shapes_config(config);
        c.samples_per_class = samples_per_class;
        return data::gen_shapes(c, seed);
    }
    if (generator == "blobs") {
        auto c = parse_blobs_config(config);
        c.samples_per_class = samples_per_class;
        return data::gen_blobs(c, seed);
    }
    if (generator == "vectors") {
        auto c = parse_vectors_config(config);
        c.samples_per_class = samples_per_class;
        return data::gen_vectors(c, seed);
    }
    throw ValidationError("unknown generator '" + generator + "'");
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p)
{
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

void require_file(const fs::path& p, const char* what)
{
    if (!fs::exists(p)) {
        throw ValidationError(std::string(what) + " '" + p.string() + "' does not exist");
    }
}

DatasetSpec parse_dataset(const nlohmann::json& doc, const fs::path& base)
{
    KeyReader r(doc, "dataset");
    DatasetSpec d;
    if (r.has("generator")) {
        d.generator = r.get<std::string>("generator", "");
        d.generator_config = r.get<nlohmann::json>("config", nlohmann::json::object());
        d.pool_per_class = r.get<std::size_t>("poolPerClass", 0);
        d.test_per_class = r.get<std::size_t>("testPerClass", 0);
        // Validates the generator name and its keys up front.
        generate(d.generator, d.generator_config, 0, 0);
        if (d.pool_per_class == 0 || d.test_per_class == 0) {
            throw ValidationError("dataset needs poolPerClass and testPerClass > 0");
        }
    } else if (r.has("file")) {
        d.file = resolve(base, r.get<std::string>("file", ""));
        d.test_file = resolve(base, r.get<std::string>("testFile", ""));
        require_file(d.file, "dataset file");
        require_file(d.test_file, "test dataset file");
    } else {
        throw ValidationError("dataset needs either 'generator' or 'file'");
    }
    r.finish();
    return d;
}

}  // namespace

ExperimentConfig parse_experiment_config(const nlohmann::json& doc, const fs::path& base)
{
    KeyReader r(doc, "experiment config");
    ExperimentConfig c;
    if (!r.has("dataset")) {
        throw ValidationError("experiment config needs a 'dataset' section");
    }
    c.dataset = parse_dataset(r.raw("dataset"), base);

    if (!r.has("model")) {
        throw ValidationError("experiment config needs a 'model' section");
    }
    {
        KeyReader m(r.raw("model"), "model");
        if (!m.has("layers") || !m.raw("layers").is_array()) {
            throw ValidationError("model needs a 'layers' array");
        }
        for (const auto& item : m.raw("layers")) {
            KeyReader l(item, "model layer");
            net::LayerSpec spec;
            spec.kind = net::layer_kind_from_string(l.get<std::string>("type", ""));
            spec.units = l.get<std::size_t>("units", 0);
            l.finish();
            c.layers.push_back(spec);
        }
        m.finish();
    }

    if (r.has("optimizer")) {
        KeyReader o(r.raw("optimizer"), "optimizer");
        const auto kind = o.get<std::string>("kind", "adam");
        if (kind == "adam") {
            c.optimizer.kind = net::OptimizerKind::Adam;
        } else if (kind == "sgd") {
            c.optimizer.kind = net::OptimizerKind::SgdMomentum;
        } else {
            throw ValidationError("optimizer kind must be 'adam' or 'sgd'");
        }
        c.optimizer.learning_rate = o.get("learningRate", c.optimizer.learning_rate);
        c.optimizer.momentum = o.get("momentum", c.optimizer.momentum);
        c.optimizer.beta1 = o.get("beta1", c.optimizer.beta1);
        c.optimizer.beta2 = o.get("beta2", c.optimizer.beta2);
        c.optimizer.epsilon = o.get("epsilon", c.optimizer.epsilon);
        c.optimizer.weight_decay = o.get("weightDecay", c.optimizer.weight_decay);
        o.finish();
    }

    if (r.has("training")) {
        KeyReader t(r.raw("training"), "training");
        c.batch_size = t.get("batchSize", c.batch_size);
        c.max_epochs = t.get("maxEpochs", c.max_epochs);
        c.patience = t.get("patience", c.patience);
        c.val_fraction = t.get("valFraction", c.val_fraction);
        t.finish();
    }
    if (c.batch_size == 0) {
        throw ValidationError("batchSize must be positive");
    }
    if (!(c.val_fraction > 0.0 && c.val_fraction < 1.0)) {
        throw ValidationError("valFraction must lie in (0, 1)");
    }

    if (r.has("methods")) {
        c.methods.clear();
        for (const auto& name : r.get<std::vector<std::string>>("methods", {})) {
            c.methods.push_back(method_from_string(name));
        }
    }
    if (std::find(c.methods.begin(), c.methods.end(), Method::Baseline) == c.methods.end()) {
        c.methods.insert(c.methods.begin(), Method::Baseline);
    }
    if (r.has("metrics")) {
        c.metrics.clear();
        for (const auto& name : r.get<std::vector<std::string>>("metrics", {})) {
            c.metrics.push_back(sim::metric_from_string(name));
        }
    }
    c.seeds = r.get("seeds", c.seeds);
    if (c.seeds.empty()) {
        throw ValidationError("seeds must be nonempty");
    }
    if (r.has("perClassTrainCounts")) {
        c.per_class_train_counts.clear();
        for (const auto& v : r.raw("perClassTrainCounts")) {
            if (v.is_null()) {
                c.per_class_train_counts.emplace_back(std::nullopt);
            } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
                c.per_class_train_counts.emplace_back(v.get<std::int64_t>());
            } else {
                throw ValidationError("perClassTrainCounts entries must be nonnegative integers or null");
            }
        }
        if (c.per_class_train_counts.empty()) {
            c.per_class_train_counts.emplace_back(std::nullopt);
        }
    }
    if (r.has("curriculum")) {
        KeyReader cu(r.raw("curriculum"), "curriculum");
        c.t_mode = cur::t_mode_from_string(cu.get<std::string>("tMode", "auto-text"));
        if (cu.has("T")) {
            c.fixed_t = cu.get<std::size_t>("T", 0);
        }
        cu.finish();
        if (c.t_mode == cur::TMode::Fixed && !c.fixed_t) {
            throw ValidationError("curriculum tMode 'fixed' needs T");
        }
    }
    c.curriculum_length_sweep = r.get("curriculumLengthSweep", c.curriculum_length_sweep);
    if (r.has("spl")) {
        KeyReader s(r.raw("spl"), "spl");
        c.spl.initial_lambda = s.get("initialLambda", c.spl.initial_lambda);
        c.spl.growth_factor = s.get("growthFactor", c.spl.growth_factor);
        c.spl.warmup_epochs = s.get("warmupEpochs", c.spl.warmup_epochs);
        s.finish();
        if (!(c.spl.initial_lambda > 0.0) || !(c.spl.growth_factor >= 1.0)) {
            throw ValidationError("spl needs initialLambda > 0 and growthFactor >= 1");
        }
    }
    if (r.has("hierarchyFile")) {
        c.hierarchy_file = resolve(base, r.get<std::string>("hierarchyFile", ""));
        require_file(c.hierarchy_file, "hierarchy file");
    }
    if (r.has("distanceMatrixFile")) {
        c.distance_matrix_file = resolve(base, r.get<std::string>("distanceMatrixFile", ""));
        require_file(c.distance_matrix_file, "distance matrix file");
    }
    c.threads = r.get("threads", c.threads);
    c.deterministic = r.get("deterministic", c.deterministic);
    c.workers = std::max<std::size_t>(1, r.get("workers", c.workers));
    r.finish();
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path)
{
    return parse_experiment_config(read_json_file(path), path.parent_path());
}

net::ModelSpec model_spec(const ExperimentConfig& cfg, const data::Dataset& ds)
{
    net::ModelSpec spec{ds.sample_shape, cfg.layers, ds.num_classes};
    net::validate(spec);
    return spec;
}

cur::TrainConfig train_config(const ExperimentConfig& cfg)
{
    cur::TrainConfig t;
    t.optimizer = cfg.optimizer;
    t.batch_size = cfg.batch_size;
    t.max_epochs = cfg.max_epochs;
    t.patience = cfg.patience;
    t.exec.deterministic = cfg.deterministic;
    t.exec.threads = cfg.threads;
    return t;
}

}  // namespace c2f::harness

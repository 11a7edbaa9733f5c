#include "c2f/datagen/generators.hpp"
#include "c2f/error.hpp"
#include "c2f/rng.hpp"

namespace c2f::data {

namespace {

void validate(const VectorsConfig& cfg)
{
    if (cfg.dim == 0) {
        throw ValidationError("vectors: dim must be positive");
    }
    if (cfg.tree_depth == 0 || cfg.tree_depth > 15) {
        throw ValidationError("vectors: tree depth must lie in [1, 15]");
    }
    if (cfg.num_classes < 2 || cfg.num_classes > (std::size_t{1} << cfg.tree_depth)) {
        throw ValidationError("vectors: need 2 <= K <= 2^treeDepth");
    }
    if (cfg.level_scales.size() != cfg.tree_depth) {
        throw ValidationError("vectors: one level scale per tree level is required");
    }
    for (double s : cfg.level_scales) {
        if (!(s >= 0.0)) {
            throw ValidationError("vectors: level scales must be non-negative");
        }
    }
    if (!(cfg.noise_scale >= 0.0)) {
        throw ValidationError("vectors: noise scale must be non-negative");
    }
}

}  // namespace

Dataset gen_vectors(const VectorsConfig& cfg, std::uint64_t seed)
{
    validate(cfg);
    Rng tree_rng(derive_seed(cfg.tree_seed, 0));
    Rng rng(derive_seed(seed, 1));
    const std::size_t dim = cfg.dim;

    // Level-by-level means; node j at depth d has children 2j and 2j+1.
    std::vector<std::vector<double>> level(1, std::vector<double>(dim, 0.0));
    for (std::size_t d = 0; d < cfg.tree_depth; ++d) {
        std::vector<std::vector<double>> next;
        next.reserve(level.size() * 2);
        for (const auto& parent : level) {
            for (int child = 0; child < 2; ++child) {
                std::vector<double> mean = parent;
                for (double& v : mean) {
                    v += cfg.level_scales[d] * tree_rng.normal();
                }
                next.push_back(std::move(mean));
            }
        }
        level = std::move(next);
    }

    Dataset ds;
    ds.type = SampleType::Vector;
    ds.sample_shape = net::Shape3{1, 1, dim};
    ds.num_classes = cfg.num_classes;
    nlohmann::json means = nlohmann::json::array();
    for (std::size_t k = 0; k < cfg.num_classes; ++k) {
        ds.class_names.push_back("leaf" + std::to_string(k));
        means.push_back(level[k]);
    }
    ds.meta["generator"] = {{"kind", "vectors"},
                            {"dim", dim},
                            {"samplesPerClass", cfg.samples_per_class},
                            {"seed", seed},
                            {"treeSeed", cfg.tree_seed}};
    ds.meta["treeDepth"] = cfg.tree_depth;
    ds.meta["classMeans"] = means;

    ds.features.reserve(cfg.num_classes * cfg.samples_per_class * dim);
    for (std::size_t k = 0; k < cfg.num_classes; ++k) {
        for (std::size_t s = 0; s < cfg.samples_per_class; ++s) {
            for (std::size_t i = 0; i < dim; ++i) {
                ds.features.push_back(static_cast<float>(level[k][i] + cfg.noise_scale * rng.normal()));
            }
            ds.labels.push_back(static_cast<std::uint16_t>(k));
        }
    }
    return ds;
}

std::vector<std::vector<std::vector<std::size_t>>> vector_tree_levels(const VectorsConfig& cfg)
{
    validate(cfg);
    std::vector<std::vector<std::vector<std::size_t>>> levels;
    for (std::size_t d = 1; d < cfg.tree_depth; ++d) {
        const std::size_t shift = cfg.tree_depth - d;
        std::vector<std::vector<std::size_t>> clusters;
        for (std::size_t k = 0; k < cfg.num_classes; ++k) {
            const std::size_t node = k >> shift;
            if (clusters.empty() || (clusters.back().front() >> shift) != node) {
                clusters.emplace_back();
            }
            clusters.back().push_back(k);
        }
        if (clusters.size() > 1 && clusters.size() < cfg.num_classes &&
            (levels.empty() || levels.back().size() != clusters.size())) {
            levels.push_back(std::move(clusters));
        }
    }
    return levels;
}

}  // namespace c2f::data

#include <algorithm>
#include <cmath>

#include "c2f/datagen/generators.hpp"
#include "c2f/error.hpp"
#include "c2f/rng.hpp"

namespace c2f::data {

namespace {

constexpr std::size_t kMaxBlobs = 16;
constexpr int kMaxAttempts = 1000;
constexpr double kBandLo = 0.2;
constexpr double kBandHi = 0.8;

struct Blob {
    BlobCenter center;
    double sigma_x;
    double sigma_y;
};

}  // namespace

std::size_t blob_class_count(std::size_t blobs)
{
    if (blobs < 2 || blobs > kMaxBlobs) {
        throw ValidationError("blobs: k must lie in [2, 16]");
    }
    return std::size_t{1} << (blobs - 1);
}

std::string blob_class_name(std::size_t class_id, std::size_t blobs)
{
    const std::size_t steps = blobs - 1;
    std::string name(steps, 'L');
    for (std::size_t i = 0; i < steps; ++i) {
        if ((class_id >> (steps - 1 - i)) & 1U) {
            name[i] = 'R';
        }
    }
    return name;
}

std::string derive_blob_label(const std::vector<BlobCenter>& centers)
{
    if (centers.size() < 2) {
        throw ValidationError("blob label needs at least two centers");
    }
    std::string label;
    for (std::size_t i = 0; i + 1 < centers.size(); ++i) {
        if (centers[i + 1].x == centers[i].x) {
            throw ValidationError("consecutive blob centers share an x coordinate");
        }
        label.push_back(centers[i + 1].x < centers[i].x ? 'L' : 'R');
    }
    return label;
}

Dataset gen_blobs(const BlobsConfig& cfg, std::uint64_t seed)
{
    const std::size_t classes = blob_class_count(cfg.blobs);
    if (cfg.image_size < 4) {
        throw ValidationError("blobs: image size must be at least 4");
    }
    if (!(cfg.min_sigma > 0.0) || cfg.min_sigma > cfg.max_sigma) {
        throw ValidationError("blobs: sigma range must satisfy 0 < min <= max");
    }

    const std::size_t size = cfg.image_size;
    const double side = static_cast<double>(size);
    Dataset ds;
    ds.type = SampleType::Image;
    ds.sample_shape = net::Shape3{size, size, 1};
    ds.num_classes = classes;
    for (std::size_t k = 0; k < classes; ++k) {
        ds.class_names.push_back(blob_class_name(k, cfg.blobs));
    }
    ds.meta["generator"] = {{"kind", "blobs"},
                            {"imageSize", size},
                            {"blobs", cfg.blobs},
                            {"samplesPerClass", cfg.samples_per_class},
                            {"seed", seed}};
    ds.meta["samples"] = nlohmann::json::array();
    const std::size_t total = classes * cfg.samples_per_class;
    ds.pixels.assign(total * size * size, 0);
    ds.labels.reserve(total);

    Rng rng(seed);
    std::vector<Blob> blobs(cfg.blobs);
    std::vector<double> canvas(size * size);
    std::size_t index = 0;
    for (std::size_t k = 0; k < classes; ++k) {
        const std::string path = blob_class_name(k, cfg.blobs);
        for (std::size_t s = 0; s < cfg.samples_per_class; ++s) {
            bool placed = false;
            for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
                placed = true;
                double lo = 0.0;
                double hi = side;
                for (std::size_t b = 0; b < cfg.blobs; ++b) {
                    const double width = (kBandHi - kBandLo) * (hi - lo);
                    if (width < cfg.min_band_width) {
                        placed = false;
                        break;
                    }
                    Blob& blob = blobs[b];
                    blob.center.x = rng.uniform(lo + kBandLo * (hi - lo), lo + kBandHi * (hi - lo));
                    blob.center.y = rng.uniform(kBandLo * side, kBandHi * side);
                    blob.sigma_x = rng.uniform(cfg.min_sigma, cfg.max_sigma);
                    blob.sigma_y = rng.uniform(cfg.min_sigma, cfg.max_sigma);
                    if (b + 1 < cfg.blobs) {
                        if (path[b] == 'L') {
                            lo = 0.0;
                            hi = blob.center.x;
                        } else {
                            lo = blob.center.x;
                            hi = side;
                        }
                    }
                }
            }
            if (!placed) {
                throw RuntimeFailure("blobs: placement band empty after 1000 attempts");
            }

            std::fill(canvas.begin(), canvas.end(), 0.0);
            for (const Blob& blob : blobs) {
                for (std::size_t y = 0; y < size; ++y) {
                    const double dy = (static_cast<double>(y) + 0.5 - blob.center.y) / blob.sigma_y;
                    for (std::size_t x = 0; x < size; ++x) {
                        const double dx = (static_cast<double>(x) + 0.5 - blob.center.x) / blob.sigma_x;
                        canvas[y * size + x] += 255.0 * std::exp(-0.5 * (dx * dx + dy * dy));
                    }
                }
            }
            std::uint8_t* image = ds.pixels.data() + index * size * size;
            for (std::size_t i = 0; i < canvas.size(); ++i) {
                image[i] = static_cast<std::uint8_t>(std::lround(std::clamp(canvas[i], 0.0, 255.0)));
            }

            nlohmann::json centers = nlohmann::json::array();
            nlohmann::json sigmas = nlohmann::json::array();
            for (const Blob& blob : blobs) {
                centers.push_back({blob.center.x, blob.center.y});
                sigmas.push_back({blob.sigma_x, blob.sigma_y});
            }
            ds.meta["samples"].push_back({{"centers", centers}, {"sigmas", sigmas}, {"path", path}});
            ds.labels.push_back(static_cast<std::uint16_t>(k));
            ++index;
        }
    }
    return ds;
}

}  // namespace c2f::data

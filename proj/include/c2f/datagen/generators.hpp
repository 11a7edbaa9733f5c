#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c2f/datagen/dataset.hpp"

namespace c2f::data {

inline constexpr std::size_t kShapeKinds = 10;  // circle, ellipse, 3..10-gon
inline constexpr std::size_t kShapeColors = 3;  // magenta, cyan, grey

struct Rgb {
    std::uint8_t r, g, b;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

std::string shape_name(std::size_t kind);
std::string color_name(std::size_t color);
Rgb color_value(std::size_t color);
// Class id of a (shape, color) pair and its inverse.
std::size_t shape_class(std::size_t kind, std::size_t color);
std::pair<std::size_t, std::size_t> shape_class_parts(std::size_t class_id);

struct ShapesConfig {
    std::size_t image_size = 64;
    std::size_t samples_per_class = 0;
    // samples_per_class counts per shape kind and colors are drawn at random.
    bool per_shape = false;
    // Circumradius range as a fraction of the image side.
    double min_radius = 0.15;
    double max_radius = 0.35;
    // Minor/major axis ratio range for ellipses.
    double min_aspect = 0.45;
    double max_aspect = 0.75;
};

Dataset gen_shapes(const ShapesConfig& cfg, std::uint64_t seed);

struct BlobsConfig {
    std::size_t image_size = 64;
    std::size_t blobs = 3;  // k
    std::size_t samples_per_class = 0;
    double min_sigma = 2.0;
    double max_sigma = 5.0;
    // Narrowest admissible x placement band, in pixels.
    double min_band_width = 1.0;
};

struct BlobCenter {
    double x = 0.0;
    double y = 0.0;
};

std::size_t blob_class_count(std::size_t blobs);
std::string blob_class_name(std::size_t class_id, std::size_t blobs);
// 'L' when the next center lies left of the current one, else 'R'.
std::string derive_blob_label(const std::vector<BlobCenter>& centers);
Dataset gen_blobs(const BlobsConfig& cfg, std::uint64_t seed);

struct VectorsConfig {
    std::size_t dim = 16;
    std::size_t num_classes = 8;
    std::size_t tree_depth = 3;
    // Standard deviation of the child offset at each tree level (root child first).
    std::vector<double> level_scales = {1.0, 0.5, 0.25};
    double noise_scale = 0.1;
    std::size_t samples_per_class = 0;
    // Seeds the class means; the call seed only draws samples, so sets drawn with
    // different seeds share one tree.
    std::uint64_t tree_seed = 0;
};

// Class means come from a binary tree of Gaussian perturbations; class k is leaf k.
// meta["classMeans"] holds the K means, meta["treeDepth"] the depth.
Dataset gen_vectors(const VectorsConfig& cfg, std::uint64_t seed);
// Partitions of the generating tree for depths 1..treeDepth-1 (coarsest first).
std::vector<std::vector<std::vector<std::size_t>>> vector_tree_levels(const VectorsConfig& cfg);

}  // namespace c2f::data

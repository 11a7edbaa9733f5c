#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "c2f/netcore/model.hpp"
#include "c2f/tensor.hpp"

namespace c2f::data {

enum class SampleType : std::uint8_t { Image = 0, Vector = 1 };

/// Labelled samples, either 8-bit images (N x H x W x C) or float vectors
/// (N x dim, stored with shape {1, 1, dim}).
struct Dataset {
    SampleType type = SampleType::Image;
    net::Shape3 sample_shape;
    std::size_t num_classes = 0;
    std::vector<std::uint8_t> pixels;
    std::vector<float> features;
    std::vector<std::uint16_t> labels;
    std::vector<std::string> class_names;
    // Free-form generator metadata; meta["samples"], when present, holds one
    // entry per sample and follows the samples through subset().
    nlohmann::json meta = nlohmann::json::object();

    std::size_t size() const noexcept { return labels.size(); }
    bool empty() const noexcept { return labels.empty(); }
};

// Throws ValidationError when counts, labels or storage sizes disagree.
void check(const Dataset& ds);

// Samples as a float tensor (images scaled to [0, 1]).
Tensor to_tensor(const Dataset& ds);
Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);
std::vector<std::size_t> class_histogram(const Dataset& ds);
// Class names, or "0".."K-1" when none were recorded.
std::vector<std::string> class_names_or_ids(const Dataset& ds);

}  // namespace c2f::data

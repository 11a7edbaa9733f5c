#include "c2f/datagen/dataset.hpp"

#include <string>

#include "c2f/error.hpp"

namespace c2f::data {

void check(const Dataset& ds)
{
    const std::size_t n = ds.labels.size();
    const std::size_t per = ds.sample_shape.size();
    if (ds.type == SampleType::Image) {
        if (ds.pixels.size() != n * per || !ds.features.empty()) {
            throw ValidationError("image dataset storage does not match its sample count");
        }
    } else if (ds.features.size() != n * per || !ds.pixels.empty()) {
        throw ValidationError("vector dataset storage does not match its sample count");
    }
    for (std::uint16_t y : ds.labels) {
        if (y >= ds.num_classes) {
            throw ValidationError("label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(ds.num_classes) + ")");
        }
    }
    if (!ds.class_names.empty() && ds.class_names.size() != ds.num_classes) {
        throw ValidationError("class name count differs from the number of classes");
    }
    if (ds.meta.contains("samples") && ds.meta["samples"].size() != n) {
        throw ValidationError("per-sample metadata count differs from the sample count");
    }
}

Tensor to_tensor(const Dataset& ds)
{
    const net::Shape3 s = ds.sample_shape;
    const std::size_t n = ds.size();
    std::vector<std::size_t> shape = ds.type == SampleType::Image
                                         ? std::vector<std::size_t>{n, s.height, s.width, s.channels}
                                         : std::vector<std::size_t>{n, s.size()};
    if (ds.type == SampleType::Vector) {
        return Tensor(std::move(shape), ds.features);
    }
    std::vector<float> values(ds.pixels.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = static_cast<float>(ds.pixels[i]) * (1.0f / 255.0f);
    }
    return Tensor(std::move(shape), std::move(values));
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices)
{
    Dataset out;
    out.type = ds.type;
    out.sample_shape = ds.sample_shape;
    out.num_classes = ds.num_classes;
    out.class_names = ds.class_names;
    out.meta = ds.meta;
    const std::size_t per = ds.sample_shape.size();
    out.labels.reserve(indices.size());
    if (ds.meta.contains("samples")) {
        out.meta["samples"] = nlohmann::json::array();
    }
    for (std::size_t idx : indices) {
        if (idx >= ds.size()) {
            throw ValidationError("subset index out of range");
        }
        out.labels.push_back(ds.labels[idx]);
        if (ds.type == SampleType::Image) {
            out.pixels.insert(out.pixels.end(), ds.pixels.begin() + static_cast<std::ptrdiff_t>(idx * per),
                              ds.pixels.begin() + static_cast<std::ptrdiff_t>((idx + 1) * per));
        } else {
            out.features.insert(out.features.end(),
                                ds.features.begin() + static_cast<std::ptrdiff_t>(idx * per),
                                ds.features.begin() + static_cast<std::ptrdiff_t>((idx + 1) * per));
        }
        if (ds.meta.contains("samples")) {
            out.meta["samples"].push_back(ds.meta["samples"][idx]);
        }
    }
    return out;
}

std::vector<std::size_t> class_histogram(const Dataset& ds)
{
    std::vector<std::size_t> counts(ds.num_classes, 0);
    for (std::uint16_t y : ds.labels) {
        counts.at(y) += 1;
    }
    return counts;
}

std::vector<std::string> class_names_or_ids(const Dataset& ds)
{
    if (!ds.class_names.empty()) {
        return ds.class_names;
    }
    std::vector<std::string> names;
    for (std::size_t k = 0; k < ds.num_classes; ++k) {
        names.push_back(std::to_string(k));
    }
    return names;
}

}  // namespace c2f::data

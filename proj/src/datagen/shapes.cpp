#include <array>
#include <cmath>
#include <numbers>

#include "c2f/datagen/generators.hpp"
#include "c2f/error.hpp"
#include "c2f/rng.hpp"

namespace c2f::data {

namespace {

constexpr std::array<const char*, kShapeKinds> kShapeNames = {
    "circle", "ellipse", "triangle", "square", "pentagon",
    "hexagon", "heptagon", "octagon", "nonagon", "decagon"};
constexpr std::array<const char*, kShapeColors> kColorNames = {"magenta", "cyan", "grey"};
constexpr std::array<Rgb, kShapeColors> kColors = {Rgb{255, 0, 255}, Rgb{0, 255, 255},
                                                   Rgb{128, 128, 128}};

struct Placement {
    std::size_t kind;
    std::size_t color;
    double cx;
    double cy;
    double radius;
    double rotation;
    double aspect;
};

bool inside(const Placement& p, double px, double py)
{
    const double dx = px - p.cx;
    const double dy = py - p.cy;
    if (p.kind == 0) {
        return dx * dx + dy * dy <= p.radius * p.radius;
    }
    const double c = std::cos(p.rotation);
    const double s = std::sin(p.rotation);
    if (p.kind == 1) {
        const double u = (dx * c + dy * s) / p.radius;
        const double v = (-dx * s + dy * c) / (p.radius * p.aspect);
        return u * u + v * v <= 1.0;
    }
    // Regular polygon, vertices counter-clockwise on the circumcircle.
    const std::size_t n = p.kind + 1;
    const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a0 = p.rotation + step * static_cast<double>(i);
        const double a1 = a0 + step;
        const double x0 = p.radius * std::cos(a0);
        const double y0 = p.radius * std::sin(a0);
        const double x1 = p.radius * std::cos(a1);
        const double y1 = p.radius * std::sin(a1);
        if ((x1 - x0) * (dy - y0) - (y1 - y0) * (dx - x0) < 0.0) {
            return false;
        }
    }
    return true;
}

void rasterize(const Placement& p, std::size_t size, std::uint8_t* image)
{
    const Rgb rgb = kColors[p.color];
    const auto lo = [&](double v) {
        return static_cast<std::size_t>(std::max(0.0, std::floor(v - p.radius - 1.0)));
    };
    const auto hi = [&](double v) {
        return std::min(size, static_cast<std::size_t>(std::ceil(v + p.radius + 1.0)));
    };
    for (std::size_t y = lo(p.cy); y < hi(p.cy); ++y) {
        for (std::size_t x = lo(p.cx); x < hi(p.cx); ++x) {
            if (inside(p, static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) {
                std::uint8_t* px = image + (y * size + x) * 3;
                px[0] = rgb.r;
                px[1] = rgb.g;
                px[2] = rgb.b;
            }
        }
    }
}

}  // namespace

std::string shape_name(std::size_t kind)
{
    return kShapeNames.at(kind);
}

std::string color_name(std::size_t color)
{
    return kColorNames.at(color);
}

Rgb color_value(std::size_t color)
{
    return kColors.at(color);
}

std::size_t shape_class(std::size_t kind, std::size_t color)
{
    return kind * kShapeColors + color;
}

std::pair<std::size_t, std::size_t> shape_class_parts(std::size_t class_id)
{
    return {class_id / kShapeColors, class_id % kShapeColors};
}

Dataset gen_shapes(const ShapesConfig& cfg, std::uint64_t seed)
{
    if (cfg.image_size < 8) {
        throw ValidationError("shapes: image size must be at least 8");
    }
    if (!(cfg.min_radius > 0.0) || cfg.min_radius > cfg.max_radius) {
        throw ValidationError("shapes: radius range must satisfy 0 < min <= max");
    }
    if (2.0 * cfg.max_radius > 1.0) {
        throw ValidationError("shapes: shape too large for placement band");
    }
    if (!(cfg.min_aspect > 0.0) || cfg.min_aspect > cfg.max_aspect || cfg.max_aspect > 1.0) {
        throw ValidationError("shapes: aspect range must satisfy 0 < min <= max <= 1");
    }

    const std::size_t size = cfg.image_size;
    const double side = static_cast<double>(size);
    const std::size_t classes = kShapeKinds * kShapeColors;
    Dataset ds;
    ds.type = SampleType::Image;
    ds.sample_shape = net::Shape3{size, size, 3};
    ds.num_classes = classes;
    for (std::size_t k = 0; k < classes; ++k) {
        const auto [kind, color] = shape_class_parts(k);
        ds.class_names.push_back(color_name(color) + "_" + shape_name(kind));
    }
    ds.meta["generator"] = {{"kind", "shapes"},
                            {"imageSize", size},
                            {"samplesPerClass", cfg.samples_per_class},
                            {"perShape", cfg.per_shape},
                            {"seed", seed}};
    ds.meta["samples"] = nlohmann::json::array();

    const std::size_t per_image = size * size * 3;
    const std::size_t total = cfg.samples_per_class * (cfg.per_shape ? kShapeKinds : classes);
    ds.pixels.assign(total * per_image, 0);
    ds.labels.reserve(total);

    Rng rng(seed);
    std::size_t index = 0;
    auto emit = [&](std::size_t kind, std::size_t color) {
        Placement p{kind, color, 0.0, 0.0, 0.0, 0.0, 1.0};
        p.radius = rng.uniform(cfg.min_radius, cfg.max_radius) * side;
        p.cx = rng.uniform(p.radius, side - p.radius);
        p.cy = rng.uniform(p.radius, side - p.radius);
        p.rotation = rng.uniform(0.0, 2.0 * std::numbers::pi);
        if (kind == 1) {
            p.aspect = rng.uniform(cfg.min_aspect, cfg.max_aspect);
        }
        rasterize(p, size, ds.pixels.data() + index * per_image);
        ds.labels.push_back(static_cast<std::uint16_t>(shape_class(kind, color)));
        ds.meta["samples"].push_back({{"shape", kind},
                                      {"color", color},
                                      {"cx", p.cx},
                                      {"cy", p.cy},
                                      {"radius", p.radius},
                                      {"rotation", p.rotation},
                                      {"aspect", p.aspect}});
        ++index;
    };

    if (cfg.per_shape) {
        for (std::size_t kind = 0; kind < kShapeKinds; ++kind) {
            for (std::size_t i = 0; i < cfg.samples_per_class; ++i) {
                emit(kind, rng.below(kShapeColors));
            }
        }
    } else {
        for (std::size_t k = 0; k < classes; ++k) {
            const auto [kind, color] = shape_class_parts(k);
            for (std::size_t i = 0; i < cfg.samples_per_class; ++i) {
                emit(kind, color);
            }
        }
    }
    return ds;
}

}  // namespace c2f::data

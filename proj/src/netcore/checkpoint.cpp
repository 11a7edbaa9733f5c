#include "c2f/netcore/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "c2f/error.hpp"

namespace c2f::net {

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor& t)
{
    return json{{"shape", t.shape()},
                {"data", std::vector<float>(t.values().begin(), t.values().end())}};
}

Tensor tensor_from_json(const json& j)
{
    if (j.at("shape").empty()) {
        return Tensor{};
    }
    return Tensor(j.at("shape").get<std::vector<std::size_t>>(),
                  j.at("data").get<std::vector<float>>());
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path)
{
    json layers = json::array();
    for (const LayerSpec& l : ckpt.spec.encoder) {
        layers.push_back({{"type", to_string(l.kind)}, {"units", l.units}});
    }
    json params = json::array();
    for (const LayerParams& p : ckpt.params.encoder) {
        params.push_back({{"weight", tensor_to_json(p.weight)}, {"bias", tensor_to_json(p.bias)}});
    }
    const json doc{
        {"format", "c2f-checkpoint"},
        {"version", 1},
        {"input", {ckpt.spec.input.height, ckpt.spec.input.width, ckpt.spec.input.channels}},
        {"numClasses", ckpt.spec.num_classes},
        {"layers", layers},
        {"encoder", params},
        {"predictor",
         {{"weight", tensor_to_json(ckpt.params.predictor.weight)},
          {"bias", tensor_to_json(ckpt.params.predictor.bias)}}},
        {"classNames", ckpt.class_names},
    };
    std::ofstream out(path);
    if (!out) {
        throw RuntimeFailure("cannot write checkpoint " + path.string());
    }
    out << doc.dump();
    if (!out) {
        throw RuntimeFailure("failed writing checkpoint " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open checkpoint " + path.string());
    }
    Checkpoint ckpt;
    try {
        const json doc = json::parse(in);
        if (doc.at("format") != "c2f-checkpoint" || doc.at("version") != 1) {
            throw ValidationError("not a version-1 checkpoint: " + path.string());
        }
        const auto input = doc.at("input").get<std::vector<std::size_t>>();
        if (input.size() != 3) {
            throw ValidationError("checkpoint input shape must have three extents");
        }
        ckpt.spec.input = Shape3{input[0], input[1], input[2]};
        ckpt.spec.num_classes = doc.at("numClasses").get<std::size_t>();
        for (const json& l : doc.at("layers")) {
            ckpt.spec.encoder.push_back(
                {layer_kind_from_string(l.at("type").get<std::string>()), l.at("units").get<std::size_t>()});
        }
        for (const json& p : doc.at("encoder")) {
            ckpt.params.encoder.push_back({tensor_from_json(p.at("weight")), tensor_from_json(p.at("bias"))});
        }
        ckpt.params.predictor = {tensor_from_json(doc.at("predictor").at("weight")),
                                 tensor_from_json(doc.at("predictor").at("bias"))};
        ckpt.class_names = doc.at("classNames").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed checkpoint " + path.string() + ": " + e.what());
    }
    validate(ckpt.spec);
    check_params(ckpt.spec, ckpt.params);
    return ckpt;
}

}  // namespace c2f::net

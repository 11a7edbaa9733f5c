#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "c2f/netcore/model.hpp"

namespace c2f::net {

struct Checkpoint {
    ModelSpec spec;
    ModelParams params;
    std::vector<std::string> class_names;
};

// JSON checkpoints; float values round-trip exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace c2f::net

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "c2f/similarity.hpp"

namespace c2f::hier {

using Cluster = std::vector<std::size_t>;
using Partition = std::vector<Cluster>;

/// Nested partitions of {0..K-1}, coarsest first; the last level holds the K
/// singletons. Clusters are sorted and ordered by their smallest member, and a
/// cluster's index is its position in the level.
struct LabelHierarchy {
    std::size_t num_classes = 0;
    std::vector<Partition> levels;

    std::size_t depth() const noexcept { return levels.size(); }
    friend bool operator==(const LabelHierarchy&, const LabelHierarchy&) = default;
};

LabelHierarchy singleton_hierarchy(std::size_t num_classes);

// Sorts members and clusters, then checks the structural invariants.
// Throws ValidationError listing the violations.
LabelHierarchy make_hierarchy(std::vector<Partition> levels, std::size_t num_classes);

// Single-linkage Boruvka rounds: every cluster joins its nearest neighbour
// (ties toward the lowest smallest member); the all-class root is dropped.
LabelHierarchy affinity_cluster(const sim::ClassDistanceMatrix& d);

// Structural invariants (partition, refinement, singleton bottom, strict
// coarsening, no root level); with check_bounds also the depth bound and the
// smallest-cluster doubling that affinity clustering guarantees.
std::vector<std::string> validate_hierarchy(const LabelHierarchy& h, std::size_t num_classes,
                                            bool check_bounds = true);

std::vector<std::size_t> class_to_cluster(const LabelHierarchy& h, std::size_t level);

// Same hierarchy with class c renamed to perm[c].
LabelHierarchy relabel(const LabelHierarchy& h, const std::vector<std::size_t>& perm);

// {"classNames": [...], "levels": [[["a","b"],["c"]], ...]}
nlohmann::json to_json(const LabelHierarchy& h, const std::vector<std::string>& class_names);
LabelHierarchy from_json(const nlohmann::json& doc, const std::vector<std::string>& class_names);
void save_hierarchy(const LabelHierarchy& h, const std::vector<std::string>& class_names,
                    const std::filesystem::path& path);
LabelHierarchy load_hierarchy(const std::filesystem::path& path,
                              const std::vector<std::string>& class_names);

}  // namespace c2f::hier

#include "c2f/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "c2f/error.hpp"

namespace c2f::hier {

namespace {

void normalize(Partition& p)
{
    for (Cluster& c : p) {
        std::sort(c.begin(), c.end());
    }
    std::sort(p.begin(), p.end(), [](const Cluster& a, const Cluster& b) {
        if (a.empty() || b.empty()) {
            return a.size() < b.size();
        }
        return a.front() < b.front();
    });
}

std::size_t ceil_log2(std::size_t k)
{
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < k) {
        ++bits;
    }
    return bits;
}

std::size_t min_cluster_size(const Partition& p)
{
    std::size_t m = std::numeric_limits<std::size_t>::max();
    for (const Cluster& c : p) {
        m = std::min(m, c.size());
    }
    return m;
}

struct DisjointSets {
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }

    std::size_t find(std::size_t x)
    {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent[std::max(a, b)] = std::min(a, b);
        }
    }

    std::vector<std::size_t> parent;
};

}  // namespace

LabelHierarchy singleton_hierarchy(std::size_t num_classes)
{
    Partition bottom;
    for (std::size_t c = 0; c < num_classes; ++c) {
        bottom.push_back({c});
    }
    return LabelHierarchy{num_classes, {bottom}};
}

LabelHierarchy make_hierarchy(std::vector<Partition> levels, std::size_t num_classes)
{
    for (Partition& p : levels) {
        normalize(p);
    }
    LabelHierarchy h{num_classes, std::move(levels)};
    const auto problems = validate_hierarchy(h, num_classes, false);
    if (!problems.empty()) {
        std::string msg = "invalid hierarchy:";
        for (const auto& p : problems) {
            msg += " " + p + ";";
        }
        throw ValidationError(msg);
    }
    return h;
}

LabelHierarchy affinity_cluster(const sim::ClassDistanceMatrix& d)
{
    const std::size_t k = d.size();
    if (k < 2 || d.entries.cols() != k) {
        throw ValidationError("affinity clustering needs a square matrix with K >= 2");
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (d(i, i) < 0.0) {
            throw ValidationError("distance matrix has a negative diagonal entry");
        }
        for (std::size_t j = i + 1; j < k; ++j) {
            if (!std::isfinite(d(i, j)) || std::abs(d(i, j) - d(j, i)) > 1e-6) {
                throw ValidationError("distance matrix is not symmetric and finite");
            }
        }
    }

    Partition clusters;
    for (std::size_t c = 0; c < k; ++c) {
        clusters.push_back({c});
    }
    // Single-linkage distances between current clusters.
    std::vector<double> link(k * k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            link[i * k + j] = d(i, j);
        }
    }

    std::vector<Partition> bottom_up{clusters};
    while (clusters.size() > 1) {
        const std::size_t m = clusters.size();
        DisjointSets sets(m);
        for (std::size_t a = 0; a < m; ++a) {
            std::size_t best = m;
            double best_d = 0.0;
            for (std::size_t b = 0; b < m; ++b) {
                if (b == a) {
                    continue;
                }
                // Clusters are ordered by smallest member, so strict < keeps the lowest on ties.
                if (best == m || link[a * m + b] < best_d) {
                    best = b;
                    best_d = link[a * m + b];
                }
            }
            sets.unite(a, best);
        }

        std::map<std::size_t, std::vector<std::size_t>> groups;
        for (std::size_t a = 0; a < m; ++a) {
            groups[sets.find(a)].push_back(a);
        }
        // Roots are the smallest member index within each group, so map order
        // equals smallest-class-id order.
        Partition merged;
        std::vector<std::vector<std::size_t>> members;
        for (auto& [root, idx] : groups) {
            Cluster c;
            for (std::size_t a : idx) {
                c.insert(c.end(), clusters[a].begin(), clusters[a].end());
            }
            std::sort(c.begin(), c.end());
            merged.push_back(std::move(c));
            members.push_back(idx);
        }
        const std::size_t n = merged.size();
        std::vector<double> next(n * n, 0.0);
        for (std::size_t x = 0; x < n; ++x) {
            for (std::size_t y = x + 1; y < n; ++y) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t a : members[x]) {
                    for (std::size_t b : members[y]) {
                        best = std::min(best, link[a * m + b]);
                    }
                }
                next[x * n + y] = best;
                next[y * n + x] = best;
            }
        }
        clusters = std::move(merged);
        link = std::move(next);
        if (clusters.size() > 1) {
            bottom_up.push_back(clusters);
        }
    }

    std::reverse(bottom_up.begin(), bottom_up.end());
    return LabelHierarchy{k, std::move(bottom_up)};
}

std::vector<std::string> validate_hierarchy(const LabelHierarchy& h, std::size_t num_classes,
                                            bool check_bounds)
{
    std::vector<std::string> out;
    if (h.num_classes != num_classes) {
        out.push_back("hierarchy has " + std::to_string(h.num_classes) + " classes, expected " +
                      std::to_string(num_classes));
    }
    if (h.levels.empty()) {
        out.push_back("hierarchy has no levels");
        return out;
    }
    bool partitions_ok = true;
    for (std::size_t l = 0; l < h.levels.size(); ++l) {
        std::vector<int> seen(num_classes, 0);
        bool bad = false;
        for (const Cluster& c : h.levels[l]) {
            if (c.empty()) {
                bad = true;
            }
            for (std::size_t x : c) {
                if (x >= num_classes || seen[x]++ > 0) {
                    bad = true;
                }
            }
        }
        if (std::count(seen.begin(), seen.end(), 0) > 0) {
            bad = true;
        }
        if (bad) {
            out.push_back("level " + std::to_string(l) + " is not a partition");
            partitions_ok = false;
        }
    }
    const Partition& bottom = h.levels.back();
    if (bottom.size() != num_classes ||
        std::any_of(bottom.begin(), bottom.end(), [](const Cluster& c) { return c.size() != 1; })) {
        out.push_back("bottom level not singletons");
    }
    for (std::size_t l = 0; l < h.levels.size(); ++l) {
        if (num_classes > 1 && h.levels[l].size() == 1) {
            out.push_back("level " + std::to_string(l) + " is the single all-class cluster");
        }
    }
    if (!partitions_ok) {
        return out;
    }
    for (std::size_t l = 0; l + 1 < h.levels.size(); ++l) {
        const auto coarse = class_to_cluster(h, l);
        const auto fine = class_to_cluster(h, l + 1);
        // Refinement: classes sharing a fine cluster share a coarse cluster.
        std::vector<std::size_t> owner(h.levels[l + 1].size(), num_classes);
        bool refines = true;
        for (std::size_t c = 0; c < num_classes; ++c) {
            std::size_t& o = owner[fine[c]];
            if (o == num_classes) {
                o = coarse[c];
            } else if (o != coarse[c]) {
                refines = false;
            }
        }
        if (!refines) {
            out.push_back("level " + std::to_string(l + 1) + " does not refine level " + std::to_string(l));
        }
        if (h.levels[l].size() >= h.levels[l + 1].size()) {
            out.push_back("level " + std::to_string(l) + " is not strictly coarser than level " +
                          std::to_string(l + 1));
        }
        if (check_bounds &&
            min_cluster_size(h.levels[l]) < 2 * min_cluster_size(h.levels[l + 1])) {
            out.push_back("smallest cluster does not double from level " + std::to_string(l + 1) +
                          " to level " + std::to_string(l));
        }
    }
    if (check_bounds && num_classes > 0 && h.levels.size() > ceil_log2(num_classes) + 1) {
        out.push_back("depth " + std::to_string(h.levels.size()) + " exceeds ceil(log2 K) + 1");
    }
    return out;
}

std::vector<std::size_t> class_to_cluster(const LabelHierarchy& h, std::size_t level)
{
    if (level >= h.levels.size()) {
        throw ValidationError("hierarchy level " + std::to_string(level) + " out of range");
    }
    std::vector<std::size_t> map(h.num_classes, h.levels[level].size());
    for (std::size_t idx = 0; idx < h.levels[level].size(); ++idx) {
        for (std::size_t c : h.levels[level][idx]) {
            if (c >= h.num_classes) {
                throw ValidationError("hierarchy class id out of range");
            }
            map[c] = idx;
        }
    }
    if (std::find(map.begin(), map.end(), h.levels[level].size()) != map.end()) {
        throw ValidationError("hierarchy level " + std::to_string(level) + " does not cover every class");
    }
    return map;
}

LabelHierarchy relabel(const LabelHierarchy& h, const std::vector<std::size_t>& perm)
{
    if (perm.size() != h.num_classes) {
        throw ValidationError("permutation size does not match the class count");
    }
    LabelHierarchy out{h.num_classes, h.levels};
    for (Partition& p : out.levels) {
        for (Cluster& c : p) {
            for (std::size_t& x : c) {
                x = perm.at(x);
            }
        }
        normalize(p);
    }
    return out;
}

nlohmann::json to_json(const LabelHierarchy& h, const std::vector<std::string>& class_names)
{
    std::vector<std::string> names = class_names;
    if (names.empty()) {
        for (std::size_t c = 0; c < h.num_classes; ++c) {
            names.push_back(std::to_string(c));
        }
    }
    if (names.size() != h.num_classes) {
        throw ValidationError("class name count does not match the hierarchy");
    }
    nlohmann::json levels = nlohmann::json::array();
    for (const Partition& p : h.levels) {
        nlohmann::json level = nlohmann::json::array();
        for (const Cluster& c : p) {
            nlohmann::json cluster = nlohmann::json::array();
            for (std::size_t x : c) {
                cluster.push_back(names.at(x));
            }
            level.push_back(std::move(cluster));
        }
        levels.push_back(std::move(level));
    }
    return {{"classNames", names}, {"levels", levels}};
}

LabelHierarchy from_json(const nlohmann::json& doc, const std::vector<std::string>& class_names)
{
    if (!doc.is_object() || !doc.contains("levels") || !doc["levels"].is_array()) {
        throw ValidationError("hierarchy JSON needs a 'levels' array");
    }
    std::vector<std::string> names = class_names;
    if (names.empty() && doc.contains("classNames")) {
        names = doc["classNames"].get<std::vector<std::string>>();
    }
    if (names.empty()) {
        throw ValidationError("hierarchy JSON: class names are unknown");
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < names.size(); ++c) {
        index.emplace(names[c], c);
    }
    std::vector<Partition> levels;
    for (const auto& level : doc["levels"]) {
        Partition p;
        for (const auto& cluster : level) {
            Cluster c;
            for (const auto& name : cluster) {
                const auto it = index.find(name.get<std::string>());
                if (it == index.end()) {
                    throw ValidationError("hierarchy JSON names unknown class '" + name.get<std::string>() + "'");
                }
                c.push_back(it->second);
            }
            p.push_back(std::move(c));
        }
        levels.push_back(std::move(p));
    }
    return make_hierarchy(std::move(levels), names.size());
}

void save_hierarchy(const LabelHierarchy& h, const std::vector<std::string>& class_names,
                    const std::filesystem::path& path)
{
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp);
        if (!out) {
            throw RuntimeFailure("cannot write " + path.string());
        }
        out << to_json(h, class_names).dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

LabelHierarchy load_hierarchy(const std::filesystem::path& path,
                              const std::vector<std::string>& class_names)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed hierarchy JSON " + path.string() + ": " + e.what());
    }
    return from_json(doc, class_names);
}

}  // namespace c2f::hier

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "c2f/error.hpp"
#include "c2f/hierarchy.hpp"
#include "support/oracles.hpp"

using namespace c2f;
using namespace c2f::hier;

namespace {

const std::vector<std::string> kCifar10{"airplane", "car", "bird", "cat", "deer",
                                        "dog", "frog", "horse", "ship", "truck"};

sim::ClassDistanceMatrix matrix(std::size_t k, std::initializer_list<std::tuple<int, int, double>> entries,
                                double fill)
{
    sim::ClassDistanceMatrix d{sim::Matrix(k, k, fill)};
    for (std::size_t i = 0; i < k; ++i) {
        d.entries(i, i) = 0.0;
    }
    for (auto [i, j, v] : entries) {
        d.entries(i, j) = v;
        d.entries(j, i) = v;
    }
    return d;
}

bool has_violation(const std::vector<std::string>& v, const std::string& needle)
{
    return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

std::size_t ceil_log2(std::size_t k)
{
    return static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(k))));
}

}  // namespace

TEST_CASE("two classes give only the singleton level")
{
    const auto h = affinity_cluster(matrix(2, {{0, 1, 0.5}}, 0.5));
    REQUIRE(h.depth() == 1);
    CHECK(h.levels[0] == Partition{{0}, {1}});
}

TEST_CASE("two tight pairs form one coarse level")
{
    const auto h = affinity_cluster(matrix(4, {{0, 1, 0.1}, {2, 3, 0.1}}, 0.9));
    REQUIRE(h.depth() == 2);
    CHECK(h.levels[0] == Partition{{0, 1}, {2, 3}});
    CHECK(h.levels[1] == Partition{{0}, {1}, {2}, {3}});
    CHECK(oracle::boruvka_levels(matrix(4, {{0, 1, 0.1}, {2, 3, 0.1}}, 0.9)) == h.levels);
}

TEST_CASE("ties go to the candidate with the lowest smallest member")
{
    // Every pair at the same distance: each class picks class 0 (class 0 picks 1).
    const auto h = affinity_cluster(matrix(5, {}, 0.5));
    REQUIRE(h.depth() == 1);
    const auto g = affinity_cluster(matrix(4, {{2, 3, 0.2}}, 0.5));
    CHECK(g.levels[0] == Partition{{0, 1}, {2, 3}});
}

TEST_CASE("affinity clustering equals exhaustive Boruvka rounds")
{
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + rng.below(7);
        const auto d = oracle::random_distance(k, rng);
        CHECK(affinity_cluster(d).levels == oracle::boruvka_levels(d));
    }
}

TEST_CASE("affinity hierarchies satisfy every invariant")
{
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 5 + rng.below(60);
        const auto h = affinity_cluster(oracle::random_distance(k, rng));
        const auto problems = validate_hierarchy(h, k);
        CHECK(problems.empty());
        CHECK(h.depth() <= ceil_log2(k) + 1);
    }
}

TEST_CASE("relabelling classes relabels the hierarchy")
{
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t k = 3 + rng.below(20);
        const auto d = oracle::random_distance(k, rng);
        std::vector<std::size_t> perm(k);
        for (std::size_t i = 0; i < k; ++i) {
            perm[i] = i;
        }
        rng.shuffle(std::span<std::size_t>(perm));
        sim::ClassDistanceMatrix dp{sim::Matrix(k, k)};
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                dp.entries(perm[i], perm[j]) = d(i, j);
            }
        }
        CHECK(affinity_cluster(dp) == relabel(affinity_cluster(d), perm));
    }
}

TEST_CASE("invalid distance matrices are rejected")
{
    CHECK_THROWS_AS(affinity_cluster(matrix(1, {}, 0.0)), ValidationError);
    auto d = matrix(3, {{0, 1, 0.2}}, 0.5);
    d.entries(1, 0) = 0.9;
    CHECK_THROWS_AS(affinity_cluster(d), ValidationError);
    auto neg = matrix(3, {}, 0.5);
    neg.entries(2, 2) = -1.0;
    CHECK_THROWS_AS(affinity_cluster(neg), ValidationError);
}

TEST_CASE("validation reports broken hierarchies")
{
    const LabelHierarchy overlapping{4, {{{0, 1}, {1, 2, 3}}, {{0}, {1}, {2}, {3}}}};
    CHECK(has_violation(validate_hierarchy(overlapping, 4), "not a partition"));
    const LabelHierarchy no_bottom{4, {{{0, 1}, {2, 3}}}};
    CHECK(has_violation(validate_hierarchy(no_bottom, 4), "bottom level not singletons"));
    const LabelHierarchy not_nested{4, {{{0, 2}, {1, 3}}, {{0, 1}, {2}, {3}}, {{0}, {1}, {2}, {3}}}};
    CHECK(has_violation(validate_hierarchy(not_nested, 4), "does not refine"));
    const LabelHierarchy root{4, {{{0, 1, 2, 3}}, {{0}, {1}, {2}, {3}}}};
    CHECK(has_violation(validate_hierarchy(root, 4), "all-class cluster"));
    const LabelHierarchy repeated{4, {{{0, 1}, {2, 3}}, {{0, 1}, {2, 3}}, {{0}, {1}, {2}, {3}}}};
    CHECK(has_violation(validate_hierarchy(repeated, 4), "not strictly coarser"));
    const LabelHierarchy lopsided{5, {{{0, 1, 2, 3}, {4}}, {{0}, {1}, {2}, {3}, {4}}}};
    CHECK(has_violation(validate_hierarchy(lopsided, 5), "does not double"));
    CHECK(validate_hierarchy(lopsided, 5, false).empty());
    CHECK_THROWS_AS(make_hierarchy({{{0, 1}, {1, 2, 3}}, {{0}, {1}, {2}, {3}}}, 4), ValidationError);
}

TEST_CASE("class to cluster maps")
{
    SUBCASE("bottom level is the identity")
    {
        const auto h = singleton_hierarchy(6);
        const auto m = class_to_cluster(h, 0);
        for (std::size_t c = 0; c < 6; ++c) {
            CHECK(m[c] == c);
        }
        CHECK_THROWS_AS(class_to_cluster(h, 1), ValidationError);
    }
    SUBCASE("vehicles versus animals")
    {
        nlohmann::json doc = {{"levels",
                               {{{"airplane", "ship", "car", "truck"}, {"bird", "deer", "horse", "cat", "frog", "dog"}},
                                {{"airplane"}, {"car"}, {"bird"}, {"cat"}, {"deer"}, {"dog"}, {"frog"}, {"horse"},
                                 {"ship"}, {"truck"}}}}};
        const auto h = from_json(doc, kCifar10);
        const auto m = class_to_cluster(h, 0);
        CHECK(m[1] == m[9]);
        CHECK(m[1] != m[5]);
    }
    SUBCASE("random hierarchies agree with a membership scan")
    {
        Rng rng(4);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t k = 4 + rng.below(30);
            const auto h = affinity_cluster(oracle::random_distance(k, rng));
            for (std::size_t l = 0; l < h.depth(); ++l) {
                const auto m = class_to_cluster(h, l);
                for (std::size_t c = 0; c < k; ++c) {
                    std::size_t found = h.levels[l].size();
                    for (std::size_t idx = 0; idx < h.levels[l].size(); ++idx) {
                        for (std::size_t x : h.levels[l][idx]) {
                            if (x == c) {
                                found = idx;
                            }
                        }
                    }
                    CHECK(m[c] == found);
                }
            }
        }
    }
}

TEST_CASE("hierarchy JSON round-trip and import errors")
{
    Rng rng(5);
    const auto h = affinity_cluster(oracle::random_distance(10, rng));
    const auto path = std::filesystem::temp_directory_path() / "c2f_test_hierarchy.json";
    save_hierarchy(h, kCifar10, path);
    CHECK(load_hierarchy(path, kCifar10) == h);
    CHECK(load_hierarchy(path, {}) == h);
    std::filesystem::remove(path);

    const nlohmann::json unknown = {{"levels", {{{"airplane", "spaceship"}}}}};
    CHECK_THROWS_AS(from_json(unknown, kCifar10), ValidationError);
    const nlohmann::json missing = {{"levels", {{{"airplane"}, {"car"}}}}};
    CHECK_THROWS_AS(from_json(missing, kCifar10), ValidationError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "c2f/error.hpp"
#include "c2f/similarity.hpp"
#include "support/oracles.hpp"

using namespace c2f;
using namespace c2f::sim;

namespace {

ClassEmbeddingMatrix embeddings(std::size_t e, std::size_t k, std::vector<double> values)
{
    Matrix m(e, k);
    for (std::size_t r = 0; r < e; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            m(r, c) = values[r * k + c];
        }
    }
    return {m};
}

ClassEmbeddingMatrix random_embeddings(std::size_t e, std::size_t k, Rng& rng)
{
    std::vector<double> v(e * k);
    for (double& x : v) {
        x = rng.normal();
    }
    return embeddings(e, k, v);
}

ConfusionMatrix random_confusion(std::size_t k, Rng& rng)
{
    std::vector<std::size_t> pred;
    std::vector<std::uint16_t> labels;
    for (std::size_t i = 0; i < 20 * k; ++i) {
        labels.push_back(static_cast<std::uint16_t>(rng.below(k)));
        pred.push_back(rng.uniform() < 0.6 ? labels.back() : rng.below(k));
    }
    return confusion_from_predictions(pred, labels, k);
}

void check_invariants(const ClassDistanceMatrix& d)
{
    CHECK(distance_violations(d).empty());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(d(i, i) == 0.0);
        for (std::size_t j = 0; j < d.size(); ++j) {
            CHECK(std::abs(d(i, j) - d(j, i)) <= 1e-6);
        }
    }
}

}  // namespace

TEST_CASE("confusion estimates")
{
    const std::vector<std::uint16_t> labels{0, 1, 2, 0, 1, 2};
    SUBCASE("perfect classifier gives the identity")
    {
        const std::vector<std::size_t> pred{0, 1, 2, 0, 1, 2};
        const auto c = confusion_from_predictions(pred, labels, 3);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                CHECK(c.entries(i, j) == (i == j ? 1.0 : 0.0));
            }
        }
    }
    SUBCASE("constant predictor fills column 0")
    {
        const std::vector<std::size_t> pred(6, 0);
        const auto c = confusion_from_predictions(pred, labels, 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(c.entries(i, 0) == 1.0);
        }
    }
    SUBCASE("hand-tallied 10-sample toy set")
    {
        const std::vector<std::uint16_t> y{0, 0, 0, 0, 1, 1, 1, 2, 2, 2};
        const std::vector<std::size_t> p{0, 0, 1, 2, 1, 1, 0, 2, 1, 2};
        const auto c = confusion_from_predictions(p, y, 3);
        CHECK(c.entries(0, 0) == doctest::Approx(0.5));
        CHECK(c.entries(0, 1) == doctest::Approx(0.25));
        CHECK(c.entries(0, 2) == doctest::Approx(0.25));
        CHECK(c.entries(1, 0) == doctest::Approx(1.0 / 3.0));
        CHECK(c.entries(1, 1) == doctest::Approx(2.0 / 3.0));
        CHECK(c.entries(2, 1) == doctest::Approx(1.0 / 3.0));
        CHECK(c.entries(2, 2) == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("classes without samples get uniform rows")
    {
        const std::vector<std::uint16_t> y{0, 0};
        const std::vector<std::size_t> p{0, 1};
        const auto c = confusion_from_predictions(p, y, 4);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(c.entries(3, j) == 0.25);
        }
    }
    SUBCASE("rows sum to one")
    {
        Rng rng(3);
        const auto c = random_confusion(7, rng);
        for (std::size_t i = 0; i < 7; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < 7; ++j) {
                CHECK(c.entries(i, j) >= 0.0);
                CHECK(c.entries(i, j) <= 1.0);
                s += c.entries(i, j);
            }
            CHECK(std::abs(s - 1.0) <= 1e-6);
        }
    }
    SUBCASE("class count mismatch")
    {
        const std::vector<std::size_t> pred{0, 5};
        const std::vector<std::uint16_t> y{0, 1};
        CHECK_THROWS_AS(confusion_from_predictions(pred, y, 3), ValidationError);
        const auto spec = oracle::small_mlp(2, 3, 3);
        const auto params = net::init_params(spec, 1);
        CHECK_THROWS_AS(estimate_confusion(spec, params, Tensor({2, 2}), std::vector<std::uint16_t>{0, 4}),
                        ValidationError);
    }
}

TEST_CASE("embedding distance")
{
    const auto same = embedding_distance(embeddings(2, 2, {1, 1, 2, 2}));
    CHECK(same(0, 1) == doctest::Approx(0.0));
    const auto ortho = embedding_distance(embeddings(2, 2, {1, 0, 0, 1}));
    CHECK(ortho(0, 1) == doctest::Approx(1.0));
    // W_1 = (1, 0), W_2 = (1, 1) as columns.
    const auto d = embedding_distance(embeddings(2, 2, {1, 1, 0, 1}));
    CHECK(d(0, 1) == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)));
    CHECK(d(0, 1) == doctest::Approx(0.29289).epsilon(1e-5));
    CHECK(d(0, 0) == 0.0);
    CHECK_THROWS_AS(embedding_distance(embeddings(2, 2, {1, 0, 1, 0})), ValidationError);
}

TEST_CASE("embedding columns come from the predictor")
{
    const auto spec = oracle::small_mlp(2, 3, 4);
    const auto p = net::init_params(spec, 1);
    const auto e = class_embeddings(p);
    CHECK(e.weight.rows() == 3);
    CHECK(e.weight.cols() == 4);
    CHECK(e.weight(2, 1) == p.predictor.weight.at(2, 1));
}

TEST_CASE("metric kinds")
{
    Rng rng(5);
    SUBCASE("EmbeddingDist on identity W")
    {
        std::vector<double> eye(16, 0.0);
        for (int i = 0; i < 4; ++i) {
            eye[i * 4 + i] = 1.0;
        }
        const auto w = embeddings(4, 4, eye);
        const auto d = build_metric(MetricKind::EmbeddingDist, {nullptr, &w, std::nullopt});
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(d(i, j) == doctest::Approx(i == j ? 0.0 : 1.0));
            }
        }
    }
    SUBCASE("ConfusionDist on identity confusion")
    {
        const std::vector<std::uint16_t> y{0, 1, 2};
        const std::vector<std::size_t> p{0, 1, 2};
        const auto c = confusion_from_predictions(p, y, 3);
        const auto d = build_metric(MetricKind::ConfusionDist, {&c, nullptr, std::nullopt});
        const auto s = build_metric(MetricKind::Confusion, {&c, nullptr, std::nullopt});
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                CHECK(d(i, j) == (i == j ? 0.0 : 1.0));
                CHECK(s(i, j) == 0.0);
            }
        }
    }
    SUBCASE("Random is seeded")
    {
        const auto w = random_embeddings(3, 6, rng);
        const auto a = build_metric(MetricKind::Random, {nullptr, &w, 1});
        const auto b = build_metric(MetricKind::Random, {nullptr, &w, 1});
        const auto c = build_metric(MetricKind::Random, {nullptr, &w, 2});
        CHECK(a == b);
        CHECK_FALSE(a == c);
        // Ranks of the 15 pairs are spread over (0, 1).
        std::vector<double> v;
        for (std::size_t i = 0; i < 6; ++i) {
            for (std::size_t j = i + 1; j < 6; ++j) {
                v.push_back(a(i, j));
            }
        }
        std::sort(v.begin(), v.end());
        for (std::size_t r = 0; r < v.size(); ++r) {
            CHECK(v[r] == doctest::Approx((r + 1) / 16.0));
        }
    }
    SUBCASE("missing inputs")
    {
        CHECK_THROWS_AS(build_metric(MetricKind::EmbeddingDist, {}), ValidationError);
        CHECK_THROWS_AS(build_metric(MetricKind::Confusion, {}), ValidationError);
        const auto w = random_embeddings(3, 4, rng);
        CHECK_THROWS_AS(build_metric(MetricKind::Random, {nullptr, &w, std::nullopt}), ValidationError);
    }
    SUBCASE("names round-trip")
    {
        for (auto k : {MetricKind::EmbeddingDist, MetricKind::EmbeddingSim, MetricKind::Confusion,
                       MetricKind::ConfusionDist, MetricKind::Random}) {
            CHECK(metric_from_string(to_string(k)) == k);
        }
        CHECK_THROWS_AS(metric_from_string("Cosine"), ValidationError);
    }
}

TEST_CASE("every metric is a valid distance matrix; embedding kinds are complementary")
{
    Rng rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t k = 2 + rng.below(12);
        const auto w = random_embeddings(1 + rng.below(6), k, rng);
        const auto c = random_confusion(k, rng);
        const MetricInputs in{&c, &w, static_cast<std::uint64_t>(trial)};
        for (auto kind : {MetricKind::EmbeddingDist, MetricKind::EmbeddingSim, MetricKind::Confusion,
                          MetricKind::ConfusionDist, MetricKind::Random}) {
            check_invariants(build_metric(kind, in));
        }
        const auto dist = build_metric(MetricKind::EmbeddingDist, in);
        const auto simm = build_metric(MetricKind::EmbeddingSim, in);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                if (i != j) {
                    CHECK(std::abs(dist(i, j) + simm(i, j) - 1.0) <= 1e-6);
                }
            }
        }
    }
}

TEST_CASE("relabelling classes permutes every metric")
{
    Rng rng(13);
    const std::size_t k = 7;
    const auto w = random_embeddings(4, k, rng);
    const auto c = random_confusion(k, rng);
    std::vector<std::size_t> perm(k);
    for (std::size_t i = 0; i < k; ++i) {
        perm[i] = i;
    }
    rng.shuffle(std::span<std::size_t>(perm));
    ClassEmbeddingMatrix wp{Matrix(4, k)};
    ConfusionMatrix cp{Matrix(k, k)};
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t e = 0; e < 4; ++e) {
            wp.weight(e, perm[i]) = w.weight(e, i);
        }
        for (std::size_t j = 0; j < k; ++j) {
            cp.entries(perm[i], perm[j]) = c.entries(i, j);
        }
    }
    for (auto kind : {MetricKind::EmbeddingDist, MetricKind::EmbeddingSim, MetricKind::Confusion,
                      MetricKind::ConfusionDist}) {
        const auto d = build_metric(kind, {&c, &w, std::nullopt});
        const auto dp = build_metric(kind, {&cp, &wp, std::nullopt});
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                CHECK(dp(perm[i], perm[j]) == doctest::Approx(d(i, j)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("matrix CSV keeps 9 significant digits")
{
    Rng rng(17);
    Matrix m(3, 4);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            m(i, j) = rng.normal();
        }
    }
    const auto path = std::filesystem::temp_directory_path() / "c2f_test_matrix.csv";
    write_matrix_csv(m, path);
    const Matrix back = read_matrix_csv(path);
    REQUIRE(back.rows() == 3);
    REQUIRE(back.cols() == 4);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(back(i, j) == std::stod(format_number(m(i, j))));
            CHECK(std::abs(back(i, j) - m(i, j)) <= 1e-8 * std::abs(m(i, j)));
        }
    }
    std::filesystem::remove(path);
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "c2f/netcore/model.hpp"

namespace c2f::sim {

/// Dense row-major double matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill)
    {
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

// Row i, column j: P(predict j | true class i).
struct ConfusionMatrix {
    Matrix entries;
};

// E x K; column k is the embedding of class k.
struct ClassEmbeddingMatrix {
    Matrix weight;
};

// Symmetric K x K with zero diagonal.
struct ClassDistanceMatrix {
    Matrix entries;

    std::size_t size() const noexcept { return entries.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return entries(i, j); }
    friend bool operator==(const ClassDistanceMatrix&, const ClassDistanceMatrix&) = default;
};

enum class MetricKind { EmbeddingDist, EmbeddingSim, Confusion, ConfusionDist, Random };

std::string to_string(MetricKind kind);
MetricKind metric_from_string(const std::string& name);

// Row-normalized counts; classes without samples get a uniform row.
ConfusionMatrix confusion_from_predictions(std::span<const std::size_t> predicted,
                                           std::span<const std::uint16_t> labels,
                                           std::size_t num_classes);
ConfusionMatrix estimate_confusion(const net::ModelSpec& spec, const net::ModelParams& params,
                                   const Tensor& inputs, std::span<const std::uint16_t> labels,
                                   const net::ExecContext& ctx = {});

ClassEmbeddingMatrix class_embeddings(const net::ModelParams& params);
// Cosine distance between embedding columns. Throws on a zero-norm column.
ClassDistanceMatrix embedding_distance(const ClassEmbeddingMatrix& w);

struct MetricInputs {
    const ConfusionMatrix* confusion = nullptr;
    const ClassEmbeddingMatrix* embeddings = nullptr;
    std::optional<std::uint64_t> seed;
};

ClassDistanceMatrix build_metric(MetricKind kind, const MetricInputs& inputs);

// Empty when D is square, finite, symmetric (1e-6) and has a zero diagonal.
std::vector<std::string> distance_violations(const ClassDistanceMatrix& d);

// Row-major CSV with 9 significant digits.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);
std::string format_number(double v);

}  // namespace c2f::sim

#include "c2f/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "c2f/error.hpp"
#include "c2f/rng.hpp"

namespace c2f::sim {

namespace {

constexpr double kSymmetryTolerance = 1e-6;

void require_square(const Matrix& m, const char* what)
{
    if (m.rows() != m.cols() || m.rows() < 2) {
        throw ValidationError(std::string(what) + " must be a square matrix with at least two classes");
    }
}

ClassDistanceMatrix random_metric(std::size_t k, std::uint64_t seed)
{
    Rng rng(seed);
    struct Pair {
        double value;
        std::size_t i;
        std::size_t j;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            pairs.push_back({rng.normal(), i, j});
        }
    }
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pairs[a].value < pairs[b].value; });
    ClassDistanceMatrix d{Matrix(k, k)};
    const double denom = static_cast<double>(pairs.size() + 1);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const Pair& p = pairs[order[rank]];
        const double v = static_cast<double>(rank + 1) / denom;
        d.entries(p.i, p.j) = v;
        d.entries(p.j, p.i) = v;
    }
    return d;
}

}  // namespace

std::string to_string(MetricKind kind)
{
    switch (kind) {
    case MetricKind::EmbeddingDist: return "EmbeddingDist";
    case MetricKind::EmbeddingSim: return "EmbeddingSim";
    case MetricKind::Confusion: return "Confusion";
    case MetricKind::ConfusionDist: return "ConfusionDist";
    case MetricKind::Random: return "Random";
    }
    return "unknown";
}

MetricKind metric_from_string(const std::string& name)
{
    for (MetricKind k : {MetricKind::EmbeddingDist, MetricKind::EmbeddingSim, MetricKind::Confusion,
                         MetricKind::ConfusionDist, MetricKind::Random}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw ValidationError("unknown metric '" + name + "'");
}

ConfusionMatrix confusion_from_predictions(std::span<const std::size_t> predicted,
                                           std::span<const std::uint16_t> labels,
                                           std::size_t num_classes)
{
    if (predicted.size() != labels.size()) {
        throw ValidationError("confusion: prediction and label counts differ");
    }
    if (labels.empty()) {
        throw ValidationError("confusion: dataset is empty");
    }
    Matrix counts(num_classes, num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes || predicted[i] >= num_classes) {
            throw ValidationError("confusion: class index out of range");
        }
        counts(labels[i], predicted[i]) += 1.0;
    }
    for (std::size_t r = 0; r < num_classes; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            total += counts(r, c);
        }
        for (std::size_t c = 0; c < num_classes; ++c) {
            counts(r, c) = total > 0.0 ? counts(r, c) / total : 1.0 / static_cast<double>(num_classes);
        }
    }
    return ConfusionMatrix{std::move(counts)};
}

ConfusionMatrix estimate_confusion(const net::ModelSpec& spec, const net::ModelParams& params,
                                   const Tensor& inputs, std::span<const std::uint16_t> labels,
                                   const net::ExecContext& ctx)
{
    for (std::uint16_t y : labels) {
        if (y >= spec.num_classes) {
            throw ValidationError("confusion: dataset has more classes than the model");
        }
    }
    const Tensor logits = net::predict(spec, params, inputs, ctx);
    return confusion_from_predictions(net::argmax_rows(logits), labels, spec.num_classes);
}

ClassEmbeddingMatrix class_embeddings(const net::ModelParams& params)
{
    const Tensor& w = params.predictor.weight;
    Matrix m(w.dim(0), w.dim(1));
    for (std::size_t e = 0; e < w.dim(0); ++e) {
        for (std::size_t k = 0; k < w.dim(1); ++k) {
            m(e, k) = w.at(e, k);
        }
    }
    return ClassEmbeddingMatrix{std::move(m)};
}

ClassDistanceMatrix embedding_distance(const ClassEmbeddingMatrix& emb)
{
    const Matrix& w = emb.weight;
    const std::size_t k = w.cols();
    if (k < 2) {
        throw ValidationError("embedding distance needs at least two classes");
    }
    std::vector<double> norms(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t e = 0; e < w.rows(); ++e) {
            norms[c] += w(e, c) * w(e, c);
        }
        norms[c] = std::sqrt(norms[c]);
        if (!(norms[c] > 0.0)) {
            throw ValidationError("class " + std::to_string(c) + " has a zero-norm embedding");
        }
    }
    ClassDistanceMatrix d{Matrix(k, k)};
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            double dot = 0.0;
            for (std::size_t e = 0; e < w.rows(); ++e) {
                dot += w(e, i) * w(e, j);
            }
            const double v = 1.0 - dot / (norms[i] * norms[j]);
            d.entries(i, j) = v;
            d.entries(j, i) = v;
        }
    }
    return d;
}

ClassDistanceMatrix build_metric(MetricKind kind, const MetricInputs& inputs)
{
    ClassDistanceMatrix d;
    switch (kind) {
    case MetricKind::EmbeddingDist:
    case MetricKind::EmbeddingSim: {
        if (inputs.embeddings == nullptr) {
            throw ValidationError(to_string(kind) + " needs class embeddings");
        }
        d = embedding_distance(*inputs.embeddings);
        if (kind == MetricKind::EmbeddingSim) {
            for (std::size_t i = 0; i < d.size(); ++i) {
                for (std::size_t j = 0; j < d.size(); ++j) {
                    d.entries(i, j) = i == j ? 0.0 : 1.0 - d.entries(i, j);
                }
            }
        }
        break;
    }
    case MetricKind::Confusion:
    case MetricKind::ConfusionDist: {
        if (inputs.confusion == nullptr) {
            throw ValidationError(to_string(kind) + " needs a confusion matrix");
        }
        const Matrix& c = inputs.confusion->entries;
        require_square(c, "confusion matrix");
        const std::size_t k = c.rows();
        Matrix s(k, k);
        double peak = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                s(i, j) = c(i, j) + c(j, i);
                peak = std::max(peak, s(i, j));
            }
        }
        if (!(peak > 0.0)) {
            throw ValidationError("confusion matrix is all zero");
        }
        d.entries = Matrix(k, k);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                if (i == j) {
                    continue;
                }
                const double normalized = s(i, j) / peak;
                d.entries(i, j) = kind == MetricKind::Confusion ? normalized : 1.0 - normalized;
            }
        }
        break;
    }
    case MetricKind::Random: {
        if (!inputs.seed) {
            throw ValidationError("Random metric needs a seed");
        }
        std::size_t k = 0;
        if (inputs.embeddings != nullptr) {
            k = inputs.embeddings->weight.cols();
        } else if (inputs.confusion != nullptr) {
            k = inputs.confusion->entries.rows();
        } else {
            throw ValidationError("Random metric needs the class count (embeddings or confusion)");
        }
        d = random_metric(k, *inputs.seed);
        break;
    }
    }
    for (double v : d.entries.values()) {
        if (!std::isfinite(v)) {
            throw ValidationError("metric " + to_string(kind) + " produced a non-finite entry");
        }
    }
    return d;
}

std::vector<std::string> distance_violations(const ClassDistanceMatrix& d)
{
    std::vector<std::string> out;
    const Matrix& m = d.entries;
    if (m.rows() != m.cols()) {
        out.push_back("distance matrix is not square");
        return out;
    }
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (m(i, i) != 0.0) {
            out.push_back("diagonal entry " + std::to_string(i) + " is not zero");
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (!std::isfinite(m(i, j))) {
                out.push_back("entry (" + std::to_string(i) + "," + std::to_string(j) + ") is not finite");
            } else if (j > i && std::abs(m(i, j) - m(j, i)) > kSymmetryTolerance) {
                out.push_back("entries (" + std::to_string(i) + "," + std::to_string(j) +
                              ") and its transpose differ");
            }
        }
    }
    return out;
}

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw RuntimeFailure("cannot write " + path.string());
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out << (c == 0 ? "" : ",") << format_number(m(r, c));
        }
        out << '\n';
    }
}

Matrix read_matrix_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw ValidationError("non-numeric cell '" + cell + "' in " + path.string());
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ValidationError("ragged rows in " + path.string());
        }
        rows.push_back(std::move(row));
    }
    Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(r, c) = rows[r][c];
        }
    }
    return m;
}

}  // namespace c2f::sim

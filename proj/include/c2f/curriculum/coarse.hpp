#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "c2f/hierarchy.hpp"
#include "c2f/netcore/loss.hpp"

namespace c2f::cur {

// Index of the cluster containing each label (0-based).
std::vector<std::uint16_t> transform_labels(std::span<const std::uint16_t> labels,
                                            const hier::Partition& clusters);

/// Mean over the batch of -log(sum of softmax probabilities over the true
/// class's cluster), with its gradient in dlogits.
net::LossResult marginalized_loss(const Tensor& logits, std::span<const std::uint16_t> labels,
                                  std::span<const std::size_t> cluster_map);

// Argmax of the summed softmax probability per cluster, lowest cluster on ties.
std::vector<std::size_t> predict_clusters(const Tensor& logits, std::span<const std::size_t> cluster_map,
                                          std::size_t num_clusters);

enum class TMode { AutoText, AutoAlg3, Fixed };

std::string to_string(TMode mode);
TMode t_mode_from_string(const std::string& name);

// auto-text: first 1-based epoch reaching 0.9 x best; auto-alg3: round(0.9 x
// 1-based best epoch); fixed: fixed_t.
std::size_t curriculum_length(std::span<const double> val_acc, TMode mode,
                              std::optional<std::size_t> fixed_t = std::nullopt);

// Epochs per coarse level: round(T / coarse_levels) each, the last coarse
// level taking whatever remains so the total is exactly T.
std::vector<std::size_t> coarse_epoch_budget(std::size_t total, std::size_t coarse_levels);

}  // namespace c2f::cur

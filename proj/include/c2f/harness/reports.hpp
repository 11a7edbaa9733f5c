#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "c2f/harness/experiment.hpp"

namespace c2f::harness {

// Timing-free structured results; identical inputs give identical bytes.
nlohmann::json summary_json(const std::vector<ComparisonSummary>& cells);
// Rebuilds cells from summary_json output (runs keep their scalar results only).
std::vector<ComparisonSummary> summaries_from_json(const nlohmann::json& doc);
std::vector<ComparisonSummary> load_summary(const std::filesystem::path& path);

// One row per method and cell: trainCount,curriculumLength,method,n,mean,stderr,gain,gainStderr,failures.
std::string summary_csv(const std::vector<ComparisonSummary>& cells);

// SVG 1.1 line chart of mean test accuracy against the sweep axis with
// standard-error bands, one polyline per method.
std::string accuracy_svg(const std::vector<ComparisonSummary>& cells);

/// Writes summary.json, summary.csv, accuracy.svg, curves/<run>.csv,
/// runs/<run>.json and the hierarchy files into out_dir.
void emit_reports(const std::vector<ComparisonSummary>& cells, const std::filesystem::path& out_dir);

// Write to a temporary sibling, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace c2f::harness

#include "c2f/harness/reports.hpp"

#include <fstream>
#include <sstream>

#include "c2f/error.hpp"
#include "c2f/similarity.hpp"

namespace c2f::harness {

namespace fs = std::filesystem;

namespace {

nlohmann::json optional_json(const auto& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json method_json(const MethodStats& m)
{
    return {{"method", m.method},       {"seeds", m.seeds},
            {"accuracy", m.accuracy},   {"mean", m.mean},
            {"stderr", m.stderr_},      {"gains", m.gains},
            {"gainMean", m.gain_mean},  {"gainStderr", m.gain_stderr},
            {"failures", m.failures},   {"meanEpochs", m.mean_epochs}};
}

nlohmann::json run_json(const RunRecord& r)
{
    nlohmann::json doc = {{"name", r.name},
                          {"method", r.method},
                          {"seed", r.seed},
                          {"metric", r.metric},
                          {"curriculumLength", r.curriculum_length},
                          {"levelSizes", r.level_sizes},
                          {"hierarchy", r.hierarchy_file},
                          {"testAcc", r.report.test_acc},
                          {"bestValAcc", r.report.best_val_acc},
                          {"bestValEpoch", r.report.best_val_epoch},
                          {"totalEpochs", r.report.total_epochs()},
                          {"levelStart", r.report.level_start},
                          {"failed", r.report.failed}};
    if (r.report.failed) {
        doc["failure"] = r.report.failure;
    }
    return doc;
}

std::string csv_optional(const auto& v)
{
    return v ? std::to_string(*v) : std::string();
}

}  // namespace

nlohmann::json summary_json(const std::vector<ComparisonSummary>& cells)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json methods = nlohmann::json::array();
        for (const auto& m : c.methods) {
            methods.push_back(method_json(m));
        }
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& r : c.runs) {
            runs.push_back(run_json(r));
        }
        arr.push_back({{"trainCount", optional_json(c.train_count)},
                       {"curriculumLength", optional_json(c.curriculum_length)},
                       {"methods", methods},
                       {"runs", runs}});
    }
    return {{"format", "c2f-summary"}, {"version", 1}, {"cells", arr}};
}

std::vector<ComparisonSummary> summaries_from_json(const nlohmann::json& doc)
{
    if (!doc.is_object() || doc.value("format", "") != "c2f-summary" || !doc.contains("cells")) {
        throw ValidationError("not a c2f summary document");
    }
    std::vector<ComparisonSummary> out;
    try {
        for (const auto& c : doc.at("cells")) {
            ComparisonSummary cell;
            if (!c.at("trainCount").is_null()) {
                cell.train_count = c.at("trainCount").get<std::int64_t>();
            }
            if (!c.at("curriculumLength").is_null()) {
                cell.curriculum_length = c.at("curriculumLength").get<std::size_t>();
            }
            for (const auto& m : c.at("methods")) {
                MethodStats s;
                s.method = m.at("method").get<std::string>();
                s.seeds = m.at("seeds").get<std::vector<std::uint64_t>>();
                s.accuracy = m.at("accuracy").get<std::vector<double>>();
                s.mean = m.at("mean").get<double>();
                s.stderr_ = m.at("stderr").get<double>();
                s.gains = m.at("gains").get<std::vector<double>>();
                s.gain_mean = m.at("gainMean").get<double>();
                s.gain_stderr = m.at("gainStderr").get<double>();
                s.failures = m.at("failures").get<std::size_t>();
                s.mean_epochs = m.at("meanEpochs").get<double>();
                cell.methods.push_back(std::move(s));
            }
            for (const auto& r : c.at("runs")) {
                RunRecord rec;
                rec.name = r.at("name").get<std::string>();
                rec.method = r.at("method").get<std::string>();
                rec.seed = r.at("seed").get<std::uint64_t>();
                rec.metric = r.at("metric").get<std::string>();
                rec.curriculum_length = r.at("curriculumLength").get<std::size_t>();
                rec.level_sizes = r.at("levelSizes").get<std::vector<std::size_t>>();
                rec.hierarchy_file = r.at("hierarchy").get<std::string>();
                rec.report.method = rec.method;
                rec.report.test_acc = r.at("testAcc").get<double>();
                rec.report.best_val_acc = r.at("bestValAcc").get<double>();
                rec.report.best_val_epoch = r.at("bestValEpoch").get<std::size_t>();
                rec.report.level_start = r.at("levelStart").get<std::vector<std::size_t>>();
                rec.report.epochs.resize(r.at("totalEpochs").get<std::size_t>());
                rec.report.failed = r.at("failed").get<bool>();
                rec.report.failure = r.value("failure", "");
                cell.runs.push_back(std::move(rec));
            }
            out.push_back(std::move(cell));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed summary: ") + e.what());
    }
    return out;
}

std::vector<ComparisonSummary> load_summary(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    try {
        return summaries_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("malformed summary " + path.string() + ": " + e.what());
    }
}

std::string summary_csv(const std::vector<ComparisonSummary>& cells)
{
    std::ostringstream out;
    out << "trainCount,curriculumLength,method,n,mean,stderr,gain,gainStderr,failures\n";
    for (const auto& c : cells) {
        for (const auto& m : c.methods) {
            out << csv_optional(c.train_count) << ',' << csv_optional(c.curriculum_length) << ',' << m.method
                << ',' << m.accuracy.size() << ',' << sim::format_number(m.mean) << ','
                << sim::format_number(m.stderr_) << ',' << sim::format_number(m.gain_mean) << ','
                << sim::format_number(m.gain_stderr) << ',' << m.failures << '\n';
        }
    }
    return out.str();
}

void write_file_atomic(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    const fs::path tmp(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw RuntimeFailure("cannot write " + path.string());
        }
        out << content;
        if (!out) {
            throw RuntimeFailure("write failed for " + path.string());
        }
    }
    fs::rename(tmp, path);
}

void emit_reports(const std::vector<ComparisonSummary>& cells, const fs::path& out_dir)
{
    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "summary.json", summary_json(cells).dump(2) + "\n");
    write_file_atomic(out_dir / "summary.csv", summary_csv(cells));
    write_file_atomic(out_dir / "accuracy.svg", accuracy_svg(cells));
    fs::create_directories(out_dir / "curves");
    fs::create_directories(out_dir / "runs");
    for (const auto& c : cells) {
        for (const auto& r : c.runs) {
            write_file_atomic(out_dir / "curves" / (r.name + ".csv"), cur::epochs_csv(r.report));
            nlohmann::json doc = cur::to_json(r.report);
            doc["name"] = r.name;
            doc["seed"] = r.seed;
            doc["metric"] = r.metric;
            doc["curriculumLength"] = r.curriculum_length;
            doc["levelSizes"] = r.level_sizes;
            doc["hierarchy"] = r.hierarchy_file;
            write_file_atomic(out_dir / "runs" / (r.name + ".json"), doc.dump(2) + "\n");
        }
        for (const auto& h : c.hierarchies) {
            write_file_atomic(out_dir / h.file, hier::to_json(h.hierarchy, h.class_names).dump(2) + "\n");
        }
    }
}

}  // namespace c2f::harness

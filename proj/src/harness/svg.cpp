#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "c2f/harness/reports.hpp"

namespace c2f::harness {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 190.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string axis_label(const ComparisonSummary& c, bool by_length)
{
    if (by_length) {
        return c.curriculum_length ? std::to_string(*c.curriculum_length) : "auto";
    }
    return c.train_count ? std::to_string(*c.train_count) : "all";
}

struct Point {
    std::size_t x;
    double mean;
    double err;
};

}  // namespace

std::string accuracy_svg(const std::vector<ComparisonSummary>& cells)
{
    // The x axis follows train counts unless only the curriculum length varies.
    bool counts_vary = false;
    bool lengths_vary = false;
    for (const auto& c : cells) {
        counts_vary = counts_vary || c.train_count != cells.front().train_count;
        lengths_vary = lengths_vary || c.curriculum_length != cells.front().curriculum_length;
    }
    const bool by_length = lengths_vary && !counts_vary;

    std::vector<std::string> ticks;
    std::map<std::string, std::vector<Point>> series;
    std::vector<std::string> order;
    for (const auto& c : cells) {
        const std::string tick = axis_label(c, by_length);
        auto it = std::find(ticks.begin(), ticks.end(), tick);
        const std::size_t x = static_cast<std::size_t>(it - ticks.begin());
        if (it == ticks.end()) {
            ticks.push_back(tick);
        }
        for (const auto& m : c.methods) {
            std::string key = m.method;
            if (counts_vary && lengths_vary) {
                key += " T=" + axis_label(c, true);
            }
            if (series.find(key) == series.end()) {
                order.push_back(key);
            }
            series[key].push_back({x, m.mean, m.stderr_});
        }
    }

    double lo = 1.0;
    double hi = 0.0;
    for (const auto& [key, pts] : series) {
        for (const auto& p : pts) {
            lo = std::min(lo, p.mean - p.err);
            hi = std::max(hi, p.mean + p.err);
        }
    }
    if (lo > hi) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 0.02) {
        lo -= 0.01;
        hi += 0.01;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](std::size_t x) {
        return ticks.size() <= 1 ? kLeft + plot_w / 2.0
                                 : kLeft + plot_w * static_cast<double>(x) / static_cast<double>(ticks.size() - 1);
    };
    auto py = [&](double y) { return kTop + plot_h * (hi - y) / (hi - lo); };

    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        s << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py(v) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
          << num(100.0 * v) << "</text>\n";
    }
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        s << "<text x=\"" << num(px(i)) << "\" y=\"" << kTop + plot_h + 18
          << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(ticks[i]) << "</text>\n";
    }
    s << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15 << "\" font-size=\"12\" text-anchor=\"middle\">"
      << (by_length ? "curriculum length (epochs)" : "training samples per class") << "</text>\n"
      << "<text x=\"18\" y=\"" << kTop + plot_h / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << kTop + plot_h / 2 << ")\">test accuracy (%)</text>\n";

    for (std::size_t si = 0; si < order.size(); ++si) {
        const auto& pts = series[order[si]];
        const char* color = kPalette[si % std::size(kPalette)];
        std::string band;
        for (const auto& p : pts) {
            band += num(px(p.x)) + "," + num(py(p.mean + p.err)) + " ";
        }
        for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
            band += num(px(it->x)) + "," + num(py(it->mean - it->err)) + " ";
        }
        band.pop_back();
        s << "<polygon points=\"" << band << "\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        std::string line;
        for (const auto& p : pts) {
            line += num(px(p.x)) + "," + num(py(p.mean)) + " ";
        }
        line.pop_back();
        s << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\">"
          << "<title>" << escape(order[si]) << "</title></polyline>\n";
        const double ly = kTop + 14.0 + 18.0 * static_cast<double>(si);
        s << "<line x1=\"" << kWidth - kRight + 15 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 35
          << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << kWidth - kRight + 40 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
          << escape(order[si]) << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace c2f::harness

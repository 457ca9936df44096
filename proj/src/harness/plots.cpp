#include "safebo/harness/plots.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

namespace safebo::harness {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 150.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 45.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string escape(const std::string& s) {
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

/// Linear data -> pixel mapping for one plot area.
struct Frame {
    double x0, x1, y0, y1;

    double px(double x) const {
        const double span = x1 - x0;
        return kLeft + (span > 0 ? (x - x0) / span : 0.5) * (kWidth - kLeft - kRight);
    }
    double py(double y) const {
        const double span = y1 - y0;
        return kHeight - kBottom - (span > 0 ? (y - y0) / span : 0.5) * (kHeight - kTop - kBottom);
    }
};

Frame padded(double x0, double x1, double y0, double y1) {
    if (!(y1 > y0)) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pad = 0.05 * (y1 - y0);
    return {x0, x1, y0 - pad, y1 + pad};
}

std::string header(const std::string& title) {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{:.2f}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        kWidth, kHeight, kWidth, kHeight, (kWidth - kRight + kLeft) / 2.0, escape(title));
}

std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
    std::string s;
    const double left = kLeft, right = kWidth - kRight, top = kTop, bottom = kHeight - kBottom;
    s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
                     left, top, right - left, bottom - top);
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
        const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{:.3g}</text>\n",
                         f.px(xv), bottom + 14, xv);
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{:.3g}</text>\n",
                         left - 4, f.py(yv) + 3, yv);
    }
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
                     (left + right) / 2, kHeight - 8, escape(xlabel));
    s += fmt::format("<text x=\"14\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2f})\">{}</text>\n",
                     (top + bottom) / 2, (top + bottom) / 2, escape(ylabel));
    return s;
}

std::string polyline(const Frame& f, const std::vector<double>& xs, const std::vector<double>& ys, const char* stroke,
                     double width, double opacity, const char* dash = nullptr) {
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(ys[i])) continue;
        pts += fmt::format("{}{:.2f},{:.2f}", pts.empty() ? "" : " ", f.px(xs[i]), f.py(ys[i]));
    }
    if (pts.empty()) return {};
    return fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{:.2f}\" stroke-opacity=\"{:.2f}\"{}/>\n",
                       pts, stroke, width, opacity, dash ? fmt::format(" stroke-dasharray=\"{}\"", dash) : "");
}

std::string band(const Frame& f, const std::vector<double>& xs, const std::vector<double>& lo,
                 const std::vector<double>& hi, const char* fill, double opacity) {
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i) pts += fmt::format("{}{:.2f},{:.2f}", pts.empty() ? "" : " ", f.px(xs[i]), f.py(hi[i]));
    for (std::size_t i = xs.size(); i-- > 0;) pts += fmt::format(" {:.2f},{:.2f}", f.px(xs[i]), f.py(lo[i]));
    return fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"{:.2f}\" stroke=\"none\"/>\n", pts, fill, opacity);
}

std::string legend_entry(std::size_t slot, const std::string& label, const char* stroke) {
    const double y = kTop + 12 + 16.0 * static_cast<double>(slot);
    const double x = kWidth - kRight + 10;
    return fmt::format(
        "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"2.50\"/>\n"
        "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
        x, y, x + 18, y, stroke, x + 22, y + 4, escape(label));
}

std::vector<std::string> algorithm_order(const MetricsSummary& summary) {
    std::vector<std::string> order;
    for (const auto& row : summary.aggregates) {
        if (std::find(order.begin(), order.end(), row.algorithm) == order.end()) order.push_back(row.algorithm);
    }
    return order;
}

}  // namespace

std::string render_regret_svg(const MetricsSummary& summary) {
    const auto order = algorithm_order(summary);
    double tmax = 1, ylo = std::numeric_limits<double>::infinity(), yhi = -std::numeric_limits<double>::infinity();
    for (const auto& row : summary.aggregates) {
        tmax = std::max(tmax, static_cast<double>(row.t));
        ylo = std::min(ylo, row.mean_simple_regret - (row.function_id == kAllFunctions ? row.std_simple_regret : 0.0));
        yhi = std::max(yhi, row.mean_simple_regret + (row.function_id == kAllFunctions ? row.std_simple_regret : 0.0));
    }
    if (!std::isfinite(ylo)) ylo = yhi = 0.0;
    const Frame f = padded(1.0, tmax, ylo, yhi);

    std::string svg = header("Simple regret");
    svg += axes(f, "iteration t", "simple regret");
    for (std::size_t a = 0; a < order.size(); ++a) {
        std::map<int, std::pair<std::vector<double>, std::vector<double>>> lines;
        std::vector<double> ts, lo, hi, mean;
        for (const auto& row : summary.aggregates) {
            if (row.algorithm != order[a]) continue;
            if (row.function_id == kAllFunctions) {
                ts.push_back(row.t);
                mean.push_back(row.mean_simple_regret);
                lo.push_back(row.mean_simple_regret - row.std_simple_regret);
                hi.push_back(row.mean_simple_regret + row.std_simple_regret);
            } else {
                lines[row.function_id].first.push_back(row.t);
                lines[row.function_id].second.push_back(row.mean_simple_regret);
            }
        }
        svg += band(f, ts, lo, hi, color(a), 0.2);
        for (const auto& [fid, line] : lines) svg += polyline(f, line.first, line.second, color(a), 0.75, 0.5);
        svg += polyline(f, ts, mean, color(a), 2.5, 1.0);
        svg += legend_entry(a, order[a], color(a));
    }
    svg += "</svg>\n";
    return svg;
}

std::string render_violations_svg(const MetricsSummary& summary) {
    const auto order = algorithm_order(summary);
    std::vector<int> totals;
    int vmax = 0;
    for (const auto& alg : order) {
        totals.push_back(summary.total_violations(alg));
        vmax = std::max(vmax, totals.back());
    }
    const Frame f{0.0, static_cast<double>(std::max<std::size_t>(order.size(), 1)), 0.0, std::max(1.0, vmax * 1.1)};
    std::string svg = header("Safety violations");
    svg += axes(f, "algorithm", "unsafe queries");
    for (std::size_t a = 0; a < order.size(); ++a) {
        const double x0 = f.px(a + 0.2), x1 = f.px(a + 0.8);
        const double y = f.py(totals[a]), base = f.py(0.0);
        svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x0, y,
                           x1 - x0, base - y, color(a));
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                           (x0 + x1) / 2, y - 4, totals[a]);
        svg += legend_entry(a, order[a], color(a));
    }
    svg += "</svg>\n";
    return svg;
}

std::string render_diagnostic_svg(const DiagnosticData& d) {
    double ylo = d.h, yhi = d.h;
    auto widen = [&](const std::vector<double>& v) {
        for (double y : v) {
            if (!std::isfinite(y)) continue;
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    };
    widen(d.truth);
    widen(d.lower);
    widen(d.upper);
    widen(d.obs_y);
    const double x0 = d.x.empty() ? 0.0 : d.x.front();
    const double x1 = d.x.empty() ? 1.0 : d.x.back();
    const Frame f = padded(x0, x1, ylo, yhi);

    std::string svg = header(d.title);
    svg += axes(f, "x", "f(x)");
    // Certified safe set as gray strips along the bottom.
    const double strip_y = kHeight - kBottom - 8;
    for (std::size_t i = 0; i < d.x.size();) {
        if (!d.safe[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < d.x.size() && d.safe[j + 1]) ++j;
        svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"6.00\" fill=\"gray\" fill-opacity=\"0.60\"/>\n",
                           f.px(d.x[i]), strip_y, std::max(1.0, f.px(d.x[j]) - f.px(d.x[i])));
        i = j + 1;
    }
    svg += band(f, d.x, d.lower, d.upper, "#1f77b4", 0.2);
    svg += polyline(f, d.x, d.mean, "#1f77b4", 1.5, 1.0);
    svg += polyline(f, d.x, d.truth, "black", 2.0, 1.0);
    svg += polyline(f, d.x, d.envelope, "#ff7f0e", 1.5, 1.0);
    svg += polyline(f, {x0, x1}, {d.h, d.h}, "gray", 1.0, 1.0, "6,4");
    for (std::size_t i = 0; i < d.obs_x.size(); ++i) {
        svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.00\" fill=\"black\"/>\n", f.px(d.obs_x[i]),
                           f.py(d.obs_y[i]));
    }
    svg += legend_entry(0, "ground truth", "black");
    svg += legend_entry(1, "GP mean", "#1f77b4");
    svg += legend_entry(2, "Lipschitz envelope", "#ff7f0e");
    svg += legend_entry(3, "threshold h", "gray");
    svg += "</svg>\n";
    return svg;
}

std::vector<std::string> render_plots(const MetricsSummary& summary, const std::vector<RunTrace>& traces,
                                      const std::filesystem::path& dir, const std::optional<DiagnosticData>& diagnostic) {
    if (traces.empty()) {
        std::cerr << "warning: no traces to plot\n";
        return {};
    }
    std::filesystem::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> files{{"regret.svg", render_regret_svg(summary)},
                                                           {"violations.svg", render_violations_svg(summary)}};
    if (diagnostic) files.emplace_back("diagnostic.svg", render_diagnostic_svg(*diagnostic));
    std::vector<std::string> written;
    for (const auto& [name, body] : files) {
        std::ofstream(dir / name, std::ios::binary) << body;
        written.push_back(name);
    }
    return written;
}

}  // namespace safebo::harness

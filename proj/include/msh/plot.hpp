#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "msh/analysis.hpp"
#include "msh/errors.hpp"

namespace msh {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Standalone SVG scatter/line plot; log-log axes when requested.  Power-law
/// data gets its fitted slope annotated in the corner.
inline std::string render_svg(const std::vector<PlotSeries>& series, bool loglog,
                              const std::string& title = "") {
    if (series.empty() || series.front().x.empty())
        throw argument_error("render_svg: empty series");
    const int w = 640, h = 480, margin = 56;
    auto tx = [&](double v) { return loglog ? std::log10(v) : v; };

    double xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size() || s.x.empty())
            throw argument_error("render_svg: series sizes mismatch or empty");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (loglog && (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)))
                throw argument_error("render_svg: log-log axes need positive data");
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, tx(s.y[i]));
            ymax = std::max(ymax, tx(s.y[i]));
        }
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    auto px = [&](double v) { return margin + (tx(v) - xmin) / (xmax - xmin) * (w - 2 * margin); };
    auto py = [&](double v) { return h - margin - (tx(v) - ymin) / (ymax - ymin) * (h - 2 * margin); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
        << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
        << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << w - 2 * margin
        << "\" height=\"" << h - 2 * margin << "\" fill=\"none\" stroke=\"#333\"/>\n";
    if (!title.empty())
        out << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
            << title << "</text>\n";

    int ci = 0;
    for (const auto& s : series) {
        const char* color = colors[ci++ % 5];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << px(s.x[i]) << "," << py(s.y[i]) << " ";
        out << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
                << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        if (!s.label.empty())
            out << "<text x=\"" << margin + 8 << "\" y=\"" << margin + 16 + 16 * (ci - 1)
                << "\" font-size=\"12\" fill=\"" << color << "\">" << s.label << "</text>\n";
        if (loglog && s.x.size() >= 2) {
            const ExponentFit fit = fit_exponents(s.x, s.y, 0.0);
            out << "<text x=\"" << w - margin - 8 << "\" y=\"" << margin + 16 + 16 * (ci - 1)
                << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">slope "
                << fit.slope << "</text>\n";
        }
    }
    out << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
        << (loglog ? "log10 x" : "x") << "</text>\n"
        << "</svg>\n";
    return out.str();
}

inline void emit_plot(const std::vector<PlotSeries>& series, const std::string& path, bool loglog,
                      const std::string& title = "") {
    const std::string svg = render_svg(series, loglog, title);
    std::ofstream out(path);
    if (!out) throw resource_error("emit_plot: cannot write " + path);
    out << svg;
    if (!out) throw resource_error("emit_plot: write failed for " + path);
}

} // namespace msh

#include "seqlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "seqlab/csvio.hpp"
#include "seqlab/errors.hpp"

namespace seqlab::plot {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                    "#d62728", "#9467bd", "#8c564b"};

std::string fmt2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range span(const std::vector<Series>& series, bool vertical) {
    bool any = false;
    Range r{0.0, 1.0};
    for (const auto& s : series) {
        const auto& vals = vertical ? s.y : s.x;
        for (double v : vals) {
            if (std::isnan(v)) continue;
            if (!any) {
                r.lo = r.hi = v;
                any = true;
            } else {
                r.lo = std::min(r.lo, v);
                r.hi = std::max(r.hi, v);
            }
        }
    }
    if (!any) return {0.0, 1.0};
    if (r.lo == r.hi) {
        r.lo -= 0.5;
        r.hi += 0.5;
    }
    return r;
}

int require_column(const csvio::Table& table, const std::string& name,
                   const std::filesystem::path& path) {
    const int c = table.column(name);
    if (c < 0) throw DataError(path.string() + ": missing column '" + name + "'");
    return c;
}

void emit_axes(std::ostringstream& svg, const Range& xr, const Range& yr,
               const PlotLayout& layout) {
    const double x0 = layout.margin_left;
    const double x1 = layout.width - layout.margin_right;
    const double y0 = layout.height - layout.margin_bottom;
    const double y1 = layout.margin_top;
    svg << "<line x1=\"" << fmt2(x0) << "\" y1=\"" << fmt2(y0) << "\" x2=\"" << fmt2(x1)
        << "\" y2=\"" << fmt2(y0) << "\" stroke=\"#333\"/>\n";
    svg << "<line x1=\"" << fmt2(x0) << "\" y1=\"" << fmt2(y0) << "\" x2=\"" << fmt2(x0)
        << "\" y2=\"" << fmt2(y1) << "\" stroke=\"#333\"/>\n";
    constexpr int kTicks = 5;
    for (int t = 0; t <= kTicks; ++t) {
        const double fx = xr.lo + (xr.hi - xr.lo) * t / kTicks;
        const double px = map_x(fx, xr.lo, xr.hi, layout);
        svg << "<line x1=\"" << fmt2(px) << "\" y1=\"" << fmt2(y0) << "\" x2=\"" << fmt2(px)
            << "\" y2=\"" << fmt2(y0 + 4) << "\" stroke=\"#333\"/>\n";
        svg << "<text x=\"" << fmt2(px) << "\" y=\"" << fmt2(y0 + 16)
            << "\" font-size=\"10\" text-anchor=\"middle\">" << csvio::format_g10(fx)
            << "</text>\n";
        const double fy = yr.lo + (yr.hi - yr.lo) * t / kTicks;
        const double py = map_y(fy, yr.lo, yr.hi, layout);
        svg << "<line x1=\"" << fmt2(x0 - 4) << "\" y1=\"" << fmt2(py) << "\" x2=\"" << fmt2(x0)
            << "\" y2=\"" << fmt2(py) << "\" stroke=\"#333\"/>\n";
        svg << "<text x=\"" << fmt2(x0 - 6) << "\" y=\"" << fmt2(py + 3)
            << "\" font-size=\"10\" text-anchor=\"end\">" << csvio::format_g10(fy)
            << "</text>\n";
    }
}

std::string render_lines(const std::vector<Series>& series, const PlotLayout& layout) {
    const Range xr = span(series, false);
    const Range yr = span(series, true);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << layout.width << "\" height=\""
        << layout.height << "\">\n";
    svg << "<rect width=\"" << layout.width << "\" height=\"" << layout.height
        << "\" fill=\"white\"/>\n";
    emit_axes(svg, xr, yr, layout);

    std::size_t color = 0;
    for (const auto& s : series) {
        std::ostringstream pts;
        bool any = false;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isnan(s.x[i]) || std::isnan(s.y[i])) continue;
            if (any) pts << " ";
            pts << fmt2(map_x(s.x[i], xr.lo, xr.hi, layout)) << ","
                << fmt2(map_y(s.y[i], yr.lo, yr.hi, layout));
            any = true;
        }
        const char* stroke = kPalette[color % std::size(kPalette)];
        if (any)
            svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" "
                << "points=\"" << pts.str() << "\"/>\n";
        svg << "<text x=\"" << layout.margin_left + 8 << "\" y=\""
            << layout.margin_top + 12 + 14 * static_cast<int>(color) << "\" font-size=\"11\" fill=\""
            << stroke << "\">" << s.label << "</text>\n";
        ++color;
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string render_reliability(const csvio::Table& table, const std::filesystem::path& path,
                               const PlotLayout& layout) {
    const int c_lo = require_column(table, "bin_low", path);
    const int c_hi = require_column(table, "bin_high", path);
    const int c_acc = require_column(table, "mean_acc", path);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << layout.width << "\" height=\""
        << layout.height << "\">\n";
    svg << "<rect width=\"" << layout.width << "\" height=\"" << layout.height
        << "\" fill=\"white\"/>\n";
    const Range unit{0.0, 1.0};
    emit_axes(svg, unit, unit, layout);

    for (const auto& row : table.rows) {
        const double lo = row[static_cast<std::size_t>(c_lo)];
        const double hi = row[static_cast<std::size_t>(c_hi)];
        const double acc = row[static_cast<std::size_t>(c_acc)];
        const double x = map_x(lo, 0.0, 1.0, layout);
        const double w = map_x(hi, 0.0, 1.0, layout) - x;
        const double y = map_y(acc, 0.0, 1.0, layout);
        const double base = map_y(0.0, 0.0, 1.0, layout);
        svg << "<rect x=\"" << fmt2(x) << "\" y=\"" << fmt2(y) << "\" width=\"" << fmt2(w)
            << "\" height=\"" << fmt2(base - y)
            << "\" fill=\"#1f77b4\" fill-opacity=\"0.7\" stroke=\"#333\"/>\n";
    }
    // Perfect-calibration diagonal.
    svg << "<line x1=\"" << fmt2(map_x(0.0, 0.0, 1.0, layout)) << "\" y1=\""
        << fmt2(map_y(0.0, 0.0, 1.0, layout)) << "\" x2=\"" << fmt2(map_x(1.0, 0.0, 1.0, layout))
        << "\" y2=\"" << fmt2(map_y(1.0, 0.0, 1.0, layout))
        << "\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

PlotKind parse_plot_kind(const std::string& name) {
    if (name == "loss") return PlotKind::Loss;
    if (name == "accuracy") return PlotKind::Accuracy;
    if (name == "mask") return PlotKind::Mask;
    if (name == "reliability") return PlotKind::Reliability;
    throw ParameterError("unknown plot kind '" + name + "'");
}

double map_x(double v, double vmin, double vmax, const PlotLayout& layout) {
    const double inner = layout.width - layout.margin_left - layout.margin_right;
    if (vmax == vmin) return layout.margin_left + inner / 2.0;
    return layout.margin_left + (v - vmin) / (vmax - vmin) * inner;
}

double map_y(double v, double vmin, double vmax, const PlotLayout& layout) {
    const double inner = layout.height - layout.margin_top - layout.margin_bottom;
    if (vmax == vmin) return layout.margin_top + inner / 2.0;
    return layout.height - layout.margin_bottom - (v - vmin) / (vmax - vmin) * inner;
}

std::string render_svg(const std::filesystem::path& csv_path, PlotKind kind) {
    const csvio::Table table = csvio::read_table(csv_path);
    const PlotLayout layout;

    if (kind == PlotKind::Reliability) return render_reliability(table, csv_path, layout);

    const int c_iter = require_column(table, "iter", csv_path);
    auto column_series = [&](const std::string& name, const std::string& label) {
        const int c = require_column(table, name, csv_path);
        Series s;
        s.label = label;
        for (const auto& row : table.rows) {
            s.x.push_back(row[static_cast<std::size_t>(c_iter)]);
            s.y.push_back(row[static_cast<std::size_t>(c)]);
        }
        return s;
    };

    std::vector<Series> series;
    switch (kind) {
        case PlotKind::Loss:
            series.push_back(column_series("total", "total"));
            series.push_back(column_series("l_sup", "l_sup"));
            series.push_back(column_series("l_u_ce", "l_u_ce"));
            series.push_back(column_series("l_kl_wm", "l_kl_wm"));
            series.push_back(column_series("l_kl_ms", "l_kl_ms"));
            series.push_back(column_series("l_kl_ws", "l_kl_ws"));
            break;
        case PlotKind::Accuracy: {
            Series s = column_series("eval_error", "eval_accuracy");
            for (auto& v : s.y) v = 1.0 - v;
            series.push_back(std::move(s));
            break;
        }
        case PlotKind::Mask:
            series.push_back(column_series("mask_ratio", "mask_ratio"));
            series.push_back(column_series("utilization", "utilization"));
            break;
        case PlotKind::Reliability: break;  // handled above
    }
    return render_lines(series, layout);
}

void plot_to_file(const std::filesystem::path& csv_path, PlotKind kind,
                  const std::filesystem::path& out_path) {
    const std::string svg = render_svg(csv_path, kind);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DataError(out_path.string() + ": cannot open for writing");
    out << svg;
    if (!out) throw DataError(out_path.string() + ": write failed");
}

}  // namespace seqlab::plot

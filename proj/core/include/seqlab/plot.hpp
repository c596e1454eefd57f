#pragma once

#include <filesystem>
#include <string>

namespace seqlab::plot {

enum class PlotKind { Loss, Accuracy, Mask, Reliability };

PlotKind parse_plot_kind(const std::string& name);

/// Fixed canvas geometry; exposed so tests can recompute coordinates.
struct PlotLayout {
    int width = 640;
    int height = 400;
    int margin_left = 60;
    int margin_right = 20;
    int margin_top = 20;
    int margin_bottom = 40;
};

/// Data-space to pixel-space mapping used by the renderer.
double map_x(double v, double vmin, double vmax, const PlotLayout& layout = {});
double map_y(double v, double vmin, double vmax, const PlotLayout& layout = {});

/// Render a metrics CSV (loss/accuracy/mask) or a reliability CSV into a
/// standalone SVG. Missing columns for the requested kind raise DataError.
/// Output bytes are a pure function of the input file.
std::string render_svg(const std::filesystem::path& csv_path, PlotKind kind);

void plot_to_file(const std::filesystem::path& csv_path, PlotKind kind,
                  const std::filesystem::path& out_path);

}  // namespace seqlab::plot

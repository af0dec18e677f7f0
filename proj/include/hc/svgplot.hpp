#pragma once

#include <string>
#include <vector>

namespace hc {

// Minimal SVG charting for the CSV reports: first column is x, remaining
// columns are series. style "lines" draws polylines, "bars" grouped bars.
struct PlotSpec {
    std::string title;
    std::string x_label, y_label;
    std::string style = "lines";
    int width = 720, height = 480;
};

void write_svg_plot(const std::string& csv_path, const std::string& svg_path, const PlotSpec& spec);

}  // namespace hc

#include "hc/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hc/evalkit.hpp"

namespace hc {

namespace {

const char* kPalette[] = {"#c44e52", "#4c72b0", "#55a868", "#e8a33d",
                          "#8172b2", "#64b5cd", "#937860", "#555555"};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Table read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("plot: cannot open " + path);
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            t.header = cells;
            first = false;
            continue;
        }
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(std::stod(c));
        t.rows.push_back(row);
    }
    if (t.header.size() < 2 || t.rows.empty()) throw std::runtime_error("plot: nothing to plot in " + path);
    return t;
}

}  // namespace

void write_svg_plot(const std::string& csv_path, const std::string& svg_path, const PlotSpec& spec) {
    const Table t = read_csv(csv_path);
    const int ml = 60, mr = 150, mt = 40, mb = 50;
    const double pw = spec.width - ml - mr, ph = spec.height - mt - mb;
    const std::size_t nseries = t.header.size() - 1;

    double xmin = t.rows.front()[0], xmax = t.rows.back()[0];
    double ymin = 0, ymax = -1e300;
    for (const auto& r : t.rows)
        for (std::size_t c = 1; c < r.size(); ++c) {
            ymax = std::max(ymax, r[c]);
            ymin = std::min(ymin, r[c]);
        }
    if (ymax <= ymin) ymax = ymin + 1;
    if (xmax <= xmin) xmax = xmin + 1;
    ymax *= 1.05;

    auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto Y = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ofstream f(svg_path);
    if (!f) throw std::runtime_error("plot: cannot write " + svg_path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
      << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << spec.width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
      << spec.title << "</text>\n";

    for (int i = 0; i <= 5; ++i) {  // grid + ticks
        const double gy = ymin + (ymax - ymin) * i / 5.0;
        f << "<line x1=\"" << ml << "\" y1=\"" << Y(gy) << "\" x2=\"" << ml + pw << "\" y2=\"" << Y(gy)
          << "\" stroke=\"#dddddd\"/>\n";
        f << "<text x=\"" << ml - 6 << "\" y=\"" << Y(gy) + 4 << "\" text-anchor=\"end\">"
          << format_g(std::round(gy * 1000) / 1000) << "</text>\n";
        const double gx = xmin + (xmax - xmin) * i / 5.0;
        f << "<text x=\"" << X(gx) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">"
          << format_g(std::round(gx * 1000) / 1000) << "</text>\n";
    }
    f << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";
    f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";
    f << "<text x=\"" << ml + pw / 2 << "\" y=\"" << spec.height - 12 << "\" text-anchor=\"middle\">"
      << spec.x_label << "</text>\n";
    f << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << mt + ph / 2 << ")\">" << spec.y_label << "</text>\n";

    if (spec.style == "bars") {
        const double group_w = pw / t.rows.size();
        const double bar_w = std::max(1.0, group_w / nseries * 0.85);
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            for (std::size_t c = 1; c < t.header.size(); ++c) {
                const double x = ml + r * group_w + (c - 1) * bar_w;
                const double y = Y(t.rows[r][c]);
                f << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w << "\" height=\""
                  << (mt + ph - y) << "\" fill=\"" << kPalette[(c - 1) % 8] << "\"/>\n";
            }
    } else {
        for (std::size_t c = 1; c < t.header.size(); ++c) {
            f << "<polyline fill=\"none\" stroke=\"" << kPalette[(c - 1) % 8]
              << "\" stroke-width=\"1.8\" points=\"";
            for (const auto& r : t.rows) f << X(r[0]) << "," << Y(r[c]) << " ";
            f << "\"/>\n";
        }
    }
    for (std::size_t c = 1; c < t.header.size(); ++c) {  // legend
        const double ly = mt + 14.0 * (c - 1);
        f << "<rect x=\"" << ml + pw + 10 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\""
          << kPalette[(c - 1) % 8] << "\"/>\n";
        f << "<text x=\"" << ml + pw + 24 << "\" y=\"" << ly + 9 << "\">" << t.header[c] << "</text>\n";
    }
    f << "</svg>\n";
}

}  // namespace hc

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "texgram/pipeline/image.hpp"
#include "texgram/rdm.hpp"

namespace texgram::pipeline {

// Viridis colormap (polynomial fit), t clamped to [0, 1]. Luminance rises
// monotonically with t.
std::array<std::uint8_t, 3> viridis(double t);

// Square matrix as plotted: block means of the RDM when it is larger than
// the requested size.
struct HeatmapData {
  std::size_t size = 0;
  std::size_t block = 1;  // source rows per plotted row
  std::vector<double> values;
};

HeatmapData block_average(const Rdm& rdm, std::size_t max_size);

// Colour scale spans this matrix's own min and max.
RgbImage render_heatmap(const HeatmapData& data);

// "index,0,1,...": one row per plotted row.
std::string heatmap_csv(const HeatmapData& data);

struct LineSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, std::span<const LineSeries> series);

struct ScatterPanel {
  std::string title;
  std::string subtitle;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> labels;
};

std::string scatter_grid_svg(std::span<const ScatterPanel> panels, std::size_t columns,
                             const std::string& x_label, const std::string& y_label);

}  // namespace texgram::pipeline

#include "texgram/pipeline/figures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "texgram/error.hpp"

namespace texgram::pipeline {

std::array<std::uint8_t, 3> viridis(double t) {
  t = std::isfinite(t) ? std::clamp(t, 0.0, 1.0) : 0.0;
  // Degree-6 least-squares fit to the matplotlib table, per channel.
  static constexpr double c[7][3] = {
      {0.2777273272234177, 0.005407344544966578, 0.3340998053353061},
      {0.1050930431085774, 1.404613529898575, 1.384590162594685},
      {-0.3308618287255563, 0.214847559468213, 0.09509516302823659},
      {-4.634230498983486, -5.799100973351585, -19.33244095627987},
      {6.228269936347081, 14.17993336680509, 56.69055260068105},
      {4.776384997670288, -13.74514537774601, -65.35303263337234},
      {-5.435455855934631, 4.645852612178535, 26.3124352495832}};
  std::array<std::uint8_t, 3> out{};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double v = c[6][ch];
    for (int k = 5; k >= 0; --k) v = v * t + c[k][ch];
    out[ch] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  }
  return out;
}

HeatmapData block_average(const Rdm& rdm, std::size_t max_size) {
  if (rdm.size == 0) throw DataError("heatmap of an empty RDM");
  if (max_size == 0) throw ConfigError("heatmap size must be positive");
  HeatmapData out;
  out.block = (rdm.size + max_size - 1) / max_size;
  out.size = (rdm.size + out.block - 1) / out.block;
  out.values.assign(out.size * out.size, 0.0);
  for (std::size_t r = 0; r < out.size; ++r) {
    const std::size_t r0 = r * out.block, r1 = std::min(rdm.size, r0 + out.block);
    for (std::size_t c = 0; c < out.size; ++c) {
      const std::size_t c0 = c * out.block, c1 = std::min(rdm.size, c0 + out.block);
      double sum = 0.0;
      for (std::size_t i = r0; i < r1; ++i) {
        for (std::size_t j = c0; j < c1; ++j) sum += rdm.at(i, j);
      }
      out.values[r * out.size + c] = sum / static_cast<double>((r1 - r0) * (c1 - c0));
    }
  }
  return out;
}

RgbImage render_heatmap(const HeatmapData& data) {
  const auto [lo_it, hi_it] = std::minmax_element(data.values.begin(), data.values.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  RgbImage img{data.size, data.size, std::vector<std::uint8_t>(data.size * data.size * 3)};
  for (std::size_t i = 0; i < data.values.size(); ++i) {
    const auto rgb = viridis(span > 0.0 ? (data.values[i] - lo) / span : 0.0);
    std::copy(rgb.begin(), rgb.end(), img.pixels.begin() + static_cast<std::ptrdiff_t>(i * 3));
  }
  return img;
}

std::string heatmap_csv(const HeatmapData& data) {
  std::string out = "index";
  for (std::size_t c = 0; c < data.size; ++c) out += fmt::format(",{}", c);
  out += '\n';
  for (std::size_t r = 0; r < data.size; ++r) {
    out += fmt::format("{}", r);
    for (std::size_t c = 0; c < data.size; ++c) out += fmt::format(",{}", data.values[r * data.size + c]);
    out += '\n';
  }
  return out;
}

namespace {

std::string escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

constexpr std::array<const char*, 12> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};

struct Range {
  double lo, hi;
};

Range padded_range(std::span<const double> values) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo < 1e-12) {
    const double pad = std::max(1e-3, std::abs(lo) * 0.1);
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

// Plot area with linear axes mapped into a pixel box.
struct Axes {
  double x0, y0, width, height;
  Range xr, yr;

  double px(double x) const { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * width; }
  double py(double y) const { return y0 + height - (y - yr.lo) / (yr.hi - yr.lo) * height; }

  void draw(std::ostringstream& svg, const std::string& x_label, const std::string& y_label) const {
    svg << fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="{:.1f}" height="{:.1f}" fill="none" stroke="#333"/>)",
                       x0, y0, width, height)
        << '\n';
    for (int i = 0; i <= 4; ++i) {
      const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
      const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
      svg << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="10" text-anchor="middle">{:.3g}</text>)",
                         px(fx), y0 + height + 14, fx)
          << '\n'
          << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="10" text-anchor="end">{:.3g}</text>)",
                         x0 - 4, py(fy) + 3, fy)
          << '\n';
    }
    svg << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="12" text-anchor="middle">{}</text>)",
                       x0 + width / 2, y0 + height + 32, escape(x_label))
        << '\n'
        << fmt::format(R"svg(<text x="{:.1f}" y="{:.1f}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.1f} {:.1f})">{}</text>)svg",
                       x0 - 40, y0 + height / 2, x0 - 40, y0 + height / 2, escape(y_label))
        << '\n';
  }
};

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, std::span<const LineSeries> series) {
  std::vector<double> xs, ys;
  for (const LineSeries& s : series) {
    if (s.x.size() != s.y.size()) throw DataError("line series '" + s.name + "' has mismatched lengths");
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  const double width = 720, height = 440;
  const Axes axes{70, 40, 470, 340, padded_range(xs), padded_range(ys)};
  std::ostringstream svg;
  svg << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif">)",
                     width, height)
      << '\n'
      << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n'
      << fmt::format(R"(<text x="{:.1f}" y="24" font-size="15" text-anchor="middle">{}</text>)",
                     axes.x0 + axes.width / 2, escape(title))
      << '\n';
  axes.draw(svg, x_label, y_label);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const LineSeries& s = series[i];
    const char* colour = kPalette[i % kPalette.size()];
    std::string points;
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      points += fmt::format("{:.2f},{:.2f} ", axes.px(s.x[j]), axes.py(s.y[j]));
    }
    svg << fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>)", colour, points)
        << '\n';
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      svg << fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="3" fill="{}"/>)", axes.px(s.x[j]),
                         axes.py(s.y[j]), colour)
          << '\n';
    }
    const double ly = axes.y0 + 10 + 16.0 * static_cast<double>(i);
    svg << fmt::format(R"(<line x1="560" y1="{:.1f}" x2="580" y2="{:.1f}" stroke="{}" stroke-width="2"/>)", ly, ly,
                       colour)
        << '\n'
        << fmt::format(R"(<text x="586" y="{:.1f}" font-size="11">{}</text>)", ly + 4, escape(s.name)) << '\n';
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string scatter_grid_svg(std::span<const ScatterPanel> panels, std::size_t columns,
                             const std::string& x_label, const std::string& y_label) {
  if (columns == 0) throw ConfigError("scatter grid needs at least one column");
  const double cell_w = 300, cell_h = 280;
  const std::size_t rows = (panels.size() + columns - 1) / columns;
  std::ostringstream svg;
  svg << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{:.0f}" height="{:.0f}" font-family="sans-serif">)",
                     cell_w * static_cast<double>(columns), cell_h * static_cast<double>(rows))
      << '\n'
      << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const ScatterPanel& panel = panels[p];
    if (panel.x.size() != panel.y.size()) throw DataError("scatter panel '" + panel.title + "' has mismatched lengths");
    const double ox = cell_w * static_cast<double>(p % columns);
    const double oy = cell_h * static_cast<double>(p / columns);
    const Axes axes{ox + 60, oy + 44, cell_w - 80, cell_h - 100, padded_range(panel.x), padded_range(panel.y)};
    svg << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="13" text-anchor="middle">{}</text>)",
                       axes.x0 + axes.width / 2, oy + 18, escape(panel.title))
        << '\n'
        << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="10" text-anchor="middle">{}</text>)",
                       axes.x0 + axes.width / 2, oy + 34, escape(panel.subtitle))
        << '\n';
    axes.draw(svg, x_label, y_label);
    for (std::size_t i = 0; i < panel.x.size(); ++i) {
      svg << fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="3.5" fill="{}"><title>{}</title></circle>)",
                         axes.px(panel.x[i]), axes.py(panel.y[i]), kPalette[i % kPalette.size()],
                         i < panel.labels.size() ? escape(panel.labels[i]) : std::string())
          << '\n';
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace texgram::pipeline

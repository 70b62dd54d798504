#pragma once

#include <string>
#include <vector>

namespace mhe {

struct SvgSeries {
  std::string label;
  std::string color;  // CSS color
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal static line-plot writer (well-formed standalone SVG).
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series);

}  // namespace mhe

#include "mhe/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace mhe {

namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 480.0;
constexpr double kMarginL = 70.0;
constexpr double kMarginR = 160.0;  // legend area
constexpr double kMarginT = 40.0;
constexpr double kMarginB = 50.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

double nice_tick(double span) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = 10.0;
  if (norm <= 1.0) step = 1.0;
  else if (norm <= 2.0) step = 2.0;
  else if (norm <= 5.0) step = 5.0;
  return step * mag;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const SvgSeries& s : series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("write_svg_plot: series '" + s.label + "' length mismatch");
    }
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin) || !std::isfinite(ymin)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) {
    ymax += 0.5;
    ymin -= 0.5;
  }
  const double pad_y = 0.05 * (ymax - ymin);
  ymin -= pad_y;
  ymax += pad_y;

  const double pw = kWidth - kMarginL - kMarginR;
  const double ph = kHeight - kMarginT - kMarginB;
  auto sx = [&](double x) { return kMarginL + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return kHeight - kMarginB - (y - ymin) / (ymax - ymin) * ph; };

  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_svg_plot: cannot write " + path);

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth) << "\" height=\""
     << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth) << " " << fmt(kHeight) << "\">\n";
  os << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "  <text x=\"" << fmt(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"16\">" << escape_xml(title) << "</text>\n";

  // axes
  os << "  <rect x=\"" << fmt(kMarginL) << "\" y=\"" << fmt(kMarginT) << "\" width=\""
     << fmt(pw) << "\" height=\"" << fmt(ph)
     << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  const double xtick = nice_tick(xmax - xmin);
  for (double x = std::ceil(xmin / xtick) * xtick; x <= xmax + 1e-9; x += xtick) {
    os << "  <line x1=\"" << fmt(sx(x)) << "\" y1=\"" << fmt(kHeight - kMarginB) << "\" x2=\""
       << fmt(sx(x)) << "\" y2=\"" << fmt(kHeight - kMarginB + 5)
       << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    os << "  <text x=\"" << fmt(sx(x)) << "\" y=\"" << fmt(kHeight - kMarginB + 18)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(x)
       << "</text>\n";
  }
  const double ytick = nice_tick(ymax - ymin);
  for (double y = std::ceil(ymin / ytick) * ytick; y <= ymax + 1e-9; y += ytick) {
    os << "  <line x1=\"" << fmt(kMarginL - 5) << "\" y1=\"" << fmt(sy(y)) << "\" x2=\""
       << fmt(kMarginL) << "\" y2=\"" << fmt(sy(y))
       << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    os << "  <text x=\"" << fmt(kMarginL - 8) << "\" y=\"" << fmt(sy(y) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(y)
       << "</text>\n";
  }
  os << "  <text x=\"" << fmt(kMarginL + pw / 2) << "\" y=\"" << fmt(kHeight - 10)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
     << escape_xml(x_label) << "</text>\n";
  os << "  <text x=\"18\" y=\"" << fmt(kMarginT + ph / 2)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
     << "transform=\"rotate(-90 18 " << fmt(kMarginT + ph / 2) << ")\">"
     << escape_xml(y_label) << "</text>\n";

  // series (thinned to at most ~2000 points per polyline)
  for (const SvgSeries& s : series) {
    if (s.x.empty()) continue;
    const size_t stride = std::max<size_t>(1, s.x.size() / 2000);
    os << "  <polyline fill=\"none\" stroke=\"" << escape_xml(s.color)
       << "\" stroke-width=\"1.3\" points=\"";
    for (size_t i = 0; i < s.x.size(); i += stride) {
      os << fmt(sx(s.x[i])) << "," << fmt(sy(s.y[i])) << " ";
    }
    const size_t last = s.x.size() - 1;
    os << fmt(sx(s.x[last])) << "," << fmt(sy(s.y[last]));
    os << "\"/>\n";
  }

  // legend
  double ly = kMarginT + 10.0;
  for (const SvgSeries& s : series) {
    os << "  <line x1=\"" << fmt(kWidth - kMarginR + 14) << "\" y1=\"" << fmt(ly - 4)
       << "\" x2=\"" << fmt(kWidth - kMarginR + 40) << "\" y2=\"" << fmt(ly - 4)
       << "\" stroke=\"" << escape_xml(s.color) << "\" stroke-width=\"2\"/>\n";
    os << "  <text x=\"" << fmt(kWidth - kMarginR + 46) << "\" y=\"" << fmt(ly)
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape_xml(s.label)
       << "</text>\n";
    ly += 18.0;
  }

  os << "</svg>\n";
}

}  // namespace mhe

#include "mad/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mad/error.hpp"

namespace mad {

namespace {

double coord(const Vec& p, int k) { return k < p.size() ? p(k) : 0.0; }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string scatter_svg(const std::vector<Vec>& points, const std::vector<Vec>& background, const SvgOptions& o) {
  double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double hi[2] = {-lo[0], -lo[1]};
  for (const auto* set : {&points, &background}) {
    for (const auto& p : *set) {
      for (int k = 0; k < 2; ++k) {
        lo[k] = std::min(lo[k], coord(p, k));
        hi[k] = std::max(hi[k], coord(p, k));
      }
    }
  }
  for (int k = 0; k < 2; ++k) {
    if (!std::isfinite(lo[k])) lo[k] = -1.0, hi[k] = 1.0;
    const double pad = std::max(1e-6, 0.05 * (hi[k] - lo[k]));
    lo[k] -= pad;
    hi[k] += pad;
  }
  const double w = o.width;
  const double h = o.height;
  auto px = [&](double v) { return (v - lo[0]) / (hi[0] - lo[0]) * w; };
  auto py = [&](double v) { return h - (v - lo[1]) / (hi[1] - lo[1]) * h; };

  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                o.width, o.height, o.width, o.height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (!background.empty() && o.bins > 0) {
    std::vector<int> grid(static_cast<std::size_t>(o.bins * o.bins), 0);
    int peak = 0;
    for (const auto& p : background) {
      const int i = std::clamp(static_cast<int>(px(coord(p, 0)) / w * o.bins), 0, o.bins - 1);
      const int j = std::clamp(static_cast<int>(py(coord(p, 1)) / h * o.bins), 0, o.bins - 1);
      peak = std::max(peak, ++grid[static_cast<std::size_t>(j * o.bins + i)]);
    }
    const double cw = w / o.bins;
    const double ch = h / o.bins;
    for (int j = 0; j < o.bins; ++j) {
      for (int i = 0; i < o.bins; ++i) {
        const int c = grid[static_cast<std::size_t>(j * o.bins + i)];
        if (c == 0) continue;
        const int shade = 235 - static_cast<int>(135.0 * std::sqrt(static_cast<double>(c) / peak));
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"rgb(%d,%d,%d)\"/>\n", i * cw,
                      j * ch, cw, ch, shade, shade, shade);
        svg += buf;
      }
    }
  }

  svg += "<g fill=\"#c0392b\" fill-opacity=\"0.7\">\n";
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\"/>\n", px(coord(p, 0)), py(coord(p, 1)),
                  o.point_radius);
    svg += buf;
  }
  svg += "</g>\n";
  if (!o.title.empty()) {
    svg += "<text x=\"8\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">" + escape(o.title) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void write_scatter_svg(const std::string& path, const std::vector<Vec>& points, const std::vector<Vec>& background,
                       const SvgOptions& options) {
  std::ofstream out(path);
  if (!out) throw_bad_input("cannot open file for writing", {{"path", path}});
  out << scatter_svg(points, background, options);
  if (!out) throw_bad_input("failed writing file", {{"path", path}});
}

}  // namespace mad

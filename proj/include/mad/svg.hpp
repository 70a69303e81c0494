#pragma once

// Minimal SVG scatter plots: a grey heat grid of reference samples with the
// endpoints drawn on top. Only the first two coordinates are plotted.

#include <string>
#include <vector>

#include "mad/types.hpp"

namespace mad {

struct SvgOptions {
  int width = 640;
  int height = 640;
  int bins = 80;
  double point_radius = 1.5;
  std::string title;
};

std::string scatter_svg(const std::vector<Vec>& points, const std::vector<Vec>& background, const SvgOptions& options);
void write_scatter_svg(const std::string& path, const std::vector<Vec>& points, const std::vector<Vec>& background,
                       const SvgOptions& options = {});

}  // namespace mad

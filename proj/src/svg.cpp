// Copyright 2026 The moralkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "moralkit/svg.hpp"

#include "moralkit/geometry.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace moralkit
{

namespace
{

struct Canvas
{
  const SvgOptions & opt;
  double margin = 40.0;

  double width() const { return (opt.y_max - opt.y_min) * opt.pixels_per_meter + 2.0 * margin; }
  double height() const { return (opt.x_max - opt.x_min) * opt.pixels_per_meter + 2.0 * margin; }
  // x forward maps to up, y left maps to left
  double px(double y) const { return margin + (opt.y_max - y) * opt.pixels_per_meter; }
  double py(double x) const { return margin + (opt.x_max - x) * opt.pixels_per_meter; }
};

std::string fmt(const char * pattern, double a)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, a);
  return buf;
}

std::string polygon(const Canvas & c, const Box3D & b, const char * color, double width)
{
  std::string pts;
  for (const auto & p : bev_corners(b)) {
    if (!pts.empty()) {
      pts += ' ';
    }
    pts += fmt("%.2f", c.px(p.y())) + "," + fmt("%.2f", c.py(p.x()));
  }
  return "<polygon points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
         fmt("%.1f", width) + "\"/>\n";
}

}  // namespace

std::string render_bev_svg(const BevScene & scene, const SvgOptions & options)
{
  const Canvas c{options};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt("%.0f", c.width()) << "\" height=\""
     << fmt("%.0f", c.height()) << "\" viewBox=\"0 0 " << fmt("%.0f", c.width()) << " " << fmt("%.0f", c.height())
     << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << fmt("%.0f", c.width()) << "\" height=\"" << fmt("%.0f", c.height())
     << "\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    os << "<text x=\"" << fmt("%.1f", c.margin) << "\" y=\"24\" font-family=\"monospace\" font-size=\"14\">"
       << options.title << "</text>\n";
  }
  // axes through the sensor origin, clamped into the view
  const double ox = std::clamp(0.0, options.x_min, options.x_max);
  const double oy = std::clamp(0.0, options.y_min, options.y_max);
  os << "<g stroke=\"#888\" stroke-width=\"1\">\n";
  os << "<line x1=\"" << fmt("%.2f", c.px(options.y_max)) << "\" y1=\"" << fmt("%.2f", c.py(ox)) << "\" x2=\""
     << fmt("%.2f", c.px(options.y_min)) << "\" y2=\"" << fmt("%.2f", c.py(ox)) << "\"/>\n";
  os << "<line x1=\"" << fmt("%.2f", c.px(oy)) << "\" y1=\"" << fmt("%.2f", c.py(options.x_min)) << "\" x2=\""
     << fmt("%.2f", c.px(oy)) << "\" y2=\"" << fmt("%.2f", c.py(options.x_max)) << "\"/>\n";
  os << "</g>\n";
  os << "<text x=\"" << fmt("%.2f", c.px(oy) + 4.0) << "\" y=\"" << fmt("%.2f", c.py(options.x_max) + 12.0)
     << "\" font-family=\"monospace\" font-size=\"10\">x</text>\n";
  os << "<text x=\"" << fmt("%.2f", c.px(options.y_max) + 2.0) << "\" y=\"" << fmt("%.2f", c.py(ox) - 4.0)
     << "\" font-family=\"monospace\" font-size=\"10\">y</text>\n";

  os << "<g>\n";
  for (std::size_t k = 0; k < scene.points.size(); ++k) {
    const auto & p = scene.points[k];
    if (p.x < options.x_min || p.x > options.x_max || p.y < options.y_min || p.y > options.y_max) {
      continue;
    }
    const bool moving = k < scene.moving.size() && scene.moving[k] != 0;
    os << "<circle cx=\"" << fmt("%.2f", c.px(p.y)) << "\" cy=\"" << fmt("%.2f", c.py(p.x)) << "\" r=\""
       << (moving ? "2.5" : "1.5") << "\" fill=\"" << (moving ? "#d62728" : "#555555") << "\"/>\n";
  }
  os << "</g>\n<g>\n";
  for (const auto & b : scene.ground_truth) {
    os << polygon(c, b, "#2ca02c", 2.0);
  }
  for (const auto & d : scene.detections) {
    os << polygon(c, d.box, "#1f77b4", 1.5);
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace moralkit

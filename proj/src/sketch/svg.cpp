#include "p2s/sketch/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace p2s::sketch {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string color(std::size_t k, std::size_t n, bool temporal) {
  if (!temporal) return "#000000";
  return "hsl(" + std::to_string(360 * k / std::max<std::size_t>(n, 1)) + ",80%,40%)";
}

struct Box {
  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
};

Box bounds(const std::vector<Polyline>& strokes) {
  Box b;
  for (const Polyline& s : strokes)
    for (const Vec2& p : s) {
      b.lo_x = std::min(b.lo_x, p.x);
      b.hi_x = std::max(b.hi_x, p.x);
      b.lo_y = std::min(b.lo_y, p.y);
      b.hi_y = std::max(b.hi_y, p.y);
    }
  if (strokes.empty()) b = {0.0, 0.0, 0.0, 0.0};
  return b;
}

// Strokes mapped into [x0, x0 + size] x [0, size] with a 5% margin.
void append_polylines(std::string& out, const std::vector<Polyline>& strokes, bool temporal, double x0, double size) {
  const Box b = bounds(strokes);
  const double extent = std::max({b.hi_x - b.lo_x, b.hi_y - b.lo_y, 1e-9});
  const double scale = 0.9 * size / extent;
  const double cx = 0.5 * (b.lo_x + b.hi_x), cy = 0.5 * (b.lo_y + b.hi_y);
  for (std::size_t k = 0; k < strokes.size(); ++k) {
    out += "  <polyline fill=\"none\" stroke=\"" + color(k, strokes.size(), temporal) +
           "\" stroke-width=\"2\" stroke-linecap=\"round\" stroke-linejoin=\"round\" points=\"";
    for (std::size_t i = 0; i < strokes[k].size(); ++i) {
      if (i) out += ' ';
      out += num(x0 + 0.5 * size + (strokes[k][i].x - cx) * scale) + "," +
             num(0.5 * size + (strokes[k][i].y - cy) * scale);
    }
    out += "\"/>\n";
  }
}

std::string header(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         num(w) + "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\">\n" +
         "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
}

}  // namespace

std::string export_svg(const StrokeSequence& seq, bool temporal_coloring) {
  return export_svg_panels({seq}, temporal_coloring);
}

std::string export_svg_panels(const std::vector<StrokeSequence>& seqs, bool temporal_coloring, double panel) {
  std::string out = header(panel * std::max<std::size_t>(seqs.size(), 1), panel);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    append_polylines(out, to_strokes(seqs[i]), temporal_coloring, panel * static_cast<double>(i), panel);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace p2s::sketch

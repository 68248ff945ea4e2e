#include "p2s/sketch/quickdraw.hpp"

#include <cmath>

#include "json.hpp"
#include "p2s/errors.hpp"

namespace p2s::sketch {

using nlohmann::json;

namespace {

double coord(const json& v, std::size_t line_no) {
  if (!v.is_number()) throw ParseError("coordinate is not a number", line_no);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError("coordinate is not finite", line_no);
  return d;
}

json number(double v) {
  if (v == std::floor(v) && std::abs(v) < 9.0e15) return static_cast<long long>(v);
  return v;
}

}  // namespace

QuickDrawRecord parse_quickdraw_record(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
  }
  if (!j.is_object() || !j.contains("drawing")) throw ParseError("record has no \"drawing\" array", line_no);
  const json& drawing = j["drawing"];
  if (!drawing.is_array()) throw ParseError("\"drawing\" is not an array", line_no);
  if (drawing.empty()) throw ParseError("empty drawing", line_no);

  std::vector<Polyline> strokes;
  for (const json& stroke : drawing) {
    if (!stroke.is_array() || stroke.size() < 2 || !stroke[0].is_array() || !stroke[1].is_array()) {
      throw ParseError("stroke is not an [xs, ys] pair", line_no);
    }
    const json& xs = stroke[0];
    const json& ys = stroke[1];
    if (xs.size() != ys.size()) throw ParseError("stroke has different x and y counts", line_no);
    if (xs.empty()) continue;
    Polyline pl;
    for (std::size_t i = 0; i < xs.size(); ++i) pl.push_back({coord(xs[i], line_no), coord(ys[i], line_no)});
    strokes.push_back(std::move(pl));
  }
  if (strokes.empty()) throw ParseError("empty drawing", line_no);

  QuickDrawRecord rec;
  if (j.contains("key_id")) rec.id = j["key_id"].is_string() ? j["key_id"].get<std::string>() : j["key_id"].dump();
  if (j.contains("word") && j["word"].is_string()) rec.word = j["word"].get<std::string>();
  rec.sketch = from_strokes(strokes);
  return rec;
}

StrokeSequence parse_quickdraw_line(std::string_view line, std::size_t line_no) {
  return parse_quickdraw_record(line, line_no).sketch;
}

std::vector<QuickDrawRecord> read_quickdraw(std::istream& in) {
  std::vector<QuickDrawRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    QuickDrawRecord rec = parse_quickdraw_record(line, line_no);
    if (rec.id.empty()) rec.id = "qd" + std::to_string(line_no);
    out.push_back(std::move(rec));
  }
  return out;
}

std::string to_quickdraw_line(const StrokeSequence& seq, std::string_view word) {
  json drawing = json::array();
  for (const Polyline& s : to_strokes(seq)) {
    json xs = json::array(), ys = json::array();
    for (const Vec2& p : s) {
      xs.push_back(number(p.x));
      ys.push_back(number(p.y));
    }
    drawing.push_back(json::array({xs, ys}));
  }
  json j;
  if (!word.empty()) j["word"] = std::string(word);
  j["drawing"] = drawing;
  return j.dump();
}

}  // namespace p2s::sketch

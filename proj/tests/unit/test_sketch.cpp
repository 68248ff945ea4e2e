#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "p2s/errors.hpp"
#include "p2s/rng.hpp"
#include "p2s/sketch/dataset.hpp"
#include "p2s/sketch/image_io.hpp"
#include "p2s/sketch/quickdraw.hpp"
#include "p2s/sketch/raster.hpp"
#include "p2s/sketch/simplify.hpp"
#include "p2s/sketch/svg.hpp"
#include "p2s/sketch/toy.hpp"

using namespace p2s;
using namespace p2s::sketch;
namespace fs = std::filesystem;

namespace {

// Textbook recursive Ramer-Douglas-Peucker, kept separate from the library's
// explicit-stack version.
void rdp_recursive(const Polyline& pts, std::size_t lo, std::size_t hi, double eps, std::vector<bool>& keep) {
  if (hi <= lo + 1) return;
  const Vec2 a = pts[lo], b = pts[hi];
  double best = -1.0;
  std::size_t at = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double len = std::hypot(ex, ey);
    const double d = len == 0.0 ? std::hypot(pts[i].x - a.x, pts[i].y - a.y)
                                : std::abs(ex * (pts[i].y - a.y) - ey * (pts[i].x - a.x)) / len;
    if (d > best) {
      best = d;
      at = i;
    }
  }
  if (best > eps) {
    keep[at] = true;
    rdp_recursive(pts, lo, at, eps, keep);
    rdp_recursive(pts, at, hi, eps, keep);
  }
}

Polyline rdp_oracle(const Polyline& pts, double eps) {
  if (pts.size() < 3) return pts;
  std::vector<bool> keep(pts.size(), false);
  keep.front() = keep.back() = true;
  rdp_recursive(pts, 0, pts.size() - 1, eps, keep);
  Polyline out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (keep[i]) out.push_back(pts[i]);
  return out;
}

Polyline random_walk(Rng& rng, int n) {
  Polyline p;
  double x = rng.uniform(0, 100), y = rng.uniform(0, 100);
  for (int i = 0; i < n; ++i) {
    x += rng.normal() * 5.0;
    y += rng.normal() * 5.0;
    p.push_back({x, y});
  }
  return p;
}

StrokeSequence random_sketch(Rng& rng, int strokes, int max_pts) {
  std::vector<Polyline> s;
  for (int k = 0; k < strokes; ++k) s.push_back(random_walk(rng, 1 + static_cast<int>(rng.below(max_pts))));
  return from_strokes(s);
}

int count(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("p2s_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("parse a single two-point stroke") {
  const StrokeSequence s = parse_quickdraw_line(R"({"drawing": [[[0, 10], [0, 0]]]})");
  CHECK(s.n_s == 2);
  REQUIRE(s.n_max() == 3);
  CHECK(s.points[0] == Point5{0, 0, 1, 0, 0});
  CHECK(s.points[1] == Point5{10, 0, 0, 1, 0});
  CHECK(s.points[2] == Point5::end_token());
  CHECK(check_sequence(s).empty());
}

TEST_CASE("second stroke starts with the offset from the previous stroke end") {
  const StrokeSequence s = parse_quickdraw_line(R"({"drawing": [[[0, 10], [0, 0]], [[12, 12, 20], [5, 8, 8]]]})");
  CHECK(s.n_s == 5);
  CHECK(s.points[2] == Point5{2, 5, 1, 0, 0});
  CHECK(s.points[3] == Point5{0, 3, 1, 0, 0});
  CHECK(s.points[4] == Point5{8, 0, 0, 1, 0});
}

TEST_CASE("quickdraw parse errors") {
  try {
    parse_quickdraw_line(R"({"drawing": []})", 4);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("empty drawing") != std::string::npos);
    CHECK(e.line() == 4);
  }
  std::istringstream in("{\"drawing\": [[[1,2],[3,4]]]}\n{\"drawing\": [[[1,2],[3,4]]\n");
  try {
    read_quickdraw(in);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).rfind("line 2: ", 0) == 0);
  }
  CHECK_THROWS_AS(parse_quickdraw_line(R"({"drawing": [[[1,2],[3]]]})"), ParseError);
  CHECK_THROWS_AS(parse_quickdraw_line(R"({"word": "cat"})"), ParseError);
}

TEST_CASE("parse then serialize reproduces absolute coordinates") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    nlohmann::json drawing = nlohmann::json::array();
    const int strokes = 1 + static_cast<int>(rng.below(5));
    for (int k = 0; k < strokes; ++k) {
      nlohmann::json xs = nlohmann::json::array(), ys = nlohmann::json::array();
      const int n = 1 + static_cast<int>(rng.below(12));
      for (int i = 0; i < n; ++i) {
        xs.push_back(static_cast<int>(rng.below(256)));
        ys.push_back(static_cast<int>(rng.below(256)));
      }
      drawing.push_back({xs, ys});
    }
    const std::string line = nlohmann::json{{"drawing", drawing}}.dump();
    const StrokeSequence s = parse_quickdraw_line(line);
    CHECK(check_sequence(s).empty());
    CHECK(nlohmann::json::parse(to_quickdraw_line(s))["drawing"] == drawing);
  }
}

TEST_CASE("rdp examples") {
  const Polyline collinear{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
  CHECK(rdp(collinear, 0.1) == Polyline{{0, 0}, {4, 4}});
  const Polyline corner{{0, 0}, {5, 5}, {10, 0}};  // corner is 5 from the chord
  CHECK(rdp(corner, 1.0) == corner);
  const StrokeSequence s = from_strokes({collinear, corner});
  CHECK(rdp_simplify(s, 0.0) == s);
  const StrokeSequence simple = rdp_simplify(s, 0.1);
  CHECK(simple.n_s == 5);
  CHECK(to_strokes(simple) == std::vector<Polyline>{{{0, 0}, {4, 4}}, corner});
  CHECK(simple.points[1].p2 == 1);
  CHECK(simple.points[4].p2 == 1);
}

TEST_CASE("rdp matches the recursive oracle on random polylines") {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const Polyline p = random_walk(rng, 50);
    const double eps = rng.uniform(0.5, 8.0);
    CHECK(rdp(p, eps) == rdp_oracle(p, eps));
  }
}

TEST_CASE("rdp_simplify is idempotent and keeps pen states valid") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const StrokeSequence s = random_sketch(rng, 1 + static_cast<int>(rng.below(4)), 30);
    const double eps = rng.uniform(0.5, 6.0);
    const StrokeSequence once = rdp_simplify(s, eps);
    CHECK(check_sequence(once).empty());
    // Offsets are re-derived from accumulated absolute positions, so real
    // coordinates may move by an ulp; structure must match exactly.
    const StrokeSequence twice = rdp_simplify(once, eps);
    REQUIRE(twice.n_s == once.n_s);
    REQUIRE(twice.n_max() == once.n_max());
    for (int i = 0; i < once.n_max(); ++i) {
      CHECK(twice.points[i].pen() == once.points[i].pen());
      CHECK(std::abs(twice.points[i].dx - once.points[i].dx) < 1e-9);
      CHECK(std::abs(twice.points[i].dy - once.points[i].dy) < 1e-9);
    }
    CHECK(to_strokes(once).size() == to_strokes(s).size());
  }
}

TEST_CASE("rdp_simplify is exactly idempotent on integer pixel sketches") {
  for (const std::string& line : make_toy_quickdraw(40, 11)) {
    const StrokeSequence s = parse_quickdraw_line(line);
    for (double eps : {1.0, 2.0, 5.0}) {
      const StrokeSequence once = rdp_simplify(s, eps);
      CHECK(rdp_simplify(once, eps) == once);
    }
  }
}

TEST_CASE("drop_short_strokes folds pen travel into the next stroke") {
  const StrokeSequence s = from_strokes({{{0, 0}, {10, 0}}, {{20, 20}, {20.5, 20}}, {{30, 0}, {30, 10}}});
  const StrokeSequence d = drop_short_strokes(s, 2.0);
  CHECK(to_strokes(d) == std::vector<Polyline>{{{0, 0}, {10, 0}}, {{30, 0}, {30, 10}}});
  CHECK(d.n_max() == s.n_max());
  CHECK(check_sequence(d).empty());
}

TEST_CASE("normalize_offsets") {
  DatasetSplit split;
  split.pairs.push_back({"a", {}, StrokeSequence::from_real({{2, -2, 0, 1, 0}})});
  const DatasetSplit n = normalize_offsets(split);
  CHECK(n.offset_std == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(n.pairs[0].sketch.points[0].dx == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(n.pairs[0].sketch.points[0].dy == doctest::Approx(-1.0).epsilon(1e-15));

  CHECK_THROWS_AS(normalize_offsets(DatasetSplit{}), DataError);
  DatasetSplit flat;
  flat.pairs.push_back({"z", {}, StrokeSequence::from_real({{0, 0, 1, 0, 0}, {0, 0, 0, 1, 0}})});
  try {
    normalize_offsets(flat);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("degenerate dataset") != std::string::npos);
  }
}

TEST_CASE("normalized training offsets have unit std and renormalizing is a fixed point") {
  Rng rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    DatasetSplit split;
    for (int i = 0; i < 8; ++i) split.pairs.push_back({std::to_string(i), {}, random_sketch(rng, 3, 10)});
    const DatasetSplit n = normalize_offsets(split);
    std::vector<StrokeSequence> seqs;
    for (const auto& p : n.pairs) seqs.push_back(p.sketch);
    CHECK(std::abs(offset_std(seqs) - 1.0) < 1e-9);
    const DatasetSplit again = normalize_offsets(n);
    for (std::size_t i = 0; i < n.pairs.size(); ++i)
      for (int j = 0; j < n.pairs[i].sketch.n_s; ++j) {
        CHECK(std::abs(again.pairs[i].sketch.points[j].dx - n.pairs[i].sketch.points[j].dx) < 1e-12);
        CHECK(std::abs(again.pairs[i].sketch.points[j].dy - n.pairs[i].sketch.points[j].dy) < 1e-12);
      }
  }
}

TEST_CASE("pad_to_max") {
  const StrokeSequence s = StrokeSequence::from_real({{1, 1, 1, 0, 0}, {1, 0, 1, 0, 0}, {0, 1, 0, 1, 0}});
  const StrokeSequence p = pad_to_max(s, 5);
  REQUIRE(p.n_max() == 5);
  CHECK(p.points[3] == Point5::end_token());
  CHECK(p.points[4] == Point5::end_token());
  CHECK(check_sequence(p).empty());
  const StrokeSequence exact = pad_to_max(s, 3);
  CHECK(exact.n_max() == 3);
  CHECK(exact.real_points() == s.real_points());
  CHECK(check_sequence(exact).empty());
  try {
    pad_to_max(s, 2);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("sequence too long") != std::string::npos);
  }
}

TEST_CASE("check_sequence rejects broken invariants") {
  StrokeSequence s = StrokeSequence::from_real({{1, 1, 1, 0, 0}, {1, 0, 0, 1, 0}});
  CHECK(check_sequence(s).empty());
  StrokeSequence two_bits = s;
  two_bits.points[0].p2 = 1;
  CHECK_FALSE(check_sequence(two_bits).empty());
  StrokeSequence early_end = s;
  early_end.points[0] = {1, 1, 0, 0, 1};
  CHECK_FALSE(check_sequence(early_end).empty());
  StrokeSequence after_end = s;
  after_end.n_s = 1;
  CHECK_FALSE(check_sequence(after_end).empty());
  StrokeSequence nan = s;
  nan.points[1].dx = std::nan("");
  CHECK_FALSE(check_sequence(nan).empty());
}

TEST_CASE("rasterize an empty or pen-up-only sketch gives a blank image") {
  const RasterImage blank = rasterize(StrokeSequence::from_real({}), 16);
  CHECK(blank.data == std::vector<double>(256, 0.0));
  const RasterImage dots = rasterize(StrokeSequence::from_real({{3, 3, 0, 1, 0}, {5, 1, 0, 1, 0}}), 16);
  CHECK(dots.data == std::vector<double>(256, 0.0));
}

TEST_CASE("horizontal stroke matches a scanline oracle") {
  const RasterImage img = rasterize(parse_quickdraw_line(R"({"drawing": [[[0, 10], [0, 0]]]})"), 16, 1);
  // Scanline oracle: 10% margins leave 0.8 * 15 = 12 px for the stroke,
  // centered on 7.5 so columns 1.5..13.5 round to 2..14 on row 8.
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) {
      INFO("r=" << r << " c=" << c);
      CHECK(img.at(r, c) == ((r == 8 && c >= 2 && c <= 14) ? 1.0 : 0.0));
    }
}

TEST_CASE("bresenham lines are connected, exact at endpoints and close to the ideal line") {
  Rng rng(25);
  for (int trial = 0; trial < 500; ++trial) {
    const int x0 = static_cast<int>(rng.below(41)) - 20, y0 = static_cast<int>(rng.below(41)) - 20;
    const int x1 = static_cast<int>(rng.below(41)) - 20, y1 = static_cast<int>(rng.below(41)) - 20;
    std::vector<std::pair<int, int>> px;
    bresenham(x0, y0, x1, y1, [&](int x, int y) { px.push_back({x, y}); });
    CHECK(px.front() == std::pair{x0, y0});
    CHECK(px.back() == std::pair{x1, y1});
    CHECK(px.size() == static_cast<std::size_t>(std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1));
    const double len = std::hypot(x1 - x0, y1 - y0);
    for (std::size_t i = 0; i < px.size(); ++i) {
      if (i) {
        CHECK(std::abs(px[i].first - px[i - 1].first) <= 1);
        CHECK(std::abs(px[i].second - px[i - 1].second) <= 1);
      }
      if (len > 0) {
        const double d = std::abs((x1 - x0) * (px[i].second - y0) - (y1 - y0) * (px[i].first - x0)) / len;
        CHECK(d <= 0.5 * std::sqrt(2.0) + 1e-12);
      }
    }
  }
}

TEST_CASE("rasterize is deterministic, binary and fits within the margin") {
  Rng rng(26);
  for (int trial = 0; trial < 20; ++trial) {
    const StrokeSequence s = random_sketch(rng, 3, 15);
    const RasterImage a = rasterize(s, 48, 1), b = rasterize(s, 48, 1);
    CHECK(a == b);
    int lo = 48, hi = -1;
    for (int r = 0; r < 48; ++r)
      for (int c = 0; c < 48; ++c) {
        const double v = a.at(r, c);
        CHECK((v == 0.0 || v == 1.0));
        if (v == 1.0) {
          lo = std::min({lo, r, c});
          hi = std::max({hi, r, c});
        }
      }
    CHECK(lo >= 4);
    CHECK(hi <= 43);
    const RasterImage thick = rasterize(s, 48, 3);
    for (std::size_t i = 0; i < a.data.size(); ++i)
      if (a.data[i] == 1.0) CHECK(thick.data[i] == 1.0);
  }
}

TEST_CASE("export_svg") {
  const StrokeSequence two = from_strokes({{{0, 0}, {10, 0}}, {{0, 5}, {10, 5}, {5, 9}}});
  const std::string svg = export_svg(two, false);
  CHECK(count(svg, "<polyline") == 2);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);

  const std::string empty = export_svg(StrokeSequence::from_real({}), true);
  CHECK(count(empty, "<polyline") == 0);
  CHECK(empty.find("<svg") != std::string::npos);
  CHECK(empty.find("</svg>") != std::string::npos);

  const StrokeSequence three = from_strokes({{{0, 0}, {1, 0}}, {{0, 1}, {1, 1}}, {{0, 2}, {1, 2}}});
  const std::string colored = export_svg(three, true);
  std::set<std::string> colors;
  for (std::size_t p = colored.find("stroke=\""); p != std::string::npos; p = colored.find("stroke=\"", p + 1)) {
    const std::size_t q = colored.find('"', p + 8);
    colors.insert(colored.substr(p + 8, q - p - 8));
  }
  CHECK(colors.size() == 3);

  CHECK(count(export_svg_panels({two, three, two}, true), "<polyline") == 7);
}

TEST_CASE("vector-raster pairs") {
  Rng rng(27);
  const StrokeSequence s = random_sketch(rng, 2, 10);
  const PhotoSketchPair p = make_vector_raster_pair(s, 48, "x");
  CHECK(p.photo == rasterize(s, 48, 1));
  CHECK(p.sketch == s);

  const auto lines = make_toy_quickdraw(100, 5);
  std::set<std::string> ids;
  std::size_t n = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const QuickDrawRecord rec = parse_quickdraw_record(lines[i], i + 1);
    const PhotoSketchPair pair = make_vector_raster_pair(rec.sketch, 48, rec.id);
    CHECK(check_sequence(pair.sketch).empty());
    ids.insert(pair.id);
    ++n;
  }
  CHECK(n == 100);
  CHECK(ids.size() == 100);
}

TEST_CASE("image files round-trip at 8-bit precision") {
  const fs::path dir = temp_dir("image");
  Rng rng(28);
  RasterImage gray = RasterImage::blank(7, 5);
  for (double& v : gray.data) v = static_cast<double>(rng.below(256)) / 255.0;
  write_image(dir / "g.pgm", gray);
  write_image(dir / "g.png", gray);
  CHECK(read_image(dir / "g.pgm") == gray);
  CHECK(read_image(dir / "g.png") == gray);

  RasterImage rgb = RasterImage::blank(3, 4, 3);
  for (double& v : rgb.data) v = static_cast<double>(rng.below(256)) / 255.0;
  write_image(dir / "c.png", rgb);
  CHECK(read_image(dir / "c.png") == rgb);

  std::ofstream(dir / "ascii.pgm") << "P2\n# comment\n2 1\n10\n0 10\n";
  const RasterImage ascii = read_image(dir / "ascii.pgm");
  CHECK(ascii.data == std::vector<double>{0.0, 1.0});
  std::ofstream(dir / "bad.pgm") << "P9\n";
  CHECK_THROWS_AS(read_image(dir / "bad.pgm"), ParseError);
  CHECK_THROWS_AS(read_image(dir / "missing.pgm"), DataError);
}

TEST_CASE("length percentile uses nearest rank") {
  CHECK(length_percentile({5, 1, 3, 2, 4}, 0.98) == 5);
  CHECK(length_percentile({5, 1, 3, 2, 4}, 0.5) == 3);
  std::vector<int> hundred(100);
  for (int i = 0; i < 100; ++i) hundred[i] = i + 1;
  CHECK(length_percentile(hundred, 0.98) == 98);
}

TEST_CASE("prepare, save and load a dataset") {
  const auto raw = make_toy_pairs(40, 3, 48);
  PreprocessOptions opts;
  const PreparedDataset data = prepare_dataset(raw, opts, toy_categories());
  CHECK(data.train.pairs.size() + data.valid.pairs.size() + data.dropped_empty + data.dropped_long == 40);
  CHECK(data.valid.pairs.size() >= 3);
  CHECK(data.manifest.n_max <= 96);
  CHECK(data.train.offset_std == data.manifest.offset_std);
  std::vector<StrokeSequence> seqs;
  for (const auto& p : data.train.pairs) {
    CHECK(p.sketch.n_max() == data.manifest.n_max);
    CHECK(p.sketch.n_s < p.sketch.n_max());
    CHECK(check_sequence(p.sketch).empty());
    seqs.push_back(p.sketch);
  }
  CHECK(std::abs(offset_std(seqs) - 1.0) < 1e-9);

  const fs::path dir = temp_dir("dataset");
  save_dataset(dir, data);
  const Manifest m = load_manifest(dir);
  CHECK(m.n_max == data.manifest.n_max);
  CHECK(m.offset_std == data.manifest.offset_std);
  CHECK(m.labels == toy_categories());
  const DatasetSplit train = load_split(dir, "train");
  REQUIRE(train.pairs.size() == data.train.pairs.size());
  for (std::size_t i = 0; i < train.pairs.size(); ++i) {
    CHECK(train.pairs[i].id == data.train.pairs[i].id);
    CHECK(train.pairs[i].sketch == data.train.pairs[i].sketch);
    CHECK(train.pairs[i].label == data.train.pairs[i].label);
    for (std::size_t j = 0; j < train.pairs[i].photo.data.size(); ++j)
      CHECK(std::abs(train.pairs[i].photo.data[j] - data.train.pairs[i].photo.data[j]) <= 0.5 / 255 + 1e-12);
  }

  auto dup = raw;
  dup[1].id = dup[0].id;
  CHECK_THROWS_AS(prepare_dataset(dup, opts), DataError);
}

TEST_CASE("prepare_dataset caps lengths and builds vector-raster pairs for photo-less input") {
  std::vector<PhotoSketchPair> raw;
  Rng rng(29);
  for (int i = 0; i < 30; ++i) {
    PhotoSketchPair p;
    p.id = "q" + std::to_string(i);
    p.sketch = random_sketch(rng, 2, 30);
    raw.push_back(p);
  }
  PreprocessOptions opts;
  opts.max_len = 12;
  opts.rdp_epsilon = 0.5;
  const PreparedDataset d = prepare_dataset(raw, opts);
  CHECK(d.manifest.n_max == 12);
  CHECK(d.dropped_long > 0);
  for (const auto& p : d.train.pairs) {
    CHECK(p.photo == rasterize(p.sketch, opts.image_size, 1));
    CHECK(p.sketch.n_max() == 12);
  }
}

TEST_CASE("toy pairs are valid, labeled and reproducible") {
  const auto a = make_toy_pairs(12, 9, 48);
  const auto b = make_toy_pairs(12, 9, 48);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].sketch == b[i].sketch);
    CHECK(a[i].photo == b[i].photo);
    CHECK(a[i].label == static_cast<int>(i % toy_categories().size()));
    CHECK(check_sequence(a[i].sketch).empty());
    CHECK_NOTHROW(require_valid(a[i].photo));
  }
  CHECK(make_toy_pairs(12, 10, 48)[0].sketch != a[0].sketch);
}

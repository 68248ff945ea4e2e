#include "p2s/sketch/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "p2s/errors.hpp"
#include "p2s/sketch/image_io.hpp"
#include "p2s/sketch/simplify.hpp"

namespace p2s::sketch {

namespace fs = std::filesystem;
using nlohmann::json;

double offset_std(const std::vector<StrokeSequence>& seqs) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : seqs)
    for (int i = 0; i < s.n_s; ++i) {
      sum += s.points[i].dx + s.points[i].dy;
      n += 2;
    }
  if (n == 0) throw DataError("no offsets to measure");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& s : seqs)
    for (int i = 0; i < s.n_s; ++i) {
      ss += (s.points[i].dx - mean) * (s.points[i].dx - mean);
      ss += (s.points[i].dy - mean) * (s.points[i].dy - mean);
    }
  return std::sqrt(ss / static_cast<double>(n));
}

DatasetSplit apply_offset_std(DatasetSplit split, double std) {
  if (!(std > 0.0) || !std::isfinite(std)) throw DataError("offset std must be positive and finite");
  for (auto& p : split.pairs) p.sketch = scale_offsets(p.sketch, 1.0 / std);
  split.offset_std = std;
  return split;
}

DatasetSplit normalize_offsets(DatasetSplit split) {
  if (split.pairs.empty()) throw DataError("cannot normalize an empty split");
  std::vector<StrokeSequence> seqs;
  seqs.reserve(split.pairs.size());
  for (const auto& p : split.pairs) seqs.push_back(p.sketch);
  const double std = offset_std(seqs);
  if (!(std > 0.0)) throw DataError("degenerate dataset: offset std is zero");
  return apply_offset_std(std::move(split), std);
}

PhotoSketchPair make_vector_raster_pair(const StrokeSequence& seq, int side, std::string id) {
  return {std::move(id), rasterize(seq, side, 1), seq, -1};
}

int length_percentile(std::vector<int> lengths, double q) {
  if (lengths.empty()) throw DataError("no lengths");
  std::sort(lengths.begin(), lengths.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(lengths.size())));
  return lengths[std::clamp<std::size_t>(rank, 1, lengths.size()) - 1];
}

PreparedDataset prepare_dataset(std::vector<PhotoSketchPair> raw, const PreprocessOptions& opts,
                                std::vector<std::string> labels) {
  PreparedDataset out;
  std::set<std::string> ids;
  std::vector<PhotoSketchPair> kept;
  for (auto& p : raw) {
    if (!ids.insert(p.id).second) throw DataError("duplicate pair id '" + p.id + "'");
    StrokeSequence s = drop_short_strokes(p.sketch, opts.min_stroke_length);
    s = rdp_simplify(s, opts.rdp_epsilon);
    s = StrokeSequence::from_real(s.real_points());
    if (segment_count(s) == 0) {
      ++out.dropped_empty;
      continue;
    }
    p.sketch = std::move(s);
    if (p.photo.empty()) {
      p.photo = rasterize(p.sketch, opts.image_size, 1);
    } else if (p.photo.channels != 1 || p.photo.height != opts.image_size || p.photo.width != opts.image_size) {
      p.photo = resize(to_grayscale(p.photo), opts.image_size, opts.image_size);
    }
    kept.push_back(std::move(p));
  }
  if (kept.empty()) throw DataError("no sketches left after preprocessing");

  std::vector<int> lengths;
  for (const auto& p : kept) lengths.push_back(p.sketch.n_max());
  const int n_max = std::min(opts.max_len, length_percentile(lengths, opts.length_percentile));

  std::size_t index = 0;
  for (auto& p : kept) {
    if (p.sketch.n_max() > n_max) {
      ++out.dropped_long;
      continue;
    }
    p.sketch = pad_to_max(p.sketch, n_max);
    const bool to_valid = opts.valid_every > 0 && index % opts.valid_every == static_cast<std::size_t>(opts.valid_every - 1);
    (to_valid ? out.valid : out.train).pairs.push_back(std::move(p));
    ++index;
  }
  out.train = normalize_offsets(std::move(out.train));
  out.valid = apply_offset_std(std::move(out.valid), out.train.offset_std);
  out.manifest = {out.train.offset_std, n_max, opts.image_size, std::move(labels)};
  return out;
}

namespace {

void write_split(const fs::path& dir, const std::string& name, const DatasetSplit& split) {
  std::ofstream out(dir / (name + ".jsonl"));
  if (!out) throw DataError("cannot write " + (dir / (name + ".jsonl")).string());
  for (const auto& p : split.pairs) {
    const std::string photo = "photos/" + p.id + ".pgm";
    write_image(dir / photo, p.photo);
    json pts = json::array();
    for (int i = 0; i < p.sketch.n_s; ++i) {
      const Point5& q = p.sketch.points[i];
      pts.push_back(json::array({q.dx, q.dy, q.p1, q.p2, q.p3}));
    }
    json line = {{"id", p.id}, {"photo", photo}, {"sketch", pts}};
    if (p.label >= 0) line["label"] = p.label;
    out << line.dump() << "\n";
  }
}

}  // namespace

void save_dataset(const fs::path& dir, const PreparedDataset& data) {
  fs::create_directories(dir / "photos");
  const Manifest& m = data.manifest;
  std::ofstream(dir / "manifest.json") << json{{"offset_std", m.offset_std},
                                               {"n_max", m.n_max},
                                               {"image_size", m.image_size},
                                               {"labels", m.labels}}
                                              .dump(2)
                                       << "\n";
  write_split(dir, "train", data.train);
  write_split(dir, "valid", data.valid);
}

Manifest load_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("missing " + (dir / "manifest.json").string());
  try {
    const json j = json::parse(in);
    Manifest m;
    m.offset_std = j.at("offset_std").get<double>();
    m.n_max = j.at("n_max").get<int>();
    m.image_size = j.value("image_size", 0);
    m.labels = j.value("labels", std::vector<std::string>{});
    if (m.n_max <= 0 || !(m.offset_std > 0.0)) throw DataError("manifest values out of range");
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad manifest: ") + e.what());
  }
}

DatasetSplit load_split(const fs::path& dir, const std::string& name) {
  const Manifest m = load_manifest(dir);
  const fs::path file = dir / (name + ".jsonl");
  std::ifstream in(file);
  if (!in) throw DataError("missing " + file.string());
  DatasetSplit split;
  split.offset_std = m.offset_std;
  std::set<std::string> ids;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    PhotoSketchPair p;
    try {
      const json j = json::parse(text);
      p.id = j.at("id").get<std::string>();
      std::vector<Point5> pts;
      for (const json& q : j.at("sketch")) {
        if (!q.is_array() || q.size() != 5) throw ParseError("sketch point is not a 5-tuple", line_no);
        pts.push_back({q[0].get<double>(), q[1].get<double>(), q[2].get<int>(), q[3].get<int>(), q[4].get<int>()});
      }
      p.sketch = pad_to_max(StrokeSequence::from_real(std::move(pts)), m.n_max);
      p.photo = read_image(dir / j.at("photo").get<std::string>());
      p.label = j.value("label", -1);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad pair record: ") + e.what(), line_no);
    }
    require_valid(p.sketch);
    if (!ids.insert(p.id).second) throw DataError("duplicate pair id '" + p.id + "' in " + file.string());
    split.pairs.push_back(std::move(p));
  }
  return split;
}

}  // namespace p2s::sketch

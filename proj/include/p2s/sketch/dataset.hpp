#pragma once

// Photo-sketch pairs and their on-disk layout:
//
//   <dir>/manifest.json   {"offset_std": s, "n_max": n, "image_size": side, "labels": [...]}
//   <dir>/train.jsonl     one pair per line
//   <dir>/valid.jsonl
//   <dir>/photos/<id>.pgm
//
// A pair line is {"id": ..., "photo": "photos/<id>.pgm", "sketch": [[dx,dy,p1,p2,p3], ...],
// "label": k}, where the sketch lists real points only (normalized offsets)
// and "label" is optional.

#include <filesystem>
#include <string>
#include <vector>

#include "p2s/sketch/raster.hpp"
#include "p2s/sketch/stroke.hpp"

namespace p2s::sketch {

struct PhotoSketchPair {
  std::string id;
  RasterImage photo;
  StrokeSequence sketch;
  int label = -1;  // -1 when unlabeled
};

struct DatasetSplit {
  std::vector<PhotoSketchPair> pairs;
  double offset_std = 1.0;
};

struct Manifest {
  double offset_std = 1.0;
  int n_max = 0;
  int image_size = 0;
  std::vector<std::string> labels;
};

/// Population standard deviation of all dx and dy values (pooled) over the
/// real points of every sketch. Throws DataError on an empty pool.
double offset_std(const std::vector<StrokeSequence>& seqs);

/// Divides every offset by the split's pooled offset std and records it.
/// Throws DataError for an empty split or "degenerate dataset" on zero std.
DatasetSplit normalize_offsets(DatasetSplit split);

/// Divides every offset by an already known std (validation/test splits).
DatasetSplit apply_offset_std(DatasetSplit split, double std);

/// The pair's photo is rasterize(seq, side, 1) and its sketch is seq.
PhotoSketchPair make_vector_raster_pair(const StrokeSequence& seq, int side, std::string id);

struct PreprocessOptions {
  double min_stroke_length = 2.0;  // in input units, before normalization
  double rdp_epsilon = 2.0;        // in input units
  int max_len = 96;                // cap on n_max
  double length_percentile = 0.98;
  int valid_every = 10;            // every k-th kept pair goes to validation
  int image_size = 48;
};

struct PreparedDataset {
  DatasetSplit train;
  DatasetSplit valid;
  Manifest manifest;
  std::size_t dropped_empty = 0;
  std::size_t dropped_long = 0;
};

/// Stroke removal, RDP, length cap, split and normalization. Pairs with an
/// empty photo become vector-raster pairs. Photos of other sizes are resized.
/// Sequences come out padded to the manifest n_max (at least n_s + 1 each).
PreparedDataset prepare_dataset(std::vector<PhotoSketchPair> raw, const PreprocessOptions& opts,
                                std::vector<std::string> labels = {});

/// Nearest-rank percentile of the lengths (q in (0, 1]).
int length_percentile(std::vector<int> lengths, double q);

void save_dataset(const std::filesystem::path& dir, const PreparedDataset& data);
Manifest load_manifest(const std::filesystem::path& dir);

/// Loads "<dir>/<name>.jsonl", padding sketches to the manifest n_max.
/// Duplicate ids are rejected.
DatasetSplit load_split(const std::filesystem::path& dir, const std::string& name);

}  // namespace p2s::sketch

#pragma once

// QuickDraw ndjson records: {"key_id": ..., "word": ..., "drawing": [[xs, ys], ...]}
// with absolute integer pixel coordinates per stroke.

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "p2s/sketch/stroke.hpp"

namespace p2s::sketch {

struct QuickDrawRecord {
  std::string id;    // "key_id" when present
  std::string word;  // category name, may be empty
  StrokeSequence sketch;
};

/// `line_no` is only used to prefix error messages.
QuickDrawRecord parse_quickdraw_record(std::string_view line, std::size_t line_no = 0);

/// Offsets in the original pixel units, pen-lift on each stroke's last point,
/// one end token appended.
StrokeSequence parse_quickdraw_line(std::string_view line, std::size_t line_no = 0);

/// Reads every non-blank line. Records missing a key_id get "qd<line>".
std::vector<QuickDrawRecord> read_quickdraw(std::istream& in);

/// Serializes back to absolute coordinates. Integral values are written as
/// integers, so parse followed by this reproduces the original drawing.
std::string to_quickdraw_line(const StrokeSequence& seq, std::string_view word = {});

}  // namespace p2s::sketch

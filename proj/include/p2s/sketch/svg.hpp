#pragma once

#include <string>
#include <vector>

#include "p2s/sketch/stroke.hpp"

namespace p2s::sketch {

/// SVG 1.1 document with one <polyline> per stroke. With temporal coloring
/// stroke k of n gets hue 360*k/n; otherwise every stroke is black.
std::string export_svg(const StrokeSequence& seq, bool temporal_coloring);

/// Several sketches side by side in one document, each scaled into its own
/// square panel of `panel` user units.
std::string export_svg_panels(const std::vector<StrokeSequence>& seqs, bool temporal_coloring, double panel = 200.0);

}  // namespace p2s::sketch

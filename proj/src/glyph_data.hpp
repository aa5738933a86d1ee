#pragma once

#include <utility>
#include <vector>

namespace pipecam::detail {

// Fixed stroke skeletons on a 7x7 control grid (x right, y down, 0..6).
// Order: digits 0-9, upper-case A-Z, then the lower-case subset
// a b d e f g h n q r t (47 classes total). The templates are versioned
// data: changing them changes every generated dataset.
using GlyphPoint = std::pair<float, float>;
using GlyphStroke = std::vector<GlyphPoint>;

struct GlyphTemplate {
  char name;
  std::vector<GlyphStroke> strokes;
};

const std::vector<GlyphTemplate>& glyph_templates();

}  // namespace pipecam::detail

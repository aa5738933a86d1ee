#include "glyph_data.hpp"

namespace pipecam::detail {

const std::vector<GlyphTemplate>& glyph_templates() {
  static const std::vector<GlyphTemplate> kTemplates = {
      {'0', {{{2, 0}, {4, 0}, {5, 1}, {5, 5}, {4, 6}, {2, 6}, {1, 5}, {1, 1}, {2, 0}}}},
      {'1', {{{2, 1}, {3, 0}, {3, 6}}, {{2, 6}, {4, 6}}}},
      {'2', {{{1, 1}, {2, 0}, {4, 0}, {5, 1}, {5, 2}, {1, 6}, {5, 6}}}},
      {'3', {{{1, 0}, {4, 0}, {5, 1}, {5, 2}, {3, 3}, {5, 4}, {5, 5}, {4, 6}, {1, 6}}}},
      {'4', {{{4, 6}, {4, 0}, {1, 4}, {5, 4}}}},
      {'5', {{{5, 0}, {1, 0}, {1, 3}, {4, 3}, {5, 4}, {5, 5}, {4, 6}, {1, 6}}}},
      {'6', {{{4, 0}, {2, 1}, {1, 3}, {1, 5}, {2, 6}, {4, 6}, {5, 5}, {5, 4}, {4, 3}, {2, 3}, {1, 4}}}},
      {'7', {{{1, 0}, {5, 0}, {2, 6}}}},
      {'8', {{{3, 3}, {1, 2}, {1, 1}, {2, 0}, {4, 0}, {5, 1}, {5, 2}, {3, 3}, {1, 4}, {1, 5}, {2, 6}, {4, 6}, {5, 5}, {5, 4}, {3, 3}}}},
      {'9', {{{5, 3}, {2, 3}, {1, 2}, {1, 1}, {2, 0}, {4, 0}, {5, 1}, {5, 5}, {4, 6}, {2, 6}}}},
      {'A', {{{1, 6}, {3, 0}, {5, 6}}, {{2, 4}, {4, 4}}}},
      {'B', {{{1, 0}, {1, 6}}, {{1, 0}, {4, 0}, {5, 1}, {5, 2}, {4, 3}, {1, 3}}, {{4, 3}, {5, 4}, {5, 5}, {4, 6}, {1, 6}}}},
      {'C', {{{5, 1}, {4, 0}, {2, 0}, {1, 1}, {1, 5}, {2, 6}, {4, 6}, {5, 5}}}},
      {'D', {{{1, 0}, {1, 6}}, {{1, 0}, {3, 0}, {5, 2}, {5, 4}, {3, 6}, {1, 6}}}},
      {'E', {{{5, 0}, {1, 0}, {1, 6}, {5, 6}}, {{1, 3}, {4, 3}}}},
      {'F', {{{5, 0}, {1, 0}, {1, 6}}, {{1, 3}, {4, 3}}}},
      {'G', {{{5, 1}, {4, 0}, {2, 0}, {1, 1}, {1, 5}, {2, 6}, {4, 6}, {5, 5}, {5, 3}, {3, 3}}}},
      {'H', {{{1, 0}, {1, 6}}, {{5, 0}, {5, 6}}, {{1, 3}, {5, 3}}}},
      {'I', {{{2, 0}, {4, 0}}, {{3, 0}, {3, 6}}, {{2, 6}, {4, 6}}}},
      {'J', {{{5, 0}, {5, 5}, {4, 6}, {2, 6}, {1, 5}}}},
      {'K', {{{1, 0}, {1, 6}}, {{5, 0}, {1, 3}, {5, 6}}}},
      {'L', {{{1, 0}, {1, 6}, {5, 6}}}},
      {'M', {{{1, 6}, {1, 0}, {3, 3}, {5, 0}, {5, 6}}}},
      {'N', {{{1, 6}, {1, 0}, {5, 6}, {5, 0}}}},
      {'O', {{{2, 0}, {4, 0}, {5, 2}, {5, 4}, {4, 6}, {2, 6}, {1, 4}, {1, 2}, {2, 0}}}},
      {'P', {{{1, 6}, {1, 0}, {4, 0}, {5, 1}, {5, 2}, {4, 3}, {1, 3}}}},
      {'Q', {{{2, 0}, {4, 0}, {5, 2}, {5, 4}, {4, 6}, {2, 6}, {1, 4}, {1, 2}, {2, 0}}, {{3, 4}, {5, 6}}}},
      {'R', {{{1, 6}, {1, 0}, {4, 0}, {5, 1}, {5, 2}, {4, 3}, {1, 3}}, {{2, 3}, {5, 6}}}},
      {'S', {{{5, 1}, {4, 0}, {2, 0}, {1, 1}, {1, 2}, {2, 3}, {4, 3}, {5, 4}, {5, 5}, {4, 6}, {2, 6}, {1, 5}}}},
      {'T', {{{1, 0}, {5, 0}}, {{3, 0}, {3, 6}}}},
      {'U', {{{1, 0}, {1, 5}, {2, 6}, {4, 6}, {5, 5}, {5, 0}}}},
      {'V', {{{1, 0}, {3, 6}, {5, 0}}}},
      {'W', {{{1, 0}, {2, 6}, {3, 2}, {4, 6}, {5, 0}}}},
      {'X', {{{1, 0}, {5, 6}}, {{5, 0}, {1, 6}}}},
      {'Y', {{{1, 0}, {3, 3}, {5, 0}}, {{3, 3}, {3, 6}}}},
      {'Z', {{{1, 0}, {5, 0}, {1, 6}, {5, 6}}}},
      {'a', {{{1, 3}, {2, 2}, {4, 2}, {5, 3}, {5, 6}}, {{5, 4}, {2, 4}, {1, 5}, {2, 6}, {5, 6}}}},
      {'b', {{{1, 0}, {1, 6}}, {{1, 3}, {3, 2}, {5, 3}, {5, 5}, {3, 6}, {1, 5}}}},
      {'d', {{{5, 0}, {5, 6}}, {{5, 3}, {3, 2}, {1, 3}, {1, 5}, {3, 6}, {5, 5}}}},
      {'e', {{{1, 4}, {5, 4}, {5, 3}, {4, 2}, {2, 2}, {1, 3}, {1, 5}, {2, 6}, {4, 6}}}},
      {'f', {{{5, 1}, {4, 0}, {3, 1}, {3, 6}}, {{2, 2}, {4, 2}}}},
      {'g', {{{5, 2}, {2, 2}, {1, 3}, {2, 4}, {5, 4}}, {{5, 2}, {5, 5}, {4, 6}, {2, 6}, {1, 5}}}},
      {'h', {{{1, 0}, {1, 6}}, {{1, 3}, {3, 2}, {5, 3}, {5, 6}}}},
      {'n', {{{1, 2}, {1, 6}}, {{1, 3}, {3, 2}, {5, 3}, {5, 6}}}},
      {'q', {{{5, 2}, {5, 6}}, {{5, 3}, {3, 2}, {1, 3}, {1, 5}, {3, 6}, {5, 5}}}},
      {'r', {{{1, 2}, {1, 6}}, {{1, 3}, {3, 2}, {5, 2}}}},
      {'t', {{{3, 0}, {3, 5}, {4, 6}, {5, 5}}, {{1, 2}, {5, 2}}}},
  };
  return kTemplates;
}

}  // namespace pipecam::detail

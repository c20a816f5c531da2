#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "attnlab/codecharts.hpp"
#include "attnlab/core/io.hpp"

namespace attnlab::codecharts {

namespace detail {

// 5x7 bitmap glyphs; bit 4 is the leftmost column.
inline const std::array<std::uint8_t, 7>* glyph_rows(char c) {
  static const std::array<std::array<std::uint8_t, 7>, 26> letters = {{
      {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
      {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E},
      {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
      {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
      {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
      {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
      {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
      {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
      {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
      {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},
  }};
  static const std::array<std::array<std::uint8_t, 7>, 10> digits = {{
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
  }};
  if (c >= 'A' && c <= 'Z') return &letters[static_cast<std::size_t>(c - 'A')];
  if (c >= '0' && c <= '9') return &digits[static_cast<std::size_t>(c - '0')];
  return nullptr;
}

}  // namespace detail

/// Rasterize a chart as black glyphs on white; returns an 8-bit grayscale PNG.
inline std::string render_png(const CodeChart& chart) {
  const std::size_t w = chart.params.window_w;
  const std::size_t h = chart.params.window_h;
  std::vector<std::uint16_t> pixels(w * h, 255);
  const double gw = chart.params.glyph.glyph_w;
  const double gh = chart.params.glyph.glyph_h;
  // scale the 5x7 bitmap into the glyph cell, leaving a one-unit margin
  const double sx = gw / 6.0;
  const double sy = gh / 8.0;
  for (const auto& t : chart.placements) {
    for (std::size_t k = 0; k < t.code.size(); ++k) {
      const double ox = t.bbox.x + static_cast<double>(k) * gw + sx / 2.0;
      const double oy = t.bbox.y + sy / 2.0;
      const auto* rows = detail::glyph_rows(t.code[k]);
      for (int r = 0; r < 7; ++r) {
        for (int c = 0; c < 5; ++c) {
          bool on = rows ? ((*rows)[static_cast<std::size_t>(r)] >> (4 - c)) & 1 : true;
          if (!on) continue;
          auto x0 = static_cast<long>(std::floor(ox + c * sx));
          auto x1 = static_cast<long>(std::floor(ox + (c + 1) * sx));
          auto y0 = static_cast<long>(std::floor(oy + r * sy));
          auto y1 = static_cast<long>(std::floor(oy + (r + 1) * sy));
          for (long y = y0; y < y1; ++y) {
            for (long x = x0; x < x1; ++x) {
              if (x >= 0 && y >= 0 && x < static_cast<long>(w) && y < static_cast<long>(h)) {
                pixels[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = 0;
              }
            }
          }
        }
      }
    }
  }
  return png::encode_gray(w, h, pixels, 8);
}

}  // namespace attnlab::codecharts

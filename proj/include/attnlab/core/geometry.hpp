#pragma once

#include <algorithm>
#include <cstddef>

#include "attnlab/core/error.hpp"
#include "attnlab/core/types.hpp"

namespace attnlab {

inline constexpr std::size_t kDefaultWindowWidth = 1000;
inline constexpr std::size_t kDefaultWindowHeight = 700;

/// Uniform scale plus centering offsets taking image pixels to display-window pixels.
struct WindowMapping {
  double scale = 1.0;
  double pad_left = 0.0;
  double pad_top = 0.0;
  std::size_t window_w = kDefaultWindowWidth;
  std::size_t window_h = kDefaultWindowHeight;
  std::size_t image_w = kDefaultWindowWidth;
  std::size_t image_h = kDefaultWindowHeight;

  Point to_window(Point image) const noexcept {
    return {image.x * scale + pad_left, image.y * scale + pad_top};
  }
  Point to_image(Point window) const noexcept {
    return {(window.x - pad_left) / scale, (window.y - pad_top) / scale};
  }
  /// True when a window point falls on the displayed image rather than the padding.
  bool on_image(Point window) const noexcept {
    Point p = to_image(window);
    return p.x >= 0.0 && p.y >= 0.0 && p.x < static_cast<double>(image_w) &&
           p.y < static_cast<double>(image_h);
  }

  static WindowMapping identity(std::size_t w, std::size_t h) {
    return {1.0, 0.0, 0.0, w, h, w, h};
  }
};

/// Scale an image into a window without upscaling past max_scale, centered.
inline WindowMapping fit_to_window(std::size_t image_w, std::size_t image_h,
                                   std::size_t window_w = kDefaultWindowWidth,
                                   std::size_t window_h = kDefaultWindowHeight,
                                   double max_scale = 1.0) {
  if (image_w < 1 || image_h < 1 || window_w < 1 || window_h < 1) {
    throw ParameterError("fit_to_window needs positive image and window dimensions");
  }
  if (!(max_scale > 0.0)) throw ParameterError("max_scale must be positive");
  double scale = std::min({static_cast<double>(window_w) / static_cast<double>(image_w),
                           static_cast<double>(window_h) / static_cast<double>(image_h),
                           max_scale});
  WindowMapping m;
  m.scale = scale;
  m.window_w = window_w;
  m.window_h = window_h;
  m.image_w = image_w;
  m.image_h = image_h;
  m.pad_left = (static_cast<double>(window_w) - scale * static_cast<double>(image_w)) / 2.0;
  m.pad_top = (static_cast<double>(window_h) - scale * static_cast<double>(image_h)) / 2.0;
  return m;
}

inline WindowMapping fit_to_window(const Stimulus& s, std::size_t window_w = kDefaultWindowWidth,
                                   std::size_t window_h = kDefaultWindowHeight,
                                   double max_scale = 1.0) {
  return fit_to_window(s.width_px, s.height_px, window_w, window_h, max_scale);
}

}  // namespace attnlab

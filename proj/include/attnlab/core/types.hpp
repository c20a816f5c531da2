#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "attnlab/core/error.hpp"
#include "attnlab/core/grid.hpp"

namespace attnlab {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Axis-aligned rectangle in pixel units; covers [x, x+w) x [y, y+h).
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  bool contains(Point p) const noexcept {
    return p.x >= x && p.x < x + w && p.y >= y && p.y < y + h;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Pixel index range [begin, end) whose centers fall inside [lo, lo + extent).
struct PixelSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline PixelSpan pixel_span(double lo, double extent, std::size_t limit) {
  // pixel i has center i + 0.5; inside iff lo <= i + 0.5 < lo + extent
  double first = std::ceil(lo - 0.5);
  double last = std::ceil(lo + extent - 0.5);  // exclusive
  first = std::clamp(first, 0.0, static_cast<double>(limit));
  last = std::clamp(last, 0.0, static_cast<double>(limit));
  if (last < first) last = first;
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

// ---------------------------------------------------------------------------
// Enumerations with their wire names.

enum class StimulusKind { natural, graphic_design, resume, infographic, visualization, validation };

enum class Provenance { zoommaps, codecharts, importannots, bubbleview, eyetracking, synthetic };

enum class Interface { zoommaps, codecharts, importannots, bubbleview };

namespace detail {

template <typename E, std::size_t N>
std::string_view enum_name(E value, const std::array<std::string_view, N>& names) {
  return names.at(static_cast<std::size_t>(value));
}

template <typename E, std::size_t N>
E enum_parse(std::string_view text, const std::array<std::string_view, N>& names,
             std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  throw ParameterError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

inline constexpr std::array<std::string_view, 6> kStimulusKindNames = {
    "natural", "graphic_design", "resume", "infographic", "visualization", "validation"};
inline constexpr std::array<std::string_view, 6> kProvenanceNames = {
    "zoommaps", "codecharts", "importannots", "bubbleview", "eyetracking", "synthetic"};
inline constexpr std::array<std::string_view, 4> kInterfaceNames = {
    "zoommaps", "codecharts", "importannots", "bubbleview"};

}  // namespace detail

inline std::string_view to_string(StimulusKind k) {
  return detail::enum_name(k, detail::kStimulusKindNames);
}
inline std::string_view to_string(Provenance p) {
  return detail::enum_name(p, detail::kProvenanceNames);
}
inline std::string_view to_string(Interface i) {
  return detail::enum_name(i, detail::kInterfaceNames);
}
inline StimulusKind parse_stimulus_kind(std::string_view s) {
  return detail::enum_parse<StimulusKind>(s, detail::kStimulusKindNames, "stimulus kind");
}
inline Provenance parse_provenance(std::string_view s) {
  return detail::enum_parse<Provenance>(s, detail::kProvenanceNames, "provenance");
}
inline Interface parse_interface(std::string_view s) {
  return detail::enum_parse<Interface>(s, detail::kInterfaceNames, "interface");
}

inline Provenance provenance_of(Interface i) {
  switch (i) {
    case Interface::zoommaps: return Provenance::zoommaps;
    case Interface::codecharts: return Provenance::codecharts;
    case Interface::importannots: return Provenance::importannots;
    case Interface::bubbleview: return Provenance::bubbleview;
  }
  return Provenance::synthetic;
}

// ---------------------------------------------------------------------------
// Element regions.

using Polygon = std::vector<Point>;

struct ElementRegion {
  std::string id;
  std::string label;
  std::variant<Rect, Polygon> shape;
};

namespace detail {

// Even-odd rule.
inline bool polygon_contains(const Polygon& poly, Point p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      double cross_x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < cross_x) inside = !inside;
    }
  }
  return inside;
}

inline double polygon_area(const Polygon& poly) {
  double twice = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    twice += (poly[j].x + poly[i].x) * (poly[j].y - poly[i].y);
  }
  return std::abs(twice) / 2.0;
}

}  // namespace detail

inline Rect bounding_box(const ElementRegion& region) {
  if (const auto* r = std::get_if<Rect>(&region.shape)) return *r;
  const auto& poly = std::get<Polygon>(region.shape);
  if (poly.empty()) return {};
  double x0 = poly.front().x, x1 = x0, y0 = poly.front().y, y1 = y0;
  for (const auto& p : poly) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

inline double region_area(const ElementRegion& region) {
  if (const auto* r = std::get_if<Rect>(&region.shape)) return r->area();
  const auto& poly = std::get<Polygon>(region.shape);
  return poly.size() < 3 ? 0.0 : detail::polygon_area(poly);
}

/// Pixels whose centers lie inside the region.
inline Mask rasterize(const ElementRegion& region, std::size_t width, std::size_t height) {
  Mask mask(width, height, 0);
  Rect box = bounding_box(region);
  PixelSpan xs = pixel_span(box.x, box.w, width);
  PixelSpan ys = pixel_span(box.y, box.h, height);
  const auto* rect = std::get_if<Rect>(&region.shape);
  for (std::size_t y = ys.begin; y < ys.end; ++y) {
    for (std::size_t x = xs.begin; x < xs.end; ++x) {
      Point c{x + 0.5, y + 0.5};
      bool inside = rect ? rect->contains(c) : detail::polygon_contains(std::get<Polygon>(region.shape), c);
      if (inside) mask(x, y) = 1;
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Fixations, stimuli, heatmaps.

struct Fixation {
  std::string participant_id;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> t_ms;
};

using FixationSet = std::vector<Fixation>;

struct Stimulus {
  std::string id;
  std::size_t width_px = 1;
  std::size_t height_px = 1;
  StimulusKind kind = StimulusKind::natural;
  std::string image_path;
  std::vector<ElementRegion> elements;
  FixationSet fixations;
  /// Cue location, set on validation stimuli only.
  std::optional<Point> cue;

  bool in_bounds(Point p) const noexcept {
    return p.x >= 0.0 && p.y >= 0.0 && p.x < static_cast<double>(width_px) &&
           p.y < static_cast<double>(height_px);
  }
};

/// Throws ParameterError when a stimulus record breaks its invariants.
inline void check_stimulus(const Stimulus& s) {
  if (s.width_px < 1 || s.height_px < 1) {
    throw ParameterError("stimulus '" + s.id + "' must have positive dimensions");
  }
  for (const auto& e : s.elements) {
    Rect b = bounding_box(e);
    if (b.x < 0 || b.y < 0 || b.x + b.w > static_cast<double>(s.width_px) ||
        b.y + b.h > static_cast<double>(s.height_px)) {
      throw ParameterError("element '" + e.id + "' lies outside stimulus '" + s.id + "'");
    }
    if (!(region_area(e) > 0.0)) {
      throw ParameterError("element '" + e.id + "' has zero area");
    }
  }
  for (const auto& f : s.fixations) {
    if (!s.in_bounds({f.x, f.y})) {
      throw ParameterError("fixation outside stimulus '" + s.id + "'");
    }
  }
  if (s.kind == StimulusKind::validation && !s.cue && s.elements.empty()) {
    throw ParameterError("validation stimulus '" + s.id + "' needs a cue location or an element");
  }
}

struct AttentionHeatmap {
  std::string stimulus_id;
  Grid<double> values;
  Provenance provenance = Provenance::synthetic;
  /// True for z-scored derivatives, which may hold negative values.
  bool normalized = false;

  std::size_t width() const noexcept { return values.width(); }
  std::size_t height() const noexcept { return values.height(); }
};

/// Column/row of the pixel containing p (nearest-pixel sampling).
inline std::pair<std::size_t, std::size_t> pixel_of(Point p, std::size_t width, std::size_t height) {
  auto clampi = [](double v, std::size_t limit) {
    double f = std::floor(v);
    if (f < 0) f = 0;
    if (f > static_cast<double>(limit - 1)) f = static_cast<double>(limit - 1);
    return static_cast<std::size_t>(f);
  };
  return {clampi(p.x, width), clampi(p.y, height)};
}

/// Index of the (first) maximum value, as a pixel coordinate.
template <typename T>
std::pair<std::size_t, std::size_t> argmax(const Grid<T>& g) {
  if (g.empty()) throw EmptyInput("argmax of an empty grid");
  auto it = std::max_element(g.begin(), g.end());
  auto idx = static_cast<std::size_t>(it - g.begin());
  return {idx % g.width(), idx / g.width()};
}

}  // namespace attnlab

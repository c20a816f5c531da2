#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "attnlab/codecharts.hpp"
#include "attnlab/core/blur.hpp"
#include "attnlab/core/error.hpp"
#include "attnlab/core/geometry.hpp"
#include "attnlab/core/types.hpp"

namespace attnlab::heatmaps {

inline constexpr double kCodeChartsSigma = 50.0;
/// Used for click and fixation maps when the caller has no per-dataset value.
inline constexpr double kDefaultPointSigma = 30.0;
/// Added after the last zoom event when no image-switch time was logged.
inline constexpr double kSessionGraceMs = 1000.0;

// ---------------------------------------------------------------------------
// Log types.

struct ZoomEvent {
  double t_ms = 0.0;
  Rect viewport;
};

struct ZoomSession {
  std::string participant_id;
  std::string stimulus_id;
  std::vector<ZoomEvent> events;
  std::optional<double> session_end_ms;

  double end_ms() const {
    if (session_end_ms) return *session_end_ms;
    return events.empty() ? 0.0 : events.back().t_ms + kSessionGraceMs;
  }
  double duration_ms() const { return events.empty() ? 0.0 : end_ms() - events.front().t_ms; }
};

struct CodeReport {
  std::string participant_id;
  std::string stimulus_id;
  std::string chart_id;
  std::string typed_code;
  double response_t_ms = 0.0;
};

using CodeReportSet = std::vector<CodeReport>;

enum class MaskTool { stroke_fill, polygon_fill, regular_stroke };

inline std::string_view to_string(MaskTool t) {
  switch (t) {
    case MaskTool::stroke_fill: return "stroke_fill";
    case MaskTool::polygon_fill: return "polygon_fill";
    case MaskTool::regular_stroke: return "regular_stroke";
  }
  return "?";
}
inline MaskTool parse_mask_tool(std::string_view s) {
  if (s == "stroke_fill") return MaskTool::stroke_fill;
  if (s == "polygon_fill") return MaskTool::polygon_fill;
  if (s == "regular_stroke") return MaskTool::regular_stroke;
  throw ParameterError("unknown mask tool '" + std::string(s) + "'");
}

struct MaskEntry {
  std::string participant_id;
  std::string stimulus_id;
  Mask mask;
  MaskTool tool = MaskTool::polygon_fill;
};

using MaskSet = std::vector<MaskEntry>;

struct Click {
  double t_ms = 0.0;
  double x = 0.0;
  double y = 0.0;
};

enum class BubbleTask { free_view, description };

inline std::string_view to_string(BubbleTask t) {
  return t == BubbleTask::free_view ? "free_view" : "description";
}
inline BubbleTask parse_bubble_task(std::string_view s) {
  if (s == "free_view") return BubbleTask::free_view;
  if (s == "description") return BubbleTask::description;
  throw ParameterError("unknown bubbleview task '" + std::string(s) + "'");
}

struct ClickSession {
  std::string participant_id;
  std::string stimulus_id;
  std::vector<Click> clicks;
  std::optional<std::string> description;
  BubbleTask task = BubbleTask::free_view;
};

// ---------------------------------------------------------------------------
// Shared helpers.

inline Rect clip_to_image(const Rect& r, const Stimulus& s) {
  double x0 = std::max(r.x, 0.0);
  double y0 = std::max(r.y, 0.0);
  double x1 = std::min(r.x + r.w, static_cast<double>(s.width_px));
  double y1 = std::min(r.y + r.h, static_cast<double>(s.height_px));
  return {x0, y0, std::max(0.0, x1 - x0), std::max(0.0, y1 - y0)};
}

/// Unit mass per point at its nearest pixel.
inline Grid<double> point_histogram(const std::vector<Point>& points, std::size_t width, std::size_t height) {
  Grid<double> g(width, height, 0.0);
  for (const auto& p : points) {
    if (!(p.x >= 0 && p.y >= 0 && p.x < static_cast<double>(width) && p.y < static_cast<double>(height))) {
      throw ParameterError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") outside image");
    }
    auto [x, y] = pixel_of(p, width, height);
    g(x, y) += 1.0;
  }
  return g;
}

inline AttentionHeatmap blurred_points(const std::vector<Point>& points, const Stimulus& s, double sigma,
                                       Provenance provenance) {
  auto counts = point_histogram(points, s.width_px, s.height_px);
  return {s.id, gaussian_blur_auto(counts, sigma), provenance, false};
}

inline void check_stimulus_ref(const std::string& ref, const Stimulus& s, const char* what) {
  if (!ref.empty() && ref != s.id) {
    throw ParameterError(std::string(what) + " references stimulus '" + ref + "', expected '" + s.id + "'");
  }
}

// ---------------------------------------------------------------------------
// ZoomMaps.

/// Full image area divided by the (clipped) viewport area.
inline double zoom_level(const Rect& viewport, const Stimulus& s) {
  Rect v = clip_to_image(viewport, s);
  if (!(v.area() > 0.0)) throw ParameterError("viewport has zero area inside the image");
  return static_cast<double>(s.width_px) * static_cast<double>(s.height_px) / v.area();
}

inline void check_session(const ZoomSession& session, const Stimulus& s) {
  check_stimulus_ref(session.stimulus_id, s, "zoom session");
  if (session.events.empty()) throw EmptyInput("zoom session for '" + session.participant_id + "' has no events");
  for (std::size_t i = 1; i < session.events.size(); ++i) {
    if (!(session.events[i].t_ms > session.events[i - 1].t_ms)) {
      throw ParameterError("zoom event timestamps must be strictly increasing");
    }
  }
  if (session.end_ms() < session.events.back().t_ms) {
    throw ParameterError("session end precedes the last zoom event");
  }
}

/// Time-weighted average zoom level per pixel for one session; pixels outside the
/// current viewport contribute zero for that interval.
inline Grid<double> zoom_session_map(const ZoomSession& session, const Stimulus& s) {
  check_session(session, s);
  Grid<double> g(s.width_px, s.height_px, 0.0);
  const auto& ev = session.events;
  const double total = session.duration_ms();
  for (std::size_t i = 0; i < ev.size(); ++i) {
    double next = i + 1 < ev.size() ? ev[i + 1].t_ms : session.end_ms();
    double weight = total > 0.0 ? (next - ev[i].t_ms) / total : 1.0;
    if (weight <= 0.0) continue;
    const double level = zoom_level(ev[i].viewport, s);
    Rect v = clip_to_image(ev[i].viewport, s);
    PixelSpan xs = pixel_span(v.x, v.w, s.width_px);
    PixelSpan ys = pixel_span(v.y, v.h, s.height_px);
    const double add = level * weight;
    for (std::size_t y = ys.begin; y < ys.end; ++y) {
      for (std::size_t x = xs.begin; x < xs.end; ++x) g(x, y) += add;
    }
  }
  return g;
}

namespace detail {

inline auto zoom_key(const ZoomSession& s) {
  std::vector<std::tuple<double, double, double, double, double>> ev;
  for (const auto& e : s.events) ev.emplace_back(e.t_ms, e.viewport.x, e.viewport.y, e.viewport.w, e.viewport.h);
  return std::make_tuple(s.participant_id, ev, s.end_ms());
}

inline void add_into(Grid<double>& acc, const Grid<double>& g, double scale = 1.0) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i] * scale;
}

}  // namespace detail

/// Mean over participants of per-participant zoom maps. Sessions are summed in a
/// canonical order so the result does not depend on input order.
inline AttentionHeatmap zoom_heatmap(std::vector<ZoomSession> sessions, const Stimulus& s) {
  if (sessions.empty()) throw EmptyInput("zoom_heatmap needs at least one session");
  std::sort(sessions.begin(), sessions.end(),
            [](const ZoomSession& a, const ZoomSession& b) { return detail::zoom_key(a) < detail::zoom_key(b); });
  // group repeated sessions of one participant before averaging across participants
  std::map<std::string, std::pair<Grid<double>, std::size_t>> per_participant;
  for (const auto& session : sessions) {
    auto map = zoom_session_map(session, s);
    auto [it, inserted] = per_participant.try_emplace(session.participant_id, Grid<double>(s.width_px, s.height_px, 0.0), 0);
    detail::add_into(it->second.first, map);
    ++it->second.second;
  }
  Grid<double> acc(s.width_px, s.height_px, 0.0);
  for (const auto& [pid, entry] : per_participant) {
    detail::add_into(acc, entry.first, 1.0 / static_cast<double>(entry.second));
  }
  const double n = static_cast<double>(per_participant.size());
  for (double& v : acc) v /= n;
  return {s.id, std::move(acc), Provenance::zoommaps, false};
}

// ---------------------------------------------------------------------------
// CodeCharts.

using ChartLookup = std::map<std::string, codecharts::CodeChart>;

/// Image-space gaze points of every report that resolves to a triplet on the image.
inline std::vector<Point> codecharts_points(const CodeReportSet& reports, const ChartLookup& charts,
                                            const Stimulus& s, const WindowMapping& mapping) {
  std::vector<Point> points;
  for (const auto& r : reports) {
    check_stimulus_ref(r.stimulus_id, s, "code report");
    auto it = charts.find(r.chart_id);
    if (it == charts.end()) throw ReferentialIntegrity("unknown chart '" + r.chart_id + "'");
    auto res = codecharts::resolve_report(it->second, r.typed_code);
    if (!res.center) continue;
    if (!mapping.on_image(*res.center)) continue;  // landed in the padding
    points.push_back(mapping.to_image(*res.center));
  }
  return points;
}

inline AttentionHeatmap codecharts_heatmap(const CodeReportSet& reports, const ChartLookup& charts,
                                           const Stimulus& s, const WindowMapping& mapping,
                                           double sigma = kCodeChartsSigma) {
  return blurred_points(codecharts_points(reports, charts, s, mapping), s, sigma, Provenance::codecharts);
}

// ---------------------------------------------------------------------------
// ImportAnnots.

inline AttentionHeatmap importannots_heatmap(const MaskSet& masks) {
  if (masks.empty()) throw EmptyInput("importannots_heatmap needs at least one mask");
  const auto& first = masks.front().mask;
  std::vector<std::uint32_t> counts(first.size(), 0);
  for (const auto& m : masks) {
    if (!m.mask.same_shape(first)) throw ParameterError("mask dimensions differ across participants");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += m.mask[i] ? 1u : 0u;
  }
  Grid<double> g(first.width(), first.height());
  const double n = static_cast<double>(masks.size());
  for (std::size_t i = 0; i < counts.size(); ++i) g[i] = counts[i] / n;
  return {masks.front().stimulus_id, std::move(g), Provenance::importannots, false};
}

// ---------------------------------------------------------------------------
// BubbleView and fixations.

inline AttentionHeatmap bubbleview_heatmap(const std::vector<ClickSession>& sessions, const Stimulus& s,
                                           double sigma) {
  if (sessions.empty()) throw EmptyInput("bubbleview_heatmap needs at least one session");
  std::vector<Point> points;
  for (const auto& session : sessions) {
    check_stimulus_ref(session.stimulus_id, s, "click session");
    for (const auto& c : session.clicks) points.push_back({c.x, c.y});
  }
  if (points.empty()) throw EmptyInput("bubbleview sessions contain no clicks");
  return blurred_points(points, s, sigma, Provenance::bubbleview);
}

inline AttentionHeatmap fixation_heatmap(const FixationSet& fixations, const Stimulus& s,
                                         double sigma = kDefaultPointSigma) {
  if (fixations.empty()) throw EmptyInput("fixation_heatmap needs at least one fixation");
  std::vector<Point> points;
  points.reserve(fixations.size());
  for (const auto& f : fixations) points.push_back({f.x, f.y});
  return blurred_points(points, s, sigma, Provenance::eyetracking);
}

}  // namespace attnlab::heatmaps

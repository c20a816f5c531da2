#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "attnlab/codecharts.hpp"
#include "attnlab/core/error.hpp"
#include "attnlab/core/geometry.hpp"
#include "attnlab/core/rng.hpp"
#include "attnlab/core/types.hpp"
#include "attnlab/heatmaps.hpp"

namespace attnlab::sim {

struct GaussianComponent {
  double x = 0.0;
  double y = 0.0;
  double sigma = 1.0;
  double weight = 1.0;
};

/// Non-negative grid with unit total mass, plus its cumulative distribution for sampling.
class GroundTruthDensity {
 public:
  GroundTruthDensity() = default;

  explicit GroundTruthDensity(Grid<double> density, std::vector<GaussianComponent> components = {})
      : density_(std::move(density)), components_(std::move(components)) {
    if (density_.empty()) throw EmptyInput("ground-truth density is empty");
    double total = 0.0;
    for (double v : density_) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("density values must be finite and non-negative");
      total += v;
    }
    if (!(total > 0.0)) throw ParameterError("density has zero mass");
    for (double& v : density_) v /= total;
    cdf_.resize(density_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < density_.size(); ++i) {
      acc += density_[i];
      cdf_[i] = acc;
    }
  }

  /// Sum of isotropic Gaussians evaluated at pixel centers.
  static GroundTruthDensity mixture(std::size_t width, std::size_t height, std::vector<GaussianComponent> comps) {
    if (comps.empty()) throw EmptyInput("mixture needs at least one component");
    Grid<double> g(width, height, 0.0);
    for (const auto& c : comps) {
      if (!(c.sigma > 0.0) || !(c.weight >= 0.0)) throw ParameterError("mixture component needs sigma > 0, weight >= 0");
      const double norm = c.weight / (2.0 * 3.14159265358979323846 * c.sigma * c.sigma);
      for (std::size_t y = 0; y < height; ++y) {
        const double dy = y + 0.5 - c.y;
        for (std::size_t x = 0; x < width; ++x) {
          const double dx = x + 0.5 - c.x;
          g(x, y) += norm * std::exp(-(dx * dx + dy * dy) / (2.0 * c.sigma * c.sigma));
        }
      }
    }
    return GroundTruthDensity(std::move(g), std::move(comps));
  }

  /// All mass on one pixel.
  static GroundTruthDensity delta(std::size_t width, std::size_t height, Point p) {
    Grid<double> g(width, height, 0.0);
    auto [x, y] = pixel_of(p, width, height);
    g(x, y) = 1.0;
    return GroundTruthDensity(std::move(g));
  }

  const Grid<double>& density() const noexcept { return density_; }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }
  std::size_t width() const noexcept { return density_.width(); }
  std::size_t height() const noexcept { return density_.height(); }

  /// Inverse-CDF draw; returns the center of the chosen pixel.
  Point sample(Rng& rng) const {
    const double target = rng.uniform() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    if (it == cdf_.end()) --it;
    auto idx = static_cast<std::size_t>(it - cdf_.begin());
    // skip trailing zero-mass pixels that share the final cdf value
    while (density_[idx] == 0.0 && idx > 0) --idx;
    return {static_cast<double>(idx % width()) + 0.5, static_cast<double>(idx / width()) + 0.5};
  }

 private:
  Grid<double> density_;
  std::vector<GaussianComponent> components_;
  std::vector<double> cdf_;
};

struct SyntheticParticipant {
  std::string id;
  double report_noise_px = 30.0;
  double miss_rate = 0.05;
  std::size_t zoom_affinity = 3;
  std::size_t clicks_per_image = 10;
  std::uint64_t seed = 0;
  heatmaps::BubbleTask task = heatmaps::BubbleTask::free_view;
  std::size_t description_length = 200;
  double view_ms = 20000.0;
  /// Positive dilates, negative erodes annotation masks by this many pixels.
  int mask_noise_px = 0;

  void check() const {
    if (!(miss_rate >= 0.0 && miss_rate <= 1.0)) throw ParameterError("miss_rate must lie in [0, 1]");
    if (!(report_noise_px >= 0.0)) throw ParameterError("report_noise_px must be non-negative");
    if (!(view_ms > 0.0)) throw ParameterError("view_ms must be positive");
  }
};

// ---------------------------------------------------------------------------

inline FixationSet sample_fixations(const GroundTruthDensity& gt, std::size_t n, std::uint64_t seed,
                                    const std::string& participant_id = "sim") {
  Rng rng(seed);
  FixationSet out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point p = gt.sample(rng);
    out.push_back({participant_id, p.x, p.y, std::nullopt});
  }
  return out;
}

inline Point clamp_to(Point p, double width, double height) {
  // stay strictly inside [0, width) x [0, height)
  return {std::clamp(p.x, 0.0, std::nextafter(width, 0.0)), std::clamp(p.y, 0.0, std::nextafter(height, 0.0))};
}

/// One self-reported code: a gaze sample mapped to the chart, perturbed, snapped to
/// the nearest triplet; or, with probability miss_rate, a code absent from the chart.
inline heatmaps::CodeReport sim_codecharts(const GroundTruthDensity& gt, const codecharts::CodeChart& chart,
                                           const WindowMapping& mapping, const SyntheticParticipant& p,
                                           const std::string& stimulus_id = {}) {
  p.check();
  Rng rng(derive_seed(p.seed, "codecharts:" + chart.chart_id));
  heatmaps::CodeReport report{p.id, stimulus_id, chart.chart_id, {}, 0.0};
  report.response_t_ms = 1500.0 + 1000.0 * rng.uniform();
  if (rng.bernoulli(p.miss_rate)) {
    report.typed_code = codecharts::random_absent_code(chart, rng);
    return report;
  }
  Point gaze = mapping.to_window(gt.sample(rng));
  gaze.x += p.report_noise_px * rng.normal();
  gaze.y += p.report_noise_px * rng.normal();
  report.typed_code = chart.nearest(gaze).code;
  return report;
}

/// Local maxima of the density (8-neighborhood), strongest first, at least min_sep apart.
inline std::vector<std::pair<Point, double>> find_peaks(const Grid<double>& g, std::size_t k, double min_sep) {
  std::vector<std::pair<Point, double>> cands;
  const auto w = static_cast<std::ptrdiff_t>(g.width());
  const auto h = static_cast<std::ptrdiff_t>(g.height());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const double v = g(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
      if (!(v > 0.0)) continue;
      bool is_max = true;
      for (std::ptrdiff_t dy = -1; dy <= 1 && is_max; ++dy) {
        for (std::ptrdiff_t dx = -1; dx <= 1 && is_max; ++dx) {
          std::ptrdiff_t nx = x + dx, ny = y + dy;
          if ((dx || dy) && nx >= 0 && ny >= 0 && nx < w && ny < h &&
              g(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)) > v) {
            is_max = false;
          }
        }
      }
      if (is_max) cands.push_back({{x + 0.5, y + 0.5}, v});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::pair<Point, double>> peaks;
  for (const auto& c : cands) {
    if (peaks.size() >= k) break;
    bool far = std::all_of(peaks.begin(), peaks.end(), [&](const auto& p) { return distance(p.first, c.first) >= min_sep; });
    if (far) peaks.push_back(c);
  }
  return peaks;
}

/// Zoom exploration: a full-image overview, then one viewport per density peak (up to
/// zoom_affinity peaks). Viewport side shrinks in proportion to peak density; dwell time is
/// proportional to the density mass inside the viewport.
inline heatmaps::ZoomSession sim_zoom(const GroundTruthDensity& gt, const Stimulus& s, const SyntheticParticipant& p) {
  p.check();
  if (gt.width() != s.width_px || gt.height() != s.height_px) {
    throw ParameterError("ground truth dimensions differ from the stimulus");
  }
  Rng rng(derive_seed(p.seed, "zoom:" + s.id));
  const double W = static_cast<double>(s.width_px), H = static_cast<double>(s.height_px);
  heatmaps::ZoomSession session{p.id, s.id, {{0.0, Rect{0.0, 0.0, W, H}}}, p.view_ms};
  if (p.zoom_affinity == 0) return session;

  constexpr double kTopPeakSide = 0.25;  // viewport side (fraction of image) at the strongest peak
  constexpr double kOverviewShare = 0.2;
  auto peaks = find_peaks(gt.density(), p.zoom_affinity, 0.1 * std::min(W, H));
  if (peaks.empty()) return session;
  const double top = peaks.front().second;

  struct Visit {
    Rect viewport;
    double mass;
  };
  std::vector<Visit> visits;
  for (const auto& [center, dens] : peaks) {
    double side = std::min(1.0, kTopPeakSide * top / dens);
    double vw = W * side, vh = H * side;
    double cx = center.x + p.report_noise_px * rng.normal();
    double cy = center.y + p.report_noise_px * rng.normal();
    Rect v{std::clamp(cx - vw / 2.0, 0.0, W - vw), std::clamp(cy - vh / 2.0, 0.0, H - vh), vw, vh};
    double mass = 0.0;
    PixelSpan xs = pixel_span(v.x, v.w, s.width_px), ys = pixel_span(v.y, v.h, s.height_px);
    for (std::size_t y = ys.begin; y < ys.end; ++y) {
      for (std::size_t x = xs.begin; x < xs.end; ++x) mass += gt.density()(x, y);
    }
    visits.push_back({v, mass});
  }
  double total_mass = 0.0;
  for (const auto& v : visits) total_mass += v.mass;

  const double overview = kOverviewShare * p.view_ms;
  const double explore = p.view_ms - overview;
  double t = overview;
  for (const auto& v : visits) {
    session.events.push_back({t, v.viewport});
    double dwell = total_mass > 0.0 ? explore * v.mass / total_mass : explore / static_cast<double>(visits.size());
    t += std::max(dwell, 1.0);
  }
  session.session_end_ms = std::max(p.view_ms, t);
  return session;
}

inline std::string placeholder_text(std::size_t length) {
  static constexpr std::string_view kWords = "the image shows a scene with several objects of interest ";
  std::string out;
  out.reserve(length);
  while (out.size() < length) out += kWords[out.size() % kWords.size()];
  return out;
}

/// clicks_per_image gaze samples with isotropic noise, clamped to the image.
inline heatmaps::ClickSession sim_bubble(const GroundTruthDensity& gt, const Stimulus& s, const SyntheticParticipant& p) {
  p.check();
  Rng rng(derive_seed(p.seed, "bubble:" + s.id));
  heatmaps::ClickSession session{p.id, s.id, {}, std::nullopt, p.task};
  const double W = static_cast<double>(s.width_px), H = static_cast<double>(s.height_px);
  for (std::size_t i = 0; i < p.clicks_per_image; ++i) {
    Point c = gt.sample(rng);
    if (p.report_noise_px > 0.0) {
      c.x += p.report_noise_px * rng.normal();
      c.y += p.report_noise_px * rng.normal();
    }
    c = clamp_to(c, W, H);
    session.clicks.push_back({1000.0 * static_cast<double>(i + 1), c.x, c.y});
  }
  if (p.task == heatmaps::BubbleTask::description) session.description = placeholder_text(p.description_length);
  return session;
}

struct WeightedElement {
  ElementRegion region;
  double weight = 0.0;
};

/// Square dilation (radius > 0) or erosion (radius < 0).
inline Mask morph(const Mask& m, int radius) {
  if (radius == 0) return m;
  const bool dilate = radius > 0;
  const auto r = static_cast<std::ptrdiff_t>(std::abs(radius));
  const auto w = static_cast<std::ptrdiff_t>(m.width()), h = static_cast<std::ptrdiff_t>(m.height());
  Mask out(m.width(), m.height(), 0);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      bool any = false, all = true;
      for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
        for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
          std::ptrdiff_t nx = x + dx, ny = y + dy;
          bool v = nx >= 0 && ny >= 0 && nx < w && ny < h && m(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny));
          any = any || v;
          all = all && v;
        }
      }
      out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = (dilate ? any : all) ? 1 : 0;
    }
  }
  return out;
}

/// Each element is selected independently with probability min(weight, 1); the mask is
/// the union of selected elements.
inline heatmaps::MaskEntry sim_annotation(const std::vector<WeightedElement>& elements, const Stimulus& s,
                                          const SyntheticParticipant& p,
                                          heatmaps::MaskTool tool = heatmaps::MaskTool::polygon_fill) {
  p.check();
  Rng rng(derive_seed(p.seed, "annot:" + s.id));
  Mask mask(s.width_px, s.height_px, 0);
  for (const auto& e : elements) {
    if (!rng.bernoulli(std::min(1.0, std::max(0.0, e.weight)))) continue;
    Mask r = rasterize(e.region, s.width_px, s.height_px);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] |= r[i];
  }
  return {p.id, s.id, morph(mask, p.mask_noise_px), tool};
}

}  // namespace attnlab::sim

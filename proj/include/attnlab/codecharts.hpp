#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "attnlab/core/error.hpp"
#include "attnlab/core/geometry.hpp"
#include "attnlab/core/io.hpp"
#include "attnlab/core/rng.hpp"
#include "attnlab/core/types.hpp"

namespace attnlab::codecharts {

/// Uppercase letters and digits without the confusable 0/O and 1/I/L.
inline constexpr std::string_view kDefaultAlphabet = "ABCDEFGHJKMNPQRSTUVWXYZ23456789";

struct GlyphMetrics {
  double glyph_w = 10.0;  // ~0.6 em at a 16 px font
  double glyph_h = 16.0;
};

struct ChartParams {
  std::size_t window_w = kDefaultWindowWidth;
  std::size_t window_h = kDefaultWindowHeight;
  double spacing = 100.0;
  double jitter_frac = 0.25;
  /// Jitter each triplet independently instead of whole grid rows/columns.
  bool per_cell_jitter = false;
  std::string alphabet{kDefaultAlphabet};
  GlyphMetrics glyph;
};

struct TripletPlacement {
  std::string code;
  Point center;
  Rect bbox;
  Point nominal;  // unjittered grid position
};

struct ValidationBlock {
  Point cue_center;
  double capture_radius = 0.0;
  std::vector<std::string> correct_codes;  // sorted

  bool is_correct(std::string_view code) const {
    return std::binary_search(correct_codes.begin(), correct_codes.end(), code);
  }
};

struct CodeChart {
  std::string chart_id;
  ChartParams params;
  std::vector<TripletPlacement> placements;
  std::optional<ValidationBlock> validation;
  std::uint64_t rng_seed = 0;

  const TripletPlacement* find(std::string_view code) const {
    auto it = std::find_if(placements.begin(), placements.end(),
                           [&](const TripletPlacement& p) { return p.code == code; });
    return it == placements.end() ? nullptr : &*it;
  }

  /// Placement whose center is closest to p (ties go to the earlier placement).
  const TripletPlacement& nearest(Point p) const {
    if (placements.empty()) throw EmptyInput("chart has no placements");
    const TripletPlacement* best = &placements.front();
    double best_d = distance(best->center, p);
    for (const auto& t : placements) {
      double d = distance(t.center, p);
      if (d < best_d) {
        best = &t;
        best_d = d;
      }
    }
    return *best;
  }
};

/// Evenly spaced nominal centers along one axis, centered in the window.
inline std::vector<double> nominal_axis(std::size_t length, double spacing) {
  auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(length / spacing)));
  double margin = (static_cast<double>(length) - static_cast<double>(n - 1) * spacing) / 2.0;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = margin + static_cast<double>(i) * spacing;
  return out;
}

inline std::string code_from_index(std::uint64_t index, std::string_view alphabet) {
  const std::uint64_t a = alphabet.size();
  std::string code(3, ' ');
  code[2] = alphabet[index % a];
  code[1] = alphabet[(index / a) % a];
  code[0] = alphabet[(index / a / a) % a];
  return code;
}

inline void check_params(const ChartParams& p) {
  if (p.window_w < 1 || p.window_h < 1) throw ParameterError("chart window must be non-empty");
  if (!(p.spacing >= 3.0 * p.glyph.glyph_w)) {
    throw ParameterError("spacing must be at least three glyph widths");
  }
  if (!(p.jitter_frac >= 0.0 && p.jitter_frac < 0.5)) {
    throw ParameterError("jitter_frac must lie in [0, 0.5)");
  }
  std::string sorted = p.alphabet;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty() || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ParameterError("alphabet must be non-empty with distinct glyphs");
  }
}

/// Jittered grid of unique three-character codes. Deterministic for a seed.
inline CodeChart generate_codechart(const ChartParams& params, std::uint64_t seed,
                                    std::string chart_id = {}) {
  check_params(params);
  const auto xs = nominal_axis(params.window_w, params.spacing);
  const auto ys = nominal_axis(params.window_h, params.spacing);
  const std::size_t count = xs.size() * ys.size();
  const auto a = static_cast<std::uint64_t>(params.alphabet.size());
  const std::uint64_t capacity = a * a * a;
  if (count > capacity) {
    throw CapacityError("alphabet of " + std::to_string(a) + " glyphs yields only " +
                        std::to_string(capacity) + " codes for " + std::to_string(count) + " triplets");
  }

  Rng rng(seed);
  const double amp = params.jitter_frac * params.spacing;
  auto jitter = [&] { return rng.uniform(-amp, amp); };

  std::vector<double> col_off(xs.size()), row_off(ys.size());
  if (!params.per_cell_jitter) {
    for (double& v : col_off) v = jitter();
    for (double& v : row_off) v = jitter();
  }

  // codes sampled without replacement
  std::vector<std::uint64_t> indices;
  indices.reserve(count);
  if (count * 2 > capacity) {
    std::vector<std::uint64_t> all(capacity);
    for (std::uint64_t i = 0; i < capacity; ++i) all[i] = i;
    rng.shuffle(all);
    indices.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count));
  } else {
    std::unordered_set<std::uint64_t> seen;
    while (indices.size() < count) {
      std::uint64_t idx = rng.below(capacity);
      if (seen.insert(idx).second) indices.push_back(idx);
    }
  }

  const double half_w = 1.5 * params.glyph.glyph_w;
  const double half_h = params.glyph.glyph_h / 2.0;
  CodeChart chart;
  chart.chart_id = chart_id.empty() ? "chart-" + std::to_string(seed) : std::move(chart_id);
  chart.params = params;
  chart.rng_seed = seed;
  chart.placements.reserve(count);
  std::size_t k = 0;
  for (std::size_t r = 0; r < ys.size(); ++r) {
    for (std::size_t c = 0; c < xs.size(); ++c, ++k) {
      double dx = params.per_cell_jitter ? jitter() : col_off[c];
      double dy = params.per_cell_jitter ? jitter() : row_off[r];
      Point nominal{xs[c], ys[r]};
      // keep the bbox inside the window; clamping only moves toward the nominal position
      Point center{std::clamp(nominal.x + dx, half_w, static_cast<double>(params.window_w) - half_w),
                   std::clamp(nominal.y + dy, half_h, static_cast<double>(params.window_h) - half_h)};
      chart.placements.push_back({code_from_index(indices[k], params.alphabet), center,
                                  Rect{center.x - half_w, center.y - half_h, 2 * half_w, 2 * half_h},
                                  nominal});
    }
  }
  return chart;
}

/// Chart with a validation cue; every code within capture_radius of the cue counts as
/// correct. Regenerates the grid from derived seeds until at least one code qualifies.
inline CodeChart generate_validation_chart(Point cue_center, const ChartParams& params,
                                           std::uint64_t seed,
                                           std::optional<double> capture_radius = std::nullopt,
                                           std::string chart_id = {}) {
  check_params(params);
  if (!(cue_center.x >= 0 && cue_center.y >= 0 && cue_center.x < static_cast<double>(params.window_w) &&
        cue_center.y < static_cast<double>(params.window_h))) {
    throw ParameterError("validation cue must lie inside the window");
  }
  const double radius = capture_radius.value_or(params.spacing);
  if (!(radius >= params.spacing / 2.0)) {
    throw ParameterError("capture radius must be at least half the spacing");
  }
  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::uint64_t s = attempt == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(attempt));
    CodeChart chart = generate_codechart(params, s, chart_id.empty() ? "vchart-" + std::to_string(seed) : chart_id);
    ValidationBlock block{cue_center, radius, {}};
    for (const auto& p : chart.placements) {
      if (distance(p.center, cue_center) <= radius) block.correct_codes.push_back(p.code);
    }
    if (!block.correct_codes.empty()) {
      std::sort(block.correct_codes.begin(), block.correct_codes.end());
      chart.validation = std::move(block);
      return chart;
    }
  }
  throw CapacityError("no triplet landed within the capture radius of the cue");
}

// ---------------------------------------------------------------------------
// Report resolution.

enum class ReportStatus { valid, nonexistent, validation_correct, validation_incorrect };

inline std::string_view to_string(ReportStatus s) {
  switch (s) {
    case ReportStatus::valid: return "valid";
    case ReportStatus::nonexistent: return "nonexistent";
    case ReportStatus::validation_correct: return "validation_correct";
    case ReportStatus::validation_incorrect: return "validation_incorrect";
  }
  return "?";
}

struct Resolution {
  ReportStatus status = ReportStatus::nonexistent;
  std::string code;             // normalized
  std::optional<Point> center;  // window coordinates, absent for nonexistent codes

  bool has_location() const noexcept { return center.has_value(); }
};

/// Trim surrounding whitespace and uppercase.
inline std::string normalize_code(std::string_view typed) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!typed.empty() && is_space(typed.front())) typed.remove_prefix(1);
  while (!typed.empty() && is_space(typed.back())) typed.remove_suffix(1);
  std::string out(typed);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

inline Resolution resolve_report(const CodeChart& chart, std::string_view typed) {
  Resolution res;
  res.code = normalize_code(typed);
  const TripletPlacement* hit = chart.find(res.code);
  if (!hit) return res;
  res.center = hit->center;
  if (!chart.validation) {
    res.status = ReportStatus::valid;
  } else {
    res.status = chart.validation->is_correct(res.code) ? ReportStatus::validation_correct
                                                        : ReportStatus::validation_incorrect;
  }
  return res;
}

/// A random code over the chart alphabet that does not appear on the chart.
inline std::string random_absent_code(const CodeChart& chart, Rng& rng) {
  const auto a = static_cast<std::uint64_t>(chart.params.alphabet.size());
  if (chart.placements.size() >= a * a * a) throw CapacityError("chart uses every code");
  while (true) {
    std::string code = code_from_index(rng.below(a * a * a), chart.params.alphabet);
    if (!chart.find(code)) return code;
  }
}

// ---------------------------------------------------------------------------
// JSON.

inline void to_json(json& j, const ChartParams& p) {
  j = json{{"window_w", p.window_w},         {"window_h", p.window_h},
           {"spacing", p.spacing},           {"jitter_frac", p.jitter_frac},
           {"per_cell_jitter", p.per_cell_jitter}, {"alphabet", p.alphabet},
           {"glyph_w", p.glyph.glyph_w},     {"glyph_h", p.glyph.glyph_h}};
}

inline void from_json(const json& j, ChartParams& p) {
  ChartParams d;
  p.window_w = j.value("window_w", d.window_w);
  p.window_h = j.value("window_h", d.window_h);
  p.spacing = j.value("spacing", d.spacing);
  p.jitter_frac = j.value("jitter_frac", d.jitter_frac);
  p.per_cell_jitter = j.value("per_cell_jitter", d.per_cell_jitter);
  p.alphabet = j.value("alphabet", d.alphabet);
  p.glyph.glyph_w = j.value("glyph_w", d.glyph.glyph_w);
  p.glyph.glyph_h = j.value("glyph_h", d.glyph.glyph_h);
}

inline void to_json(json& j, const CodeChart& c) {
  json placements = json::array();
  for (const auto& p : c.placements) {
    placements.push_back({{"code", p.code}, {"center", p.center}, {"bbox", p.bbox}, {"nominal", p.nominal}});
  }
  j = json{{"chart_id", c.chart_id},
           {"seed", c.rng_seed},
           {"window", {{"w", c.params.window_w}, {"h", c.params.window_h}}},
           {"params", c.params},
           {"placements", std::move(placements)}};
  if (c.validation) {
    j["validation"] = {{"cue_center", c.validation->cue_center},
                       {"capture_radius", c.validation->capture_radius},
                       {"correct_codes", c.validation->correct_codes}};
  } else {
    j["validation"] = nullptr;
  }
}

inline void from_json(const json& j, CodeChart& c) {
  c.chart_id = j.at("chart_id").get<std::string>();
  c.rng_seed = j.value("seed", std::uint64_t{0});
  c.params = j.value("params", ChartParams{});
  if (j.contains("window")) {
    c.params.window_w = j.at("window").at("w").get<std::size_t>();
    c.params.window_h = j.at("window").at("h").get<std::size_t>();
  }
  c.placements.clear();
  for (const auto& p : j.at("placements")) {
    TripletPlacement t;
    t.code = p.at("code").get<std::string>();
    t.center = p.at("center").get<Point>();
    t.bbox = p.at("bbox").get<Rect>();
    t.nominal = p.contains("nominal") ? p.at("nominal").get<Point>() : t.center;
    c.placements.push_back(std::move(t));
  }
  c.validation.reset();
  if (j.contains("validation") && !j.at("validation").is_null()) {
    const auto& v = j.at("validation");
    ValidationBlock block{v.at("cue_center").get<Point>(), v.value("capture_radius", c.params.spacing),
                          v.at("correct_codes").get<std::vector<std::string>>()};
    std::sort(block.correct_codes.begin(), block.correct_codes.end());
    c.validation = std::move(block);
  }
}

}  // namespace attnlab::codecharts

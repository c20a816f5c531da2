#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "attnlab/codecharts.hpp"
#include "attnlab/core/error.hpp"
#include "attnlab/core/types.hpp"
#include "attnlab/heatmaps.hpp"

namespace attnlab::quality {

using nlohmann::json;

struct Reason {
  std::string rule_id;
  double observed = 0.0;
  double threshold = 0.0;
  bool passed = true;
  bool mandatory = true;
  std::string note;
};

struct QualityVerdict {
  std::string participant_id;
  Interface interface = Interface::zoommaps;
  bool passed = true;
  std::vector<Reason> reasons;

  void add(Reason r) {
    if (r.mandatory && !r.passed) passed = false;
    reasons.push_back(std::move(r));
  }
  const Reason* find(std::string_view rule_id) const {
    for (const auto& r : reasons) {
      if (r.rule_id == rule_id) return &r;
    }
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Thresholds. Defaults are the published values except where noted.

struct ZoomRules {
  double min_image_time_ms = 5000.0;  // experiments used 1-5 s
  double min_image_time_frac = 0.85;
  double min_total_time_ms = 180000.0;
  double min_zoom_frac = 0.20;
};

struct CodeChartsRules {
  std::size_t screening_normal = 3;
  std::size_t screening_validation = 3;
  std::size_t max_screening_nonexistent = 1;
  double max_validation_miss_rate = 0.25;
  // same-spot detector; not published, tune per experiment
  std::size_t same_spot_run = 8;
  double same_spot_radius_px = 100.0;
};

struct ImportAnnotsRules {
  double iou_threshold = 0.55;
  std::size_t validation_designs = 3;
  std::size_t min_validation_correct = 2;
  std::size_t max_empty_images = 1;
};

struct BubbleViewRules {
  std::size_t min_description_chars = 150;
  double min_clicks_description = 10.0;
  double min_clicks_free_view = 2.0;
  double iqr_multiplier = 1.5;
  std::size_t min_cohort_for_iqr = 4;
};

struct ValidationConfig {
  ZoomRules zoom;
  CodeChartsRules codecharts;
  ImportAnnotsRules importannots;
  BubbleViewRules bubbleview;
};

// ---------------------------------------------------------------------------
// ZoomMaps.

using StimulusLookup = std::map<std::string, Stimulus>;

inline const Stimulus& lookup(const StimulusLookup& stimuli, const std::string& id) {
  auto it = stimuli.find(id);
  if (it == stimuli.end()) throw ReferentialIntegrity("unknown stimulus '" + id + "'");
  return it->second;
}

/// One participant's sessions, one per image.
inline QualityVerdict validate_zoom(const std::vector<heatmaps::ZoomSession>& sessions,
                                    const StimulusLookup& stimuli, const ZoomRules& cfg = {}) {
  if (sessions.empty()) throw EmptyInput("validate_zoom needs at least one session");
  QualityVerdict v{sessions.front().participant_id, Interface::zoommaps, true, {}};
  std::size_t long_enough = 0, zoomed = 0;
  double total = 0.0;
  for (const auto& s : sessions) {
    const Stimulus& stim = lookup(stimuli, s.stimulus_id);
    double d = s.duration_ms();
    total += d;
    if (d >= cfg.min_image_time_ms) ++long_enough;
    bool any_zoom = std::any_of(s.events.begin(), s.events.end(), [&](const heatmaps::ZoomEvent& e) {
      return heatmaps::zoom_level(e.viewport, stim) > 1.0;
    });
    if (any_zoom) ++zoomed;
  }
  const double n = static_cast<double>(sessions.size());
  double time_frac = static_cast<double>(long_enough) / n;
  double zoom_frac = static_cast<double>(zoomed) / n;
  v.add({"image_time_pct", time_frac, cfg.min_image_time_frac, time_frac >= cfg.min_image_time_frac, true,
         "share of images viewed >= " + format_double(cfg.min_image_time_ms) + " ms"});
  v.add({"total_time", total, cfg.min_total_time_ms, total >= cfg.min_total_time_ms, true, "ms"});
  v.add({"zoom_pct", zoom_frac, cfg.min_zoom_frac, zoom_frac >= cfg.min_zoom_frac, true,
         "share of images with zoom level > 1"});
  return v;
}

// ---------------------------------------------------------------------------
// CodeCharts.

enum class TrialRole { normal, validation };

inline std::string_view to_string(TrialRole r) { return r == TrialRole::normal ? "normal" : "validation"; }
inline TrialRole parse_trial_role(std::string_view s) {
  if (s == "normal") return TrialRole::normal;
  if (s == "validation") return TrialRole::validation;
  throw ParameterError("unknown trial role '" + std::string(s) + "'");
}

struct ResolvedTrial {
  TrialRole role = TrialRole::normal;
  codecharts::Resolution resolution;
};

/// The screening block: exactly the configured normal and validation trials.
inline QualityVerdict validate_codecharts_screening(const std::vector<ResolvedTrial>& trials,
                                                    const CodeChartsRules& cfg = {},
                                                    std::string participant_id = {}) {
  std::size_t normal = 0, validation = 0, correct = 0, nonexistent = 0;
  for (const auto& t : trials) {
    (t.role == TrialRole::normal ? normal : validation) += 1;
    if (t.role == TrialRole::validation && t.resolution.status == codecharts::ReportStatus::validation_correct) {
      ++correct;
    }
    if (t.resolution.status == codecharts::ReportStatus::nonexistent) ++nonexistent;
  }
  if (normal != cfg.screening_normal || validation != cfg.screening_validation) {
    throw ParameterError("screening block must hold " + std::to_string(cfg.screening_normal) + " normal and " +
                         std::to_string(cfg.screening_validation) + " validation trials");
  }
  QualityVerdict v{std::move(participant_id), Interface::codecharts, true, {}};
  v.add({"screening_validation", static_cast<double>(correct), static_cast<double>(validation),
         correct == validation, true, "all validation codes must be correct"});
  v.add({"screening_nonexistent", static_cast<double>(nonexistent),
         static_cast<double>(cfg.max_screening_nonexistent), nonexistent <= cfg.max_screening_nonexistent, true,
         "at most this many nonexistent codes"});
  return v;
}

/// Longest run of consecutive points that all lie within radius of the run's centroid.
inline std::size_t longest_same_spot_run(const std::vector<Point>& pts, double radius) {
  const std::size_t n = pts.size();
  for (std::size_t len = n; len >= 1; --len) {
    for (std::size_t start = 0; start + len <= n; ++start) {
      Point c{0.0, 0.0};
      for (std::size_t i = start; i < start + len; ++i) {
        c.x += pts[i].x;
        c.y += pts[i].y;
      }
      c.x /= static_cast<double>(len);
      c.y /= static_cast<double>(len);
      bool all = true;
      for (std::size_t i = start; i < start + len && all; ++i) all = distance(pts[i], c) <= radius;
      if (all) return len;
    }
  }
  return 0;
}

/// Retroactive checks over a participant's full trial sequence (in presentation order).
inline QualityVerdict validate_codecharts_full(const std::vector<ResolvedTrial>& trials,
                                               const CodeChartsRules& cfg = {},
                                               std::string participant_id = {}) {
  std::size_t validation = 0, missed = 0;
  std::vector<Point> gaze;
  for (const auto& t : trials) {
    if (t.role == TrialRole::validation) {
      ++validation;
      if (t.resolution.status != codecharts::ReportStatus::validation_correct) ++missed;
    } else if (t.resolution.center) {
      gaze.push_back(*t.resolution.center);
    }
  }
  if (validation == 0) throw ParameterError("validate_codecharts_full needs at least one validation trial");
  QualityVerdict v{std::move(participant_id), Interface::codecharts, true, {}};
  double miss_rate = static_cast<double>(missed) / static_cast<double>(validation);
  v.add({"validation_miss_rate", miss_rate, cfg.max_validation_miss_rate, !(miss_rate > cfg.max_validation_miss_rate),
         true, "fails when strictly above the threshold"});
  auto run = longest_same_spot_run(gaze, cfg.same_spot_radius_px);
  v.add({"same_spot", static_cast<double>(run), static_cast<double>(cfg.same_spot_run), run < cfg.same_spot_run, true,
         "longest run of reports within " + format_double(cfg.same_spot_radius_px) + " px of their centroid"});
  return v;
}

// ---------------------------------------------------------------------------
// ImportAnnots.

/// Intersection over union of two binary masks; 0 when both are empty.
inline double iou(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw ParameterError("iou needs masks of equal dimensions");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    bool x = a[i] != 0, y = b[i] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline bool mask_empty(const Mask& m) {
  return std::none_of(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; });
}

struct ValidationAnnotation {
  Mask annotation;
  Mask truth;
};

struct ImportAnnotsSubmission {
  std::string participant_id;
  std::vector<Mask> image_masks;  // regular designs
  std::vector<ValidationAnnotation> validations;
};

inline QualityVerdict validate_importannots(const ImportAnnotsSubmission& sub, const ImportAnnotsRules& cfg = {}) {
  if (sub.validations.size() < cfg.validation_designs) {
    throw ParameterError("participant '" + sub.participant_id + "' has " + std::to_string(sub.validations.size()) +
                         " validation designs, " + std::to_string(cfg.validation_designs) + " required");
  }
  QualityVerdict v{sub.participant_id, Interface::importannots, true, {}};
  auto empty = static_cast<std::size_t>(std::count_if(sub.image_masks.begin(), sub.image_masks.end(), mask_empty));
  v.add({"empty_images", static_cast<double>(empty), static_cast<double>(cfg.max_empty_images),
         empty <= cfg.max_empty_images, true, "images with no annotation"});
  std::size_t correct = 0;
  for (const auto& va : sub.validations) {
    if (iou(va.annotation, va.truth) >= cfg.iou_threshold) ++correct;
  }
  v.add({"validation_iou", static_cast<double>(correct), static_cast<double>(cfg.min_validation_correct),
         correct >= cfg.min_validation_correct, true,
         "validation designs with IoU >= " + format_double(cfg.iou_threshold)});
  return v;
}

// ---------------------------------------------------------------------------
// BubbleView.

inline std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

/// Quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw EmptyInput("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  double h = (static_cast<double>(values.size()) - 1.0) * p;
  auto lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct BubbleParticipant {
  std::string participant_id;
  std::vector<heatmaps::ClickSession> sessions;

  double clicks_per_image() const {
    if (sessions.empty()) return 0.0;
    std::size_t total = 0;
    for (const auto& s : sessions) total += s.clicks.size();
    return static_cast<double>(total) / static_cast<double>(sessions.size());
  }
};

/// Verdicts for a whole cohort; the IQR rule compares each participant's clicks per image
/// against the others.
inline std::vector<QualityVerdict> validate_bubbleview(const std::vector<BubbleParticipant>& cohort,
                                                       const BubbleViewRules& cfg = {}) {
  std::vector<double> rates;
  rates.reserve(cohort.size());
  for (const auto& p : cohort) rates.push_back(p.clicks_per_image());
  const bool iqr_active = cohort.size() >= cfg.min_cohort_for_iqr;
  double lo = 0.0, hi = 0.0;
  if (iqr_active) {
    double q1 = quantile(rates, 0.25), q3 = quantile(rates, 0.75);
    lo = q1 - cfg.iqr_multiplier * (q3 - q1);
    hi = q3 + cfg.iqr_multiplier * (q3 - q1);
  }

  std::vector<QualityVerdict> out;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& p = cohort[i];
    QualityVerdict v{p.participant_id, Interface::bubbleview, true, {}};
    if (p.sessions.empty()) {
      v.add({"sessions", 0.0, 1.0, false, true, "no sessions submitted"});
      out.push_back(std::move(v));
      continue;
    }
    std::optional<std::size_t> shortest;
    std::size_t desc_images = 0, desc_clicks = 0, free_images = 0, free_clicks = 0;
    for (const auto& s : p.sessions) {
      if (s.task == heatmaps::BubbleTask::description) {
        std::size_t len = s.description ? utf8_length(*s.description) : 0;
        shortest = shortest ? std::min(*shortest, len) : len;
        ++desc_images;
        desc_clicks += s.clicks.size();
      } else {
        ++free_images;
        free_clicks += s.clicks.size();
      }
    }
    if (shortest) {
      v.add({"description_chars", static_cast<double>(*shortest), static_cast<double>(cfg.min_description_chars),
             *shortest >= cfg.min_description_chars, true, "shortest description"});
    }
    if (desc_images) {
      double rate = static_cast<double>(desc_clicks) / static_cast<double>(desc_images);
      v.add({"clicks_description", rate, cfg.min_clicks_description, rate >= cfg.min_clicks_description, true,
             "mean clicks per description image"});
    }
    if (free_images) {
      double rate = static_cast<double>(free_clicks) / static_cast<double>(free_images);
      v.add({"clicks_free_view", rate, cfg.min_clicks_free_view, rate >= cfg.min_clicks_free_view, true,
             "mean clicks per free-view image"});
    }
    if (iqr_active) {
      bool inside = rates[i] >= lo && rates[i] <= hi;
      v.add({"click_iqr", rates[i], rates[i] < lo ? lo : hi, inside, true,
             "allowed range [" + format_double(lo) + ", " + format_double(hi) + "]"});
    } else {
      v.add({"click_iqr", rates[i], 0.0, true, false,
             "skipped: cohort size " + std::to_string(cohort.size()) + " < " + std::to_string(cfg.min_cohort_for_iqr)});
    }
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON.

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline void to_json(json& j, const Reason& r) {
  j = json{{"rule_id", r.rule_id},       {"observed", number_or_null(r.observed)},
           {"threshold", number_or_null(r.threshold)}, {"passed", r.passed},
           {"mandatory", r.mandatory},   {"note", r.note}};
}

inline void to_json(json& j, const QualityVerdict& v) {
  j = json{{"participant_id", v.participant_id},
           {"interface", std::string(attnlab::to_string(v.interface))},
           {"passed", v.passed},
           {"reasons", v.reasons}};
}

inline void to_json(json& j, const ValidationConfig& c) {
  j = json{{"zoommaps",
            {{"min_image_time_ms", c.zoom.min_image_time_ms},
             {"min_image_time_frac", c.zoom.min_image_time_frac},
             {"min_total_time_ms", c.zoom.min_total_time_ms},
             {"min_zoom_frac", c.zoom.min_zoom_frac}}},
           {"codecharts",
            {{"screening_normal", c.codecharts.screening_normal},
             {"screening_validation", c.codecharts.screening_validation},
             {"max_screening_nonexistent", c.codecharts.max_screening_nonexistent},
             {"max_validation_miss_rate", c.codecharts.max_validation_miss_rate},
             {"same_spot_run", c.codecharts.same_spot_run},
             {"same_spot_radius_px", c.codecharts.same_spot_radius_px}}},
           {"importannots",
            {{"iou_threshold", c.importannots.iou_threshold},
             {"validation_designs", c.importannots.validation_designs},
             {"min_validation_correct", c.importannots.min_validation_correct},
             {"max_empty_images", c.importannots.max_empty_images}}},
           {"bubbleview",
            {{"min_description_chars", c.bubbleview.min_description_chars},
             {"min_clicks_description", c.bubbleview.min_clicks_description},
             {"min_clicks_free_view", c.bubbleview.min_clicks_free_view},
             {"iqr_multiplier", c.bubbleview.iqr_multiplier},
             {"min_cohort_for_iqr", c.bubbleview.min_cohort_for_iqr}}}};
}

inline void from_json(const json& j, ValidationConfig& c) {
  ValidationConfig d;
  auto section = [&](const char* name) { return j.contains(name) ? j.at(name) : json::object(); };
  auto z = section("zoommaps");
  c.zoom.min_image_time_ms = z.value("min_image_time_ms", d.zoom.min_image_time_ms);
  c.zoom.min_image_time_frac = z.value("min_image_time_frac", d.zoom.min_image_time_frac);
  c.zoom.min_total_time_ms = z.value("min_total_time_ms", d.zoom.min_total_time_ms);
  c.zoom.min_zoom_frac = z.value("min_zoom_frac", d.zoom.min_zoom_frac);
  auto cc = section("codecharts");
  c.codecharts.screening_normal = cc.value("screening_normal", d.codecharts.screening_normal);
  c.codecharts.screening_validation = cc.value("screening_validation", d.codecharts.screening_validation);
  c.codecharts.max_screening_nonexistent = cc.value("max_screening_nonexistent", d.codecharts.max_screening_nonexistent);
  c.codecharts.max_validation_miss_rate = cc.value("max_validation_miss_rate", d.codecharts.max_validation_miss_rate);
  c.codecharts.same_spot_run = cc.value("same_spot_run", d.codecharts.same_spot_run);
  c.codecharts.same_spot_radius_px = cc.value("same_spot_radius_px", d.codecharts.same_spot_radius_px);
  auto ia = section("importannots");
  c.importannots.iou_threshold = ia.value("iou_threshold", d.importannots.iou_threshold);
  c.importannots.validation_designs = ia.value("validation_designs", d.importannots.validation_designs);
  c.importannots.min_validation_correct = ia.value("min_validation_correct", d.importannots.min_validation_correct);
  c.importannots.max_empty_images = ia.value("max_empty_images", d.importannots.max_empty_images);
  auto bv = section("bubbleview");
  c.bubbleview.min_description_chars = bv.value("min_description_chars", d.bubbleview.min_description_chars);
  c.bubbleview.min_clicks_description = bv.value("min_clicks_description", d.bubbleview.min_clicks_description);
  c.bubbleview.min_clicks_free_view = bv.value("min_clicks_free_view", d.bubbleview.min_clicks_free_view);
  c.bubbleview.iqr_multiplier = bv.value("iqr_multiplier", d.bubbleview.iqr_multiplier);
  c.bubbleview.min_cohort_for_iqr = bv.value("min_cohort_for_iqr", d.bubbleview.min_cohort_for_iqr);
  auto frac_ok = [](double f) { return f >= 0.0 && f <= 1.0; };
  if (!frac_ok(c.zoom.min_image_time_frac) || !frac_ok(c.zoom.min_zoom_frac) ||
      !frac_ok(c.codecharts.max_validation_miss_rate) || !frac_ok(c.importannots.iou_threshold)) {
    throw ConfigError("validation fractions must lie in [0, 1]");
  }
  if (c.zoom.min_image_time_ms < 0 || c.zoom.min_total_time_ms < 0) {
    throw ConfigError("validation times must be non-negative");
  }
}

}  // namespace attnlab::quality

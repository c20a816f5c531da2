#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "json.hpp"

#include "attnlab/codecharts.hpp"
#include "attnlab/core/error.hpp"
#include "attnlab/core/io.hpp"
#include "attnlab/core/rng.hpp"
#include "attnlab/heatmaps.hpp"
#include "attnlab/quality.hpp"

namespace attnlab::service {

using nlohmann::json;

struct AssignmentConfig {
  /// 0 means one trial per regular stimulus.
  std::size_t codecharts_trials = 48;
  /// Share of all trials (screening included) that are validation trials.
  double validation_rate = 0.25;
  double image_exposure_ms = 3000.0;
  double chart_exposure_ms = 400.0;
  double fixation_cross_ms = 500.0;
  double zoom_view_ms = 10000.0;
  double annotation_limit_ms = 60000.0;
  double bubble_radius_px = 40.0;
  heatmaps::BubbleTask bubble_task = heatmaps::BubbleTask::free_view;
};

struct HeatmapConfig {
  double codecharts_sigma = heatmaps::kCodeChartsSigma;
  double bubbleview_sigma = heatmaps::kDefaultPointSigma;
  double fixation_sigma = heatmaps::kDefaultPointSigma;
};

/// Everything that influences assignments, verdicts or heatmaps.
struct ServiceConfig {
  AssignmentConfig assignment;
  codecharts::ChartParams chart;
  quality::ValidationConfig validation;
  HeatmapConfig heatmap;
};

inline void to_json(json& j, const AssignmentConfig& c) {
  j = json{{"codecharts_trials", c.codecharts_trials}, {"validation_rate", c.validation_rate},
           {"image_exposure_ms", c.image_exposure_ms}, {"chart_exposure_ms", c.chart_exposure_ms},
           {"fixation_cross_ms", c.fixation_cross_ms}, {"zoom_view_ms", c.zoom_view_ms},
           {"annotation_limit_ms", c.annotation_limit_ms}, {"bubble_radius_px", c.bubble_radius_px},
           {"bubble_task", heatmaps::to_string(c.bubble_task)}};
}

inline void from_json(const json& j, AssignmentConfig& c) {
  AssignmentConfig d;
  c.codecharts_trials = j.value("codecharts_trials", d.codecharts_trials);
  c.validation_rate = j.value("validation_rate", d.validation_rate);
  c.image_exposure_ms = j.value("image_exposure_ms", d.image_exposure_ms);
  c.chart_exposure_ms = j.value("chart_exposure_ms", d.chart_exposure_ms);
  c.fixation_cross_ms = j.value("fixation_cross_ms", d.fixation_cross_ms);
  c.zoom_view_ms = j.value("zoom_view_ms", d.zoom_view_ms);
  c.annotation_limit_ms = j.value("annotation_limit_ms", d.annotation_limit_ms);
  c.bubble_radius_px = j.value("bubble_radius_px", d.bubble_radius_px);
  c.bubble_task = heatmaps::parse_bubble_task(j.value("bubble_task", std::string(heatmaps::to_string(d.bubble_task))));
  if (!(c.validation_rate >= 0.0 && c.validation_rate <= 1.0)) throw ConfigError("validation_rate must lie in [0, 1]");
  for (double v : {c.image_exposure_ms, c.chart_exposure_ms, c.fixation_cross_ms, c.zoom_view_ms,
                   c.annotation_limit_ms, c.bubble_radius_px}) {
    if (!(v >= 0.0)) throw ConfigError("assignment timings and radii must be non-negative");
  }
}

inline void to_json(json& j, const HeatmapConfig& c) {
  j = json{{"codecharts_sigma", c.codecharts_sigma}, {"bubbleview_sigma", c.bubbleview_sigma},
           {"fixation_sigma", c.fixation_sigma}};
}

inline void from_json(const json& j, HeatmapConfig& c) {
  HeatmapConfig d;
  c.codecharts_sigma = j.value("codecharts_sigma", d.codecharts_sigma);
  c.bubbleview_sigma = j.value("bubbleview_sigma", d.bubbleview_sigma);
  c.fixation_sigma = j.value("fixation_sigma", d.fixation_sigma);
  if (!(c.codecharts_sigma > 0 && c.bubbleview_sigma > 0 && c.fixation_sigma > 0)) {
    throw ConfigError("heatmap sigmas must be positive");
  }
}

inline void to_json(json& j, const ServiceConfig& c) {
  j = json{{"assignment", c.assignment}, {"chart", c.chart}, {"validation", c.validation}, {"heatmap", c.heatmap}};
}

inline void from_json(const json& j, ServiceConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    c.assignment = j.value("assignment", AssignmentConfig{});
    c.chart = j.value("chart", codecharts::ChartParams{});
    c.validation = j.value("validation", quality::ValidationConfig{});
    c.heatmap = j.value("heatmap", HeatmapConfig{});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  try {
    codecharts::check_params(c.chart);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

inline ServiceConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j.get<ServiceConfig>();
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Stable fingerprint of the effective configuration (keys are serialized sorted).
inline std::string config_hash(const ServiceConfig& c) { return hex64(fnv1a(json(c).dump())); }

}  // namespace attnlab::service

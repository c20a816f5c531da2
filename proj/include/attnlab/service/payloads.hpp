#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "attnlab/codecharts.hpp"
#include "attnlab/core/error.hpp"
#include "attnlab/core/types.hpp"
#include "attnlab/heatmaps.hpp"

namespace attnlab::service {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Run-length masks: [start, length] pairs of foreground runs over row-major pixels.

using RunLengths = std::vector<std::pair<std::uint64_t, std::uint64_t>>;

inline RunLengths encode_rle(const Mask& m) {
  RunLengths runs;
  std::size_t i = 0;
  while (i < m.size()) {
    if (!m[i]) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < m.size() && m[i]) ++i;
    runs.emplace_back(start, i - start);
  }
  return runs;
}

inline Mask decode_rle(const RunLengths& runs, std::size_t width, std::size_t height) {
  Mask m(width, height, 0);
  std::uint64_t prev_end = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    auto [start, len] = runs[k];
    const std::string path = "mask_rle[" + std::to_string(k) + "]";
    if (len == 0) throw SchemaError(path, "run length must be positive");
    if (start < prev_end) throw SchemaError(path, "runs must be sorted and non-overlapping");
    if (start > m.size() || len > m.size() - start) throw SchemaError(path, "run exceeds the image");
    for (std::uint64_t i = start; i < start + len; ++i) m[i] = 1;
    prev_end = start + len;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Schema helpers. Every failure names the offending field.

namespace schema {

inline std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}
inline std::string index(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

inline const json& member(const json& obj, const std::string& key, const std::string& base) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(join(base, key), "required field missing");
  return *it;
}

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "$" : path, "expected an object");
}

inline std::string string_field(const json& obj, const std::string& key, const std::string& base,
                                bool allow_empty = false) {
  const json& v = member(obj, key, base);
  if (!v.is_string()) throw SchemaError(join(base, key), "expected a string");
  auto s = v.get<std::string>();
  if (!allow_empty && s.empty()) throw SchemaError(join(base, key), "must not be empty");
  return s;
}

inline double number_field(const json& obj, const std::string& key, const std::string& base) {
  const json& v = member(obj, key, base);
  if (!v.is_number()) throw SchemaError(join(base, key), "expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(join(base, key), "must be finite");
  return d;
}

inline const json& array_field(const json& obj, const std::string& key, const std::string& base) {
  const json& v = member(obj, key, base);
  if (!v.is_array()) throw SchemaError(join(base, key), "expected an array");
  return v;
}

}  // namespace schema

// ---------------------------------------------------------------------------
// Decoded payloads.

struct PayloadHeader {
  std::string assignment_id;
  std::string participant_id;
  std::string submission_id;
};

struct CodeChartsTrial {
  std::string stimulus_id;
  std::string chart_id;
  std::string typed_code;
  double response_t_ms = 0.0;
};

struct CodeChartsSubmission {
  std::string participant_id;
  std::vector<CodeChartsTrial> trials;
};

using StimulusLookup = std::map<std::string, Stimulus>;

inline PayloadHeader decode_header(const json& j) {
  schema::require_object(j, "");
  return {schema::string_field(j, "assignment_id", ""), schema::string_field(j, "participant_id", ""),
          schema::string_field(j, "submission_id", "")};
}

inline const Stimulus& payload_stimulus(const json& obj, const std::string& base, const StimulusLookup& stimuli) {
  auto id = schema::string_field(obj, "stimulus_id", base);
  auto it = stimuli.find(id);
  if (it == stimuli.end()) throw SchemaError(schema::join(base, "stimulus_id"), "unknown stimulus '" + id + "'");
  return it->second;
}

inline heatmaps::ZoomSession decode_zoom(const json& j, const StimulusLookup& stimuli) {
  auto header = decode_header(j);
  const Stimulus& s = payload_stimulus(j, "", stimuli);
  heatmaps::ZoomSession session{header.participant_id, s.id, {}, std::nullopt};
  const json& events = schema::array_field(j, "events", "");
  if (events.empty()) throw SchemaError("events", "at least one event required");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string base = schema::index("events", i);
    schema::require_object(events[i], base);
    heatmaps::ZoomEvent e{schema::number_field(events[i], "t_ms", base),
                          {schema::number_field(events[i], "x", base), schema::number_field(events[i], "y", base),
                           schema::number_field(events[i], "w", base), schema::number_field(events[i], "h", base)}};
    if (!(e.viewport.w > 0)) throw SchemaError(base + ".w", "must be positive");
    if (!(e.viewport.h > 0)) throw SchemaError(base + ".h", "must be positive");
    if (!(heatmaps::clip_to_image(e.viewport, s).area() > 0)) throw SchemaError(base, "viewport does not overlap the image");
    if (i > 0 && !(e.t_ms > session.events.back().t_ms)) throw SchemaError(base + ".t_ms", "timestamps must increase");
    session.events.push_back(e);
  }
  if (j.contains("session_end_ms") && !j.at("session_end_ms").is_null()) {
    double end = schema::number_field(j, "session_end_ms", "");
    if (end < session.events.back().t_ms) throw SchemaError("session_end_ms", "precedes the last event");
    session.session_end_ms = end;
  }
  return session;
}

inline heatmaps::ClickSession decode_bubble(const json& j, const StimulusLookup& stimuli) {
  auto header = decode_header(j);
  const Stimulus& s = payload_stimulus(j, "", stimuli);
  heatmaps::ClickSession session{header.participant_id, s.id, {}, std::nullopt, heatmaps::BubbleTask::free_view};
  auto task = schema::string_field(j, "task", "");
  try {
    session.task = heatmaps::parse_bubble_task(task);
  } catch (const ParameterError&) {
    throw SchemaError("task", "expected 'free_view' or 'description'");
  }
  const json& clicks = schema::array_field(j, "clicks", "");
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    const std::string base = schema::index("clicks", i);
    schema::require_object(clicks[i], base);
    heatmaps::Click c{schema::number_field(clicks[i], "t_ms", base), schema::number_field(clicks[i], "x", base),
                      schema::number_field(clicks[i], "y", base)};
    if (!(c.x >= 0 && c.x < static_cast<double>(s.width_px))) throw SchemaError(base + ".x", "outside the image");
    if (!(c.y >= 0 && c.y < static_cast<double>(s.height_px))) throw SchemaError(base + ".y", "outside the image");
    if (i > 0 && c.t_ms < session.clicks.back().t_ms) throw SchemaError(base + ".t_ms", "timestamps must not decrease");
    session.clicks.push_back(c);
  }
  if (j.contains("description") && !j.at("description").is_null()) {
    session.description = schema::string_field(j, "description", "", true);
  }
  return session;
}

inline heatmaps::MaskEntry decode_importannots(const json& j, const StimulusLookup& stimuli) {
  auto header = decode_header(j);
  const Stimulus& s = payload_stimulus(j, "", stimuli);
  heatmaps::MaskTool tool{};
  try {
    tool = heatmaps::parse_mask_tool(schema::string_field(j, "tool", ""));
  } catch (const ParameterError&) {
    throw SchemaError("tool", "expected 'stroke_fill', 'polygon_fill' or 'regular_stroke'");
  }
  const json& rle = schema::array_field(j, "mask_rle", "");
  RunLengths runs;
  for (std::size_t i = 0; i < rle.size(); ++i) {
    const json& r = rle[i];
    auto non_negative = [](const json& v) { return v.is_number_integer() && v.get<std::int64_t>() >= 0; };
    if (!r.is_array() || r.size() != 2 || !non_negative(r[0]) || !non_negative(r[1])) {
      throw SchemaError(schema::index("mask_rle", i), "expected a [start, length] pair of non-negative integers");
    }
    runs.emplace_back(r[0].get<std::uint64_t>(), r[1].get<std::uint64_t>());
  }
  return {header.participant_id, s.id, decode_rle(runs, s.width_px, s.height_px), tool};
}

inline CodeChartsSubmission decode_codecharts(const json& j, const StimulusLookup& stimuli,
                                              const heatmaps::ChartLookup& charts) {
  auto header = decode_header(j);
  CodeChartsSubmission sub{header.participant_id, {}};
  const json& trials = schema::array_field(j, "trials", "");
  if (trials.empty()) throw SchemaError("trials", "at least one trial required");
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const std::string base = schema::index("trials", i);
    schema::require_object(trials[i], base);
    CodeChartsTrial t;
    t.stimulus_id = payload_stimulus(trials[i], base, stimuli).id;
    t.chart_id = schema::string_field(trials[i], "chart_id", base);
    if (!charts.count(t.chart_id)) throw SchemaError(base + ".chart_id", "unknown chart '" + t.chart_id + "'");
    t.typed_code = schema::string_field(trials[i], "typed_code", base, true);
    t.response_t_ms = schema::number_field(trials[i], "response_t_ms", base);
    if (t.response_t_ms < 0) throw SchemaError(base + ".response_t_ms", "must be non-negative");
    sub.trials.push_back(std::move(t));
  }
  return sub;
}

/// Full schema check for one interface; throws SchemaError with the field path.
inline void validate_payload(Interface iface, const json& j, const StimulusLookup& stimuli,
                             const heatmaps::ChartLookup& charts) {
  switch (iface) {
    case Interface::zoommaps: decode_zoom(j, stimuli); break;
    case Interface::codecharts: decode_codecharts(j, stimuli, charts); break;
    case Interface::importannots: decode_importannots(j, stimuli); break;
    case Interface::bubbleview: decode_bubble(j, stimuli); break;
  }
}

// ---------------------------------------------------------------------------
// Encoders (used by the simulator and tests).

inline json header_json(const PayloadHeader& h) {
  return json{{"assignment_id", h.assignment_id}, {"participant_id", h.participant_id},
              {"submission_id", h.submission_id}};
}

inline json encode_zoom(const PayloadHeader& h, const heatmaps::ZoomSession& s) {
  json j = header_json(h);
  j["stimulus_id"] = s.stimulus_id;
  json events = json::array();
  for (const auto& e : s.events) {
    events.push_back({{"t_ms", e.t_ms}, {"x", e.viewport.x}, {"y", e.viewport.y}, {"w", e.viewport.w}, {"h", e.viewport.h}});
  }
  j["events"] = std::move(events);
  j["session_end_ms"] = s.session_end_ms ? json(*s.session_end_ms) : json(nullptr);
  return j;
}

inline json encode_bubble(const PayloadHeader& h, const heatmaps::ClickSession& s) {
  json j = header_json(h);
  j["stimulus_id"] = s.stimulus_id;
  json clicks = json::array();
  for (const auto& c : s.clicks) clicks.push_back({{"t_ms", c.t_ms}, {"x", c.x}, {"y", c.y}});
  j["clicks"] = std::move(clicks);
  j["description"] = s.description ? json(*s.description) : json(nullptr);
  j["task"] = std::string(heatmaps::to_string(s.task));
  return j;
}

inline json encode_importannots(const PayloadHeader& h, const heatmaps::MaskEntry& m) {
  json j = header_json(h);
  j["stimulus_id"] = m.stimulus_id;
  json runs = json::array();
  for (auto [start, len] : encode_rle(m.mask)) runs.push_back({start, len});
  j["mask_rle"] = std::move(runs);
  j["tool"] = std::string(heatmaps::to_string(m.tool));
  return j;
}

inline json encode_codecharts(const PayloadHeader& h, const std::vector<CodeChartsTrial>& trials) {
  json j = header_json(h);
  json arr = json::array();
  for (const auto& t : trials) {
    arr.push_back({{"stimulus_id", t.stimulus_id}, {"chart_id", t.chart_id}, {"typed_code", t.typed_code},
                   {"response_t_ms", t.response_t_ms}});
  }
  j["trials"] = std::move(arr);
  return j;
}

}  // namespace attnlab::service

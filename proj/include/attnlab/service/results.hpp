#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "attnlab/codecharts.hpp"
#include "attnlab/core/error.hpp"
#include "attnlab/core/geometry.hpp"
#include "attnlab/core/types.hpp"
#include "attnlab/heatmaps.hpp"
#include "attnlab/quality.hpp"
#include "attnlab/service/config.hpp"
#include "attnlab/service/payloads.hpp"
#include "attnlab/service/store.hpp"

namespace attnlab::service {

using quality::QualityVerdict;

/// Decoded logs of one interface, grouped by participant. Within a participant,
/// submissions are ordered by submission_id so arrival order does not matter.
struct Cohort {
  Interface interface = Interface::zoommaps;
  std::map<std::string, std::vector<heatmaps::ZoomSession>> zoom;
  std::map<std::string, std::vector<CodeChartsTrial>> codecharts;
  std::map<std::string, std::vector<heatmaps::MaskEntry>> masks;
  std::map<std::string, std::vector<heatmaps::ClickSession>> clicks;

  std::vector<std::string> participants() const {
    std::vector<std::string> out;
    auto collect = [&](const auto& m) {
      for (const auto& [pid, v] : m) out.push_back(pid);
    };
    collect(zoom);
    collect(codecharts);
    collect(masks);
    collect(clicks);
    return out;
  }
};

inline Cohort load_cohort(const LogStore& store, Interface iface) {
  auto envelopes = store.envelopes(iface);
  std::sort(envelopes.begin(), envelopes.end(), [](const LogEnvelope& a, const LogEnvelope& b) {
    return std::tie(a.participant_id, a.submission_id) < std::tie(b.participant_id, b.submission_id);
  });
  const auto stimuli = store.stimulus_lookup();
  const auto charts = store.charts();
  Cohort c{iface, {}, {}, {}, {}};
  for (const auto& e : envelopes) {
    switch (iface) {
      case Interface::zoommaps: c.zoom[e.participant_id].push_back(decode_zoom(e.payload, stimuli)); break;
      case Interface::bubbleview: c.clicks[e.participant_id].push_back(decode_bubble(e.payload, stimuli)); break;
      case Interface::importannots: c.masks[e.participant_id].push_back(decode_importannots(e.payload, stimuli)); break;
      case Interface::codecharts: {
        auto sub = decode_codecharts(e.payload, stimuli, charts);
        auto& dst = c.codecharts[e.participant_id];
        dst.insert(dst.end(), sub.trials.begin(), sub.trials.end());
        break;
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Verdicts.

inline std::vector<quality::ResolvedTrial> resolve_trials(const std::vector<CodeChartsTrial>& trials,
                                                          const heatmaps::ChartLookup& charts) {
  std::vector<quality::ResolvedTrial> out;
  for (const auto& t : trials) {
    const auto& chart = charts.at(t.chart_id);
    out.push_back({chart.validation ? quality::TrialRole::validation : quality::TrialRole::normal,
                   codecharts::resolve_report(chart, t.typed_code)});
  }
  return out;
}

inline QualityVerdict codecharts_verdict(const std::string& pid, const std::vector<CodeChartsTrial>& trials,
                                         const heatmaps::ChartLookup& charts, const quality::CodeChartsRules& rules) {
  auto resolved = resolve_trials(trials, charts);
  QualityVerdict v{pid, Interface::codecharts, true, {}};
  const std::size_t block = rules.screening_normal + rules.screening_validation;
  std::vector<quality::ResolvedTrial> head(resolved.begin(), resolved.begin() + std::min(block, resolved.size()));
  auto n_val = static_cast<std::size_t>(std::count_if(head.begin(), head.end(), [](const auto& t) {
    return t.role == quality::TrialRole::validation;
  }));
  if (head.size() != block || n_val != rules.screening_validation) {
    v.add({"screening_block", static_cast<double>(head.size()), static_cast<double>(block), false, true,
           "first trials do not form a complete screening block"});
    return v;
  }
  for (auto& r : quality::validate_codecharts_screening(head, rules, pid).reasons) v.add(std::move(r));
  for (auto& r : quality::validate_codecharts_full(resolved, rules, pid).reasons) v.add(std::move(r));
  return v;
}

inline Mask truth_mask(const Stimulus& s) {
  Mask m(s.width_px, s.height_px, 0);
  for (const auto& e : s.elements) {
    Mask r = rasterize(e, s.width_px, s.height_px);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] |= r[i];
  }
  return m;
}

inline QualityVerdict importannots_verdict(const std::string& pid, const std::vector<heatmaps::MaskEntry>& masks,
                                           const StimulusLookup& stimuli, const quality::ImportAnnotsRules& rules) {
  quality::ImportAnnotsSubmission sub{pid, {}, {}};
  std::set<std::string> annotated;
  for (const auto& m : masks) {
    const Stimulus& s = stimuli.at(m.stimulus_id);
    if (s.kind == StimulusKind::validation && !s.elements.empty()) {
      sub.validations.push_back({m.mask, truth_mask(s)});
      annotated.insert(s.id);
    } else {
      sub.image_masks.push_back(m.mask);
    }
  }
  // designs the participant skipped count as empty annotations
  for (const auto& [id, s] : stimuli) {
    if (sub.validations.size() >= rules.validation_designs) break;
    if (s.kind == StimulusKind::validation && !s.elements.empty() && !annotated.count(id)) {
      sub.validations.push_back({Mask(s.width_px, s.height_px, 0), truth_mask(s)});
    }
  }
  if (sub.validations.size() < rules.validation_designs) {
    throw ConfigError("store holds fewer validation designs than the importannots rules require");
  }
  return quality::validate_importannots(sub, rules);
}

/// Verdict per participant for one interface, keyed by participant id.
inline std::map<std::string, QualityVerdict> compute_verdicts(const Cohort& cohort, const LogStore& store,
                                                              const ServiceConfig& cfg) {
  std::map<std::string, QualityVerdict> out;
  switch (cohort.interface) {
    case Interface::zoommaps: {
      const auto stimuli = store.stimulus_lookup();
      for (const auto& [pid, sessions] : cohort.zoom) out[pid] = quality::validate_zoom(sessions, stimuli, cfg.validation.zoom);
      break;
    }
    case Interface::codecharts: {
      const auto charts = store.charts();
      for (const auto& [pid, trials] : cohort.codecharts) {
        out[pid] = codecharts_verdict(pid, trials, charts, cfg.validation.codecharts);
      }
      break;
    }
    case Interface::importannots: {
      const auto stimuli = store.stimulus_lookup();
      for (const auto& [pid, masks] : cohort.masks) {
        out[pid] = importannots_verdict(pid, masks, stimuli, cfg.validation.importannots);
      }
      break;
    }
    case Interface::bubbleview: {
      std::vector<quality::BubbleParticipant> group;
      for (const auto& [pid, sessions] : cohort.clicks) group.push_back({pid, sessions});
      for (auto& v : quality::validate_bubbleview(group, cfg.validation.bubbleview)) out[v.participant_id] = std::move(v);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results.

struct ResultCounts {
  std::size_t submitted = 0;
  std::size_t passed = 0;
  std::size_t used = 0;
};

struct ResultSummary {
  std::string stimulus_id;
  Interface interface = Interface::zoommaps;
  std::string config_hash;
  ResultCounts counts;
  std::vector<QualityVerdict> verdicts;  // participants with data on this stimulus
  std::optional<AttentionHeatmap> heatmap;
};

inline json summary_json(const ResultSummary& r) {
  return json{{"stimulus_id", r.stimulus_id},
              {"interface", std::string(to_string(r.interface))},
              {"config_hash", r.config_hash},
              {"counts", {{"submitted", r.counts.submitted}, {"passed", r.counts.passed}, {"used", r.counts.used}}},
              {"verdicts", r.verdicts}};
}

/// Heatmap of one stimulus from the passing participants of a decoded cohort.
/// `only`, when given, restricts the cohort to those participant ids.
inline ResultSummary summarize_cohort(const Cohort& cohort, const std::map<std::string, QualityVerdict>& verdicts,
                                      const Stimulus& s, const heatmaps::ChartLookup& charts,
                                      const ServiceConfig& cfg, const std::set<std::string>* only = nullptr) {
  const Interface iface = cohort.interface;
  ResultSummary r{s.id, iface, config_hash(cfg), {}, {}, std::nullopt};

  std::set<std::string> used;
  auto consider = [&](const std::string& pid, bool has_data) {
    if (!has_data || (only && !only->count(pid))) return false;
    const auto& v = verdicts.at(pid);
    ++r.counts.submitted;
    r.verdicts.push_back(v);
    if (v.passed) ++r.counts.passed;
    return v.passed;
  };

  switch (iface) {
    case Interface::zoommaps: {
      std::vector<heatmaps::ZoomSession> sessions;
      for (const auto& [pid, list] : cohort.zoom) {
        std::vector<heatmaps::ZoomSession> mine;
        for (const auto& z : list) {
          if (z.stimulus_id == s.id) mine.push_back(z);
        }
        if (!consider(pid, !mine.empty())) continue;
        used.insert(pid);
        sessions.insert(sessions.end(), mine.begin(), mine.end());
      }
      if (!sessions.empty()) r.heatmap = heatmaps::zoom_heatmap(sessions, s);
      break;
    }
    case Interface::codecharts: {
      std::vector<Point> points;
      for (const auto& [pid, trials] : cohort.codecharts) {
        std::vector<const CodeChartsTrial*> mine;
        for (const auto& t : trials) {
          if (t.stimulus_id == s.id) mine.push_back(&t);
        }
        if (!consider(pid, !mine.empty())) continue;
        for (const auto* t : mine) {
          const auto& chart = charts.at(t->chart_id);
          if (chart.validation) continue;
          WindowMapping m = fit_to_window(s, chart.params.window_w, chart.params.window_h);
          heatmaps::CodeReport report{pid, s.id, t->chart_id, t->typed_code, t->response_t_ms};
          auto pts = heatmaps::codecharts_points({report}, charts, s, m);
          if (!pts.empty()) used.insert(pid);
          points.insert(points.end(), pts.begin(), pts.end());
        }
      }
      if (!points.empty()) {
        r.heatmap = heatmaps::blurred_points(points, s, cfg.heatmap.codecharts_sigma, Provenance::codecharts);
      }
      break;
    }
    case Interface::importannots: {
      heatmaps::MaskSet masks;
      for (const auto& [pid, list] : cohort.masks) {
        std::vector<heatmaps::MaskEntry> mine;
        for (const auto& m : list) {
          if (m.stimulus_id == s.id) mine.push_back(m);
        }
        if (!consider(pid, !mine.empty())) continue;
        used.insert(pid);
        masks.insert(masks.end(), mine.begin(), mine.end());
      }
      if (!masks.empty()) r.heatmap = heatmaps::importannots_heatmap(masks);
      break;
    }
    case Interface::bubbleview: {
      std::vector<heatmaps::ClickSession> sessions;
      std::size_t n_clicks = 0;
      for (const auto& [pid, list] : cohort.clicks) {
        std::vector<heatmaps::ClickSession> mine;
        for (const auto& c : list) {
          if (c.stimulus_id == s.id) mine.push_back(c);
        }
        if (!consider(pid, !mine.empty())) continue;
        for (const auto& c : mine) {
          if (!c.clicks.empty()) used.insert(pid);
          n_clicks += c.clicks.size();
        }
        sessions.insert(sessions.end(), mine.begin(), mine.end());
      }
      if (n_clicks > 0) r.heatmap = heatmaps::bubbleview_heatmap(sessions, s, cfg.heatmap.bubbleview_sigma);
      break;
    }
  }
  r.counts.used = used.size();
  return r;
}

/// Quality-filter the stored cohort, then build the heatmap from passing participants only.
/// The summary is returned even when nothing qualifies; the heatmap is then absent.
inline ResultSummary summarize(const LogStore& store, const std::string& stimulus_id, Interface iface,
                               const ServiceConfig& cfg) {
  const Stimulus s = store.stimulus(stimulus_id);
  const Cohort cohort = load_cohort(store, iface);
  return summarize_cohort(cohort, compute_verdicts(cohort, store, cfg), s, store.charts(), cfg);
}

/// As summarize(), but a missing heatmap is an error.
inline ResultSummary compute_results(const LogStore& store, const std::string& stimulus_id, Interface iface,
                                     const ServiceConfig& cfg) {
  auto r = summarize(store, stimulus_id, iface, cfg);
  if (!r.heatmap) throw EmptyInput("no qualifying data");
  return r;
}

}  // namespace attnlab::service

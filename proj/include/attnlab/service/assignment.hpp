#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "attnlab/codecharts.hpp"
#include "attnlab/core/error.hpp"
#include "attnlab/core/geometry.hpp"
#include "attnlab/core/rng.hpp"
#include "attnlab/core/types.hpp"
#include "attnlab/quality.hpp"
#include "attnlab/service/config.hpp"

namespace attnlab::service {

using quality::TrialRole;

struct Trial {
  std::string stimulus_id;
  TrialRole role = TrialRole::normal;
  json params = json::object();

  bool operator==(const Trial&) const = default;
};

struct TaskAssignment {
  std::string assignment_id;
  Interface interface = Interface::zoommaps;
  std::uint64_t seed = 0;
  std::vector<Trial> trials;
  std::string config_hash;

  bool operator==(const TaskAssignment&) const = default;
};

struct AssignmentBundle {
  TaskAssignment assignment;
  std::vector<codecharts::CodeChart> charts;
};

inline void to_json(json& j, const Trial& t) {
  j = json{{"stimulus_id", t.stimulus_id}, {"role", std::string(quality::to_string(t.role))}, {"params", t.params}};
}
inline void from_json(const json& j, Trial& t) {
  t.stimulus_id = j.at("stimulus_id").get<std::string>();
  t.role = quality::parse_trial_role(j.at("role").get<std::string>());
  t.params = j.value("params", json::object());
}
inline void to_json(json& j, const TaskAssignment& a) {
  j = json{{"assignment_id", a.assignment_id}, {"interface", std::string(to_string(a.interface))},
           {"seed", a.seed}, {"trials", a.trials}, {"config_hash", a.config_hash}};
}
inline void from_json(const json& j, TaskAssignment& a) {
  a.assignment_id = j.at("assignment_id").get<std::string>();
  a.interface = parse_interface(j.at("interface").get<std::string>());
  a.seed = j.value("seed", std::uint64_t{0});
  a.trials = j.at("trials").get<std::vector<Trial>>();
  a.config_hash = j.value("config_hash", std::string{});
}

inline std::string assignment_id_for(Interface iface, std::uint64_t seed) {
  return std::string(to_string(iface)) + "-" + hex64(derive_seed(seed, "assignment:" + std::string(to_string(iface))));
}

namespace detail {

/// Draw `count` items, reshuffling the pool each time it is exhausted.
template <typename T>
std::vector<T> cycle_draw(std::vector<T> pool, std::size_t count, Rng& rng) {
  std::vector<T> out;
  if (pool.empty()) return out;
  while (out.size() < count) {
    rng.shuffle(pool);
    for (const auto& p : pool) {
      if (out.size() == count) break;
      out.push_back(p);
    }
  }
  return out;
}

inline std::vector<const Stimulus*> of_kind(const std::vector<Stimulus>& stimuli, bool validation) {
  std::vector<const Stimulus*> out;
  for (const auto& s : stimuli) {
    if ((s.kind == StimulusKind::validation) == validation) out.push_back(&s);
  }
  return out;
}

inline AssignmentBundle build_codecharts(const std::vector<Stimulus>& stimuli, const ServiceConfig& cfg,
                                         TaskAssignment a, Rng& rng) {
  const auto& rules = cfg.validation.codecharts;
  const std::size_t screening = rules.screening_normal + rules.screening_validation;
  const std::size_t total = cfg.assignment.codecharts_trials;
  if (total < screening) {
    throw ConfigError("codecharts_trials (" + std::to_string(total) + ") is shorter than the screening block");
  }
  const auto interspersed = static_cast<std::size_t>(std::llround(cfg.assignment.validation_rate * static_cast<double>(total)));
  if (interspersed > total - screening) throw ConfigError("validation_rate leaves no room for the interspersed trials");

  auto regular = of_kind(stimuli, false);
  std::vector<const Stimulus*> cues;
  for (const auto* s : of_kind(stimuli, true)) {
    if (s->cue) cues.push_back(s);
  }
  const std::size_t n_validation = rules.screening_validation + interspersed;
  const std::size_t n_normal = total - n_validation;
  if (n_validation > 0 && cues.empty()) throw ConfigError("codecharts assignment needs validation stimuli with a cue");
  if (n_normal > 0 && regular.empty()) throw ConfigError("codecharts assignment needs at least one regular stimulus");

  auto normals = cycle_draw(regular, n_normal, rng);
  auto checks = cycle_draw(cues, n_validation, rng);

  // screening block first, then the rest with validation trials at random positions
  std::vector<TrialRole> head(rules.screening_normal, TrialRole::normal);
  head.insert(head.end(), rules.screening_validation, TrialRole::validation);
  rng.shuffle(head);
  std::vector<TrialRole> tail(total - screening - interspersed, TrialRole::normal);
  tail.insert(tail.end(), interspersed, TrialRole::validation);
  rng.shuffle(tail);
  head.insert(head.end(), tail.begin(), tail.end());

  AssignmentBundle bundle;
  std::size_t ni = 0, vi = 0;
  for (std::size_t i = 0; i < head.size(); ++i) {
    const Stimulus& s = head[i] == TrialRole::normal ? *normals[ni++] : *checks[vi++];
    const std::string chart_id = a.assignment_id + "-c" + std::to_string(i);
    const std::uint64_t chart_seed = derive_seed(a.seed, "chart:" + std::to_string(i));
    codecharts::CodeChart chart;
    if (head[i] == TrialRole::validation) {
      WindowMapping m = fit_to_window(s, cfg.chart.window_w, cfg.chart.window_h);
      chart = codecharts::generate_validation_chart(m.to_window(*s.cue), cfg.chart, chart_seed, std::nullopt, chart_id);
    } else {
      chart = codecharts::generate_codechart(cfg.chart, chart_seed, chart_id);
    }
    a.trials.push_back({s.id, head[i],
                        json{{"chart_id", chart_id},
                             {"exposure_ms", cfg.assignment.image_exposure_ms},
                             {"chart_exposure_ms", cfg.assignment.chart_exposure_ms},
                             {"fixation_cross_ms", cfg.assignment.fixation_cross_ms}}});
    bundle.charts.push_back(std::move(chart));
  }
  bundle.assignment = std::move(a);
  return bundle;
}

}  // namespace detail

/// Deterministic trial list for one participant session.
inline AssignmentBundle build_assignment(Interface iface, const std::vector<Stimulus>& stimuli,
                                         const ServiceConfig& cfg, std::uint64_t seed) {
  if (stimuli.empty()) throw EmptyInput("build_assignment needs at least one stimulus");
  TaskAssignment a{assignment_id_for(iface, seed), iface, seed, {}, config_hash(cfg)};
  Rng rng(derive_seed(seed, "trials"));
  if (iface == Interface::codecharts) return detail::build_codecharts(stimuli, cfg, std::move(a), rng);

  std::vector<const Stimulus*> order = detail::of_kind(stimuli, false);
  std::size_t n_validation = 0;
  if (iface == Interface::importannots) {
    for (const auto* s : detail::of_kind(stimuli, true)) {
      if (!s->elements.empty()) {
        order.push_back(s);
        ++n_validation;
      }
    }
    if (n_validation < cfg.validation.importannots.validation_designs) {
      throw ConfigError("importannots assignment needs " + std::to_string(cfg.validation.importannots.validation_designs) +
                        " validation designs with ground-truth elements, found " + std::to_string(n_validation));
    }
  }
  if (order.empty()) throw ConfigError("no regular stimuli to assign");
  rng.shuffle(order);
  for (const auto* s : order) {
    json params;
    switch (iface) {
      case Interface::zoommaps: params = {{"view_ms", cfg.assignment.zoom_view_ms}}; break;
      case Interface::importannots: params = {{"time_limit_ms", cfg.assignment.annotation_limit_ms}}; break;
      case Interface::bubbleview:
        params = {{"task", std::string(heatmaps::to_string(cfg.assignment.bubble_task))},
                  {"bubble_radius_px", cfg.assignment.bubble_radius_px}};
        break;
      case Interface::codecharts: break;
    }
    TrialRole role = s->kind == StimulusKind::validation ? TrialRole::validation : TrialRole::normal;
    a.trials.push_back({s->id, role, std::move(params)});
  }
  return {std::move(a), {}};
}

}  // namespace attnlab::service

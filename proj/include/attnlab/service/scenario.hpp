#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "attnlab/core/error.hpp"
#include "attnlab/core/io.hpp"
#include "attnlab/core/rng.hpp"
#include "attnlab/core/types.hpp"
#include "attnlab/simulate.hpp"
#include "attnlab/service/assignment.hpp"
#include "attnlab/service/config.hpp"
#include "attnlab/service/payloads.hpp"
#include "attnlab/service/store.hpp"

namespace attnlab::service {

/// A simulated study: stimuli with known ground truth, a participant pool and behavior
/// parameters. Loaded from JSON:
///   { "seed": 7, "interface": "codecharts", "participants": 20, "output": "logs",
///     "behavior": { "report_noise_px": 30, "miss_rate": 0.05, ... },
///     "config": { ...service config overrides... },
///     "stimuli": [ { "id": "s1", "width_px": 400, "height_px": 300, "kind": "natural",
///                    "gt": { "mixture": [ { "x": 100, "y": 80, "sigma": 20, "weight": 1 } ] },
///                    "element_weights": { "title": 0.9 } }, ... ] }
/// "gt" may instead be { "density_csv": "<path relative to the scenario file>" }.
struct Scenario {
  std::uint64_t seed = 0;
  Interface interface = Interface::codecharts;
  std::size_t participants = 0;
  fs::path output;
  sim::SyntheticParticipant behavior;
  ServiceConfig config;
  std::vector<Stimulus> stimuli;
  std::map<std::string, sim::GroundTruthDensity> ground_truth;
  std::map<std::string, std::map<std::string, double>> element_weights;
};

inline sim::SyntheticParticipant parse_behavior(const json& j) {
  sim::SyntheticParticipant d;
  sim::SyntheticParticipant p = d;
  p.report_noise_px = j.value("report_noise_px", d.report_noise_px);
  p.miss_rate = j.value("miss_rate", d.miss_rate);
  p.zoom_affinity = j.value("zoom_affinity", d.zoom_affinity);
  p.clicks_per_image = j.value("clicks_per_image", d.clicks_per_image);
  p.task = heatmaps::parse_bubble_task(j.value("task", std::string(heatmaps::to_string(d.task))));
  p.description_length = j.value("description_length", d.description_length);
  p.view_ms = j.value("view_ms", d.view_ms);
  p.mask_noise_px = j.value("mask_noise_px", d.mask_noise_px);
  p.check();
  return p;
}

inline Scenario parse_scenario(const json& j, const fs::path& base_dir = {}) {
  Scenario sc;
  try {
    sc.seed = j.value("seed", std::uint64_t{0});
    sc.interface = parse_interface(j.at("interface").get<std::string>());
    sc.participants = j.at("participants").get<std::size_t>();
    if (j.contains("output")) sc.output = base_dir / j.at("output").get<std::string>();
    sc.behavior = parse_behavior(j.value("behavior", json::object()));
    sc.config = j.value("config", json::object()).get<ServiceConfig>();
    for (const auto& sj : j.at("stimuli")) {
      Stimulus s = sj.get<Stimulus>();
      if (s.image_path.empty()) s.image_path = "stimuli/" + s.id + ".png";
      if (sj.contains("gt")) {
        const auto& g = sj.at("gt");
        if (g.contains("mixture")) {
          std::vector<sim::GaussianComponent> comps;
          for (const auto& c : g.at("mixture")) {
            comps.push_back({c.at("x").get<double>(), c.at("y").get<double>(), c.at("sigma").get<double>(),
                             c.value("weight", 1.0)});
          }
          sc.ground_truth.emplace(s.id, sim::GroundTruthDensity::mixture(s.width_px, s.height_px, std::move(comps)));
        } else if (g.contains("density_csv")) {
          auto grid = grid_from_csv(read_file(base_dir / g.at("density_csv").get<std::string>()));
          if (grid.width() != s.width_px || grid.height() != s.height_px) {
            throw ConfigError("density for '" + s.id + "' does not match the stimulus dimensions");
          }
          sc.ground_truth.emplace(s.id, sim::GroundTruthDensity(std::move(grid)));
        } else {
          throw ConfigError("gt for '" + s.id + "' needs 'mixture' or 'density_csv'");
        }
      }
      if (sj.contains("element_weights")) {
        sc.element_weights[s.id] = sj.at("element_weights").get<std::map<std::string, double>>();
      }
      check_stimulus(s);
      sc.stimuli.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  if (sc.stimuli.empty()) throw ConfigError("scenario lists no stimuli");
  for (const auto& s : sc.stimuli) {
    bool needs_gt = s.kind != StimulusKind::validation && sc.interface != Interface::importannots;
    if (needs_gt && !sc.ground_truth.count(s.id)) throw ConfigError("stimulus '" + s.id + "' has no gt");
  }
  return sc;
}

inline Scenario load_scenario(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_scenario(j, path.parent_path());
}

struct ScenarioReport {
  std::size_t participants = 0;
  std::size_t payloads = 0;
  fs::path store_dir;
};

namespace detail {

inline std::string participant_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "p%04zu", i);
  return buf;
}

/// Deterministic receipt time: the epoch plus one second per payload.
inline std::string sim_timestamp(std::size_t n) {
  std::time_t t = static_cast<std::time_t>(n);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string stimulus_png(const Stimulus& s, const sim::GroundTruthDensity* gt) {
  if (gt) return heatmap_to_png(gt->density());
  Grid<double> g(s.width_px, s.height_px, 0.0);
  if (s.cue) {
    auto [cx, cy] = pixel_of(*s.cue, s.width_px, s.height_px);
    g(cx, cy) = 1.0;
  }
  for (const auto& e : s.elements) {
    Mask m = rasterize(e, s.width_px, s.height_px);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::max(g[i], m[i] * 0.5);
  }
  return heatmap_to_png(g);
}

}  // namespace detail

/// Simulate every participant, writing a complete log store (manifest, assignments,
/// charts, logs) to `out`. Re-running with the same scenario reproduces it byte for byte.
inline ScenarioReport run_scenario(const Scenario& sc, const fs::path& out) {
  if (fs::exists(out) && !fs::is_empty(out)) throw ConfigError("output directory '" + out.string() + "' is not empty");
  LogStore store(out);
  store.set_stimuli(sc.stimuli);
  write_file(out / "config.json", json(sc.config).dump(2) + "\n");
  for (const auto& s : sc.stimuli) {
    auto it = sc.ground_truth.find(s.id);
    write_file(out / s.image_path, detail::stimulus_png(s, it == sc.ground_truth.end() ? nullptr : &it->second));
  }
  std::map<std::string, const Stimulus*> by_id;
  for (const auto& s : sc.stimuli) by_id[s.id] = &s;

  ScenarioReport report{sc.participants, 0, out};
  auto submit = [&](const json& payload) {
    store.ingest(payload, detail::sim_timestamp(report.payloads));
    ++report.payloads;
  };

  for (std::size_t i = 0; i < sc.participants; ++i) {
    sim::SyntheticParticipant p = sc.behavior;
    p.id = detail::participant_id(i);
    p.seed = derive_seed(sc.seed, "participant:" + p.id);
    auto bundle = build_assignment(sc.interface, sc.stimuli, sc.config, derive_seed(sc.seed, "assignment:" + p.id));
    store.add_assignment(bundle);
    const auto& a = bundle.assignment;
    auto header = [&](const std::string& suffix) {
      return PayloadHeader{a.assignment_id, p.id, p.id + ":" + a.assignment_id + suffix};
    };

    if (sc.interface == Interface::codecharts) {
      std::vector<CodeChartsTrial> trials;
      for (std::size_t t = 0; t < a.trials.size(); ++t) {
        const Stimulus& s = *by_id.at(a.trials[t].stimulus_id);
        const auto& chart = bundle.charts[t];
        WindowMapping m = fit_to_window(s, chart.params.window_w, chart.params.window_h);
        auto gt = s.kind == StimulusKind::validation ? sim::GroundTruthDensity::delta(s.width_px, s.height_px, *s.cue)
                                                     : sc.ground_truth.at(s.id);
        auto r = sim::sim_codecharts(gt, chart, m, p, s.id);
        trials.push_back({s.id, chart.chart_id, r.typed_code, r.response_t_ms});
      }
      submit(encode_codecharts(header(""), trials));
      continue;
    }
    for (const auto& trial : a.trials) {
      const Stimulus& s = *by_id.at(trial.stimulus_id);
      const std::string suffix = ":" + s.id;
      switch (sc.interface) {
        case Interface::zoommaps: submit(encode_zoom(header(suffix), sim::sim_zoom(sc.ground_truth.at(s.id), s, p))); break;
        case Interface::bubbleview:
          submit(encode_bubble(header(suffix), sim::sim_bubble(sc.ground_truth.at(s.id), s, p)));
          break;
        case Interface::importannots: {
          std::vector<sim::WeightedElement> elems;
          auto w = sc.element_weights.find(s.id);
          for (const auto& e : s.elements) {
            double weight = s.kind == StimulusKind::validation ? 1.0 : 0.0;
            if (w != sc.element_weights.end() && w->second.count(e.id)) weight = w->second.at(e.id);
            elems.push_back({e, weight});
          }
          submit(encode_importannots(header(suffix), sim::sim_annotation(elems, s, p)));
          break;
        }
        case Interface::codecharts: break;
      }
    }
  }
  return report;
}

}  // namespace attnlab::service

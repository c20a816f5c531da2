#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "attnlab/attnlab.hpp"
#include "attnlab/service/http.hpp"

namespace {

using namespace attnlab;
using nlohmann::json;

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
};

/// --config wins; otherwise a store's own config.json; otherwise defaults.
service::ServiceConfig resolve_config(const Globals& g, const std::string& store_dir = {}) {
  if (!g.config_path.empty()) return service::load_config(g.config_path);
  if (!store_dir.empty() && fs::exists(fs::path(store_dir) / "config.json")) {
    return service::load_config(fs::path(store_dir) / "config.json");
  }
  return {};
}

Stimulus find_stimulus(const std::string& manifest, const std::string& id) {
  for (auto& s : load_manifest(manifest)) {
    if (s.id == id) return s;
  }
  throw NotFound("stimulus '" + id + "' not in " + manifest);
}

std::vector<json> read_payloads(const fs::path& path) {
  std::vector<json> out;
  std::string text = read_file(path);
  if (path.extension() == ".jsonl") {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) out.push_back(json::parse(line));
    }
    return out;
  }
  json j = json::parse(text);
  if (j.is_array()) {
    for (auto& e : j) out.push_back(std::move(e));
  } else {
    out.push_back(std::move(j));
  }
  return out;
}

Point parse_point(const std::string& text) {
  auto parts = split(text, ',');
  if (parts.size() != 2) throw ParameterError("expected x,y but got '" + text + "'");
  return {parse_double(parts[0]), parse_double(parts[1])};
}

// ---------------------------------------------------------------------------

int cmd_serve(const Globals& g, const std::string& store_dir, const std::string& manifest, const std::string& host,
              int port) {
  service::LogStore store(store_dir);
  if (!manifest.empty()) store.set_stimuli(load_manifest(manifest));
  if (store.stimuli().empty()) throw ConfigError("store has no stimuli; pass --manifest");
  service::HttpService http(store, resolve_config(g, store_dir));
  httplib::Server server;
  http.mount(server);
  std::cerr << "serving " << store_dir << " on http://" << host << ":" << port << " (config " << http.hash() << ")\n";
  if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out) {
  auto sc = service::load_scenario(scenario_path);
  fs::path dir = out.empty() ? sc.output : fs::path(out);
  if (dir.empty()) throw ConfigError("no output directory: pass --out or set 'output' in the scenario");
  auto report = service::run_scenario(sc, dir);
  std::cout << "participants," << report.participants << "\npayloads," << report.payloads << "\nstore,"
            << report.store_dir.string() << "\n";
  return 0;
}

int cmd_ingest(const std::string& store_dir, const std::string& from, const std::string& manifest,
               const std::vector<std::string>& files) {
  service::LogStore store(store_dir);
  if (!manifest.empty()) store.set_stimuli(load_manifest(manifest));
  std::size_t stored = 0, duplicates = 0;
  if (!from.empty()) {
    service::LogStore source(from);
    if (!fs::exists(fs::path(store_dir) / "config.json") && fs::exists(fs::path(from) / "config.json")) {
      fs::copy_file(fs::path(from) / "config.json", fs::path(store_dir) / "config.json");
    }
    stored += store.replay_from(source);
  }
  for (const auto& f : files) {
    for (const auto& payload : read_payloads(f)) {
      if (store.ingest(payload) == service::IngestStatus::stored) {
        ++stored;
      } else {
        ++duplicates;
      }
    }
  }
  std::cout << "stored," << stored << "\nduplicate," << duplicates << "\n";
  return 0;
}

int cmd_heatmap(const Globals& g, const std::string& iface_name, const std::string& store_dir,
                std::vector<std::string> stimulus_ids, const std::string& out) {
  const Interface iface = parse_interface(iface_name);
  service::LogStore store(store_dir);
  const auto cfg = resolve_config(g, store_dir);
  if (stimulus_ids.empty()) {
    for (const auto& s : store.stimuli()) {
      if (s.kind != StimulusKind::validation) stimulus_ids.push_back(s.id);
    }
  }
  int status = 0;
  for (const auto& id : stimulus_ids) {
    auto r = service::summarize(store, id, iface, cfg);
    json summary = service::summary_json(r);
    if (r.heatmap) {
      save_heatmap(*r.heatmap, out);
    } else {
      summary["error"] = "no qualifying data";
      std::cerr << id << ": no qualifying data\n";
      status = 3;
    }
    write_file(fs::path(out) / (id + "." + iface_name + ".summary.json"), summary.dump(2) + "\n");
    std::cout << id << "," << r.counts.submitted << "," << r.counts.passed << "," << r.counts.used << "\n";
  }
  return status;
}

int cmd_validate(const Globals& g, const std::string& iface_name, const std::string& store_dir, const std::string& out) {
  const Interface iface = parse_interface(iface_name);
  service::LogStore store(store_dir);
  const auto cfg = resolve_config(g, store_dir);
  auto cohort = service::load_cohort(store, iface);
  auto verdicts = service::compute_verdicts(cohort, store, cfg);
  json all = json::array();
  std::map<std::string, std::size_t> failures;
  std::size_t passed = 0;
  for (const auto& [pid, v] : verdicts) {
    json j = v;
    std::cout << j.dump() << "\n";
    all.push_back(std::move(j));
    if (v.passed) ++passed;
    for (const auto& r : v.reasons) {
      if (r.mandatory && !r.passed) ++failures[r.rule_id];
    }
  }
  if (!out.empty()) {
    write_file(out, json{{"interface", iface_name}, {"config_hash", service::config_hash(cfg)}, {"verdicts", all}}.dump(2) + "\n");
  }
  std::cout << "\nparticipants " << verdicts.size() << "  passed " << passed << "  failed " << verdicts.size() - passed
            << "\n";
  for (const auto& [rule, n] : failures) std::cout << "  " << rule << ": " << n << " failed\n";
  return 0;
}

int cmd_metrics(const Globals& g, const std::string& pred, const std::string& fix, const std::string& gt_path) {
  auto map = load_grid(pred);
  std::cout << "metric,value\n";
  if (!fix.empty()) {
    auto pts = metrics::points_of(fixations_from_csv(read_file(fix)));
    std::cout << "nss," << format_double(metrics::nss(map, pts)) << "\n";
  }
  if (!gt_path.empty()) {
    std::cout << "cc," << format_double(metrics::cc(map, load_grid(gt_path))) << "\n";
  } else if (!fix.empty()) {
    // compare against the fixation map itself
    auto set = fixations_from_csv(read_file(fix));
    Stimulus s;
    s.width_px = map.width();
    s.height_px = map.height();
    auto fixmap = heatmaps::fixation_heatmap(set, s, resolve_config(g).heatmap.fixation_sigma);
    std::cout << "cc," << format_double(metrics::cc(map, fixmap.values)) << "\n";
  }
  return 0;
}

int cmd_ioc(const Globals& g, const std::string& fix, std::size_t width, std::size_t height, double sigma,
            std::size_t splits) {
  auto groups = metrics::group_by_participant(fixations_from_csv(read_file(fix)));
  std::cout << "metric,value\n";
  std::cout << "ioc_nss," << format_double(metrics::ioc_nss(groups, width, height, sigma)) << "\n";
  std::cout << "ioc_cc," << format_double(metrics::ioc_cc(groups, width, height, sigma, splits, g.seed)) << "\n";
  return 0;
}

int cmd_saturation(const Globals& g, const std::string& curve, const std::string& store_dir, const std::string& iface_name,
                   const std::string& stimulus_id, const std::string& reference, std::size_t step, std::size_t resamples) {
  metrics::SaturationResult result;
  if (!curve.empty()) {
    // performance depends only on subset size: one "n,performance" row per size
    std::map<std::size_t, double> table;
    std::istringstream in(read_file(curve));
    std::string line;
    while (std::getline(in, line)) {
      auto f = split(line, ',');
      if (f.size() < 2 || f[0].empty() || !std::isdigit(static_cast<unsigned char>(f[0][0]))) continue;
      table[static_cast<std::size_t>(parse_double(f[0]))] = parse_double(f[1]);
    }
    if (table.empty()) throw EmptyInput("curve file has no rows");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < table.rbegin()->first; ++i) ids.push_back("p" + std::to_string(i));
    auto fn = [&](const std::vector<std::string>& subset) { return table.at(subset.size()); };
    result = metrics::saturation(fn, ids, step, resamples, g.seed, "curve");
  } else {
    if (store_dir.empty() || iface_name.empty() || stimulus_id.empty() || reference.empty()) {
      throw ParameterError("saturation needs --curve, or --store, --interface, --stimulus and --reference");
    }
    const Interface iface = parse_interface(iface_name);
    service::LogStore store(store_dir);
    const auto cfg = resolve_config(g, store_dir);
    const Stimulus s = store.stimulus(stimulus_id);
    const auto cohort = service::load_cohort(store, iface);
    const auto verdicts = service::compute_verdicts(cohort, store, cfg);
    const auto charts = store.charts();
    const auto ref = load_grid(reference);
    auto full = service::summarize_cohort(cohort, verdicts, s, charts, cfg);
    std::vector<std::string> ids;
    for (const auto& v : full.verdicts) {
      if (v.passed) ids.push_back(v.participant_id);
    }
    auto fn = [&](const std::vector<std::string>& subset) {
      std::set<std::string> only(subset.begin(), subset.end());
      auto r = service::summarize_cohort(cohort, verdicts, s, charts, cfg, &only);
      if (!r.heatmap) return 0.0;
      try {
        return metrics::cc(r.heatmap->values, ref);
      } catch (const ZeroVariance&) {
        return 0.0;
      }
    };
    result = metrics::saturation(fn, ids, step, resamples, g.seed, "cc");
  }
  std::cout << "n,performance\n";
  for (const auto& p : result.curve.points) std::cout << p.n_participants << "," << format_double(p.performance) << "\n";
  std::cout << "n_star," << result.n_star << "\n";
  return 0;
}

int cmd_rank(const std::string& heatmap, const std::string& manifest, const std::string& stimulus_id,
             const std::string& compare) {
  Stimulus s = find_stimulus(manifest, stimulus_id);
  auto scores = metrics::element_scores(load_grid(heatmap), s.elements);
  auto ranked = metrics::rank_elements(scores);
  std::cout << "element_id,score,rank\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    std::cout << ranked[i].element_id << "," << format_double(ranked[i].score) << "," << i + 1 << "\n";
  }
  if (!compare.empty()) {
    auto other = metrics::element_scores(load_grid(compare), s.elements);
    std::cout << "spearman," << format_double(metrics::spearman(scores, other)) << ",\n";
  }
  return 0;
}

int cmd_codechart_gen(const Globals& g, std::optional<std::size_t> width, std::optional<std::size_t> height,
                      std::optional<double> spacing, std::optional<double> jitter, bool per_cell,
                      const std::string& cue, std::optional<double> radius, const std::string& id,
                      const std::string& out) {
  auto params = resolve_config(g).chart;
  if (width) params.window_w = *width;
  if (height) params.window_h = *height;
  if (spacing) params.spacing = *spacing;
  if (jitter) params.jitter_frac = *jitter;
  if (per_cell) params.per_cell_jitter = true;
  auto chart = cue.empty() ? codecharts::generate_codechart(params, g.seed, id)
                           : codecharts::generate_validation_chart(parse_point(cue), params, g.seed, radius, id);
  std::string text = json(chart).dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return 0;
}

int cmd_codechart_render(const std::string& chart_path, const std::string& out) {
  auto chart = json::parse(read_file(chart_path)).get<codecharts::CodeChart>();
  write_file(out, codecharts::render_png(chart));
  return 0;
}

int cmd_cost(std::size_t participants, const std::string& per_image) {
  auto est = metrics::cost_estimate(participants, metrics::Money::parse(per_image));
  std::cout << "participants,per_participant,total\n"
            << est.participants << "," << est.per_participant.str() << "," << est.total.str() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention heatmaps from crowdsourced interaction logs"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Service config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for every randomized step");

  std::string store_dir, manifest, host = "127.0.0.1", out, scenario, from, iface, stimulus;
  std::vector<std::string> files, stimuli;
  int port = 8080;

  auto* serve = app.add_subcommand("serve", "Run the HTTP service over a log store");
  serve->add_option("--store", store_dir, "Store directory")->required();
  serve->add_option("--manifest", manifest, "Stimulus manifest to install in an empty store");
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  auto* simulate = app.add_subcommand("simulate", "Generate a log store from a simulated study");
  simulate->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out, "Output store directory (overrides the scenario)");

  auto* ingest = app.add_subcommand("ingest", "Append payloads to a log store");
  ingest->add_option("--store", store_dir)->required();
  ingest->add_option("--from", from, "Replay every log of another store")->check(CLI::ExistingDirectory);
  ingest->add_option("--manifest", manifest, "Stimulus manifest for a new store");
  ingest->add_option("payloads", files, "Payload files (.json object/array or .jsonl)")->check(CLI::ExistingFile);

  auto* heatmap = app.add_subcommand("heatmap", "Quality-filtered heatmaps from a log store");
  heatmap->add_option("interface", iface)->required();
  heatmap->add_option("--store,--logs", store_dir)->required()->check(CLI::ExistingDirectory);
  heatmap->add_option("--stimulus", stimuli, "Stimulus ids (default: all regular stimuli)");
  heatmap->add_option("--out", out, "Output directory")->required();

  auto* validate = app.add_subcommand("validate", "Participant quality verdicts");
  validate->add_option("interface", iface)->required();
  validate->add_option("--logs,--store", store_dir)->required()->check(CLI::ExistingDirectory);
  validate->add_option("--out", out, "Also write the verdicts as one JSON document");

  std::string pred, fix, gt;
  auto* metrics_cmd = app.add_subcommand("metrics", "CC and NSS of a predicted heatmap");
  metrics_cmd->add_option("--pred", pred, "Heatmap (.csv or .png)")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("--fix", fix, "Fixations CSV")->check(CLI::ExistingFile);
  metrics_cmd->add_option("--gt-heatmap", gt, "Reference heatmap for CC")->check(CLI::ExistingFile);

  std::size_t width = 0, height = 0, splits = 10;
  double sigma = heatmaps::kDefaultPointSigma;
  auto* ioc = app.add_subcommand("ioc", "Inter-observer consistency of a fixation set");
  ioc->add_option("--fix", fix)->required()->check(CLI::ExistingFile);
  ioc->add_option("--width", width)->required();
  ioc->add_option("--height", height)->required();
  ioc->add_option("--sigma", sigma);
  ioc->add_option("--splits", splits);

  std::string curve, reference;
  std::size_t step = 1, resamples = 20;
  auto* saturation = app.add_subcommand("saturation", "Participants needed for 98% of full performance");
  saturation->add_option("--curve", curve, "CSV of n,performance")->check(CLI::ExistingFile);
  saturation->add_option("--store", store_dir)->check(CLI::ExistingDirectory);
  saturation->add_option("--interface", iface);
  saturation->add_option("--stimulus", stimulus);
  saturation->add_option("--reference", reference, "Reference heatmap for CC")->check(CLI::ExistingFile);
  saturation->add_option("--step", step);
  saturation->add_option("--resamples", resamples);

  std::string compare;
  auto* rank = app.add_subcommand("rank-elements", "Rank design elements by heatmap maximum");
  rank->add_option("--heatmap", pred)->required()->check(CLI::ExistingFile);
  rank->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  rank->add_option("--stimulus", stimulus)->required();
  rank->add_option("--compare", compare, "Second heatmap; prints Spearman's rho")->check(CLI::ExistingFile);

  auto* codechart = app.add_subcommand("codechart", "Generate or render code charts");
  codechart->require_subcommand(1);
  std::optional<std::size_t> cw, ch;
  std::optional<double> spacing, jitter, radius;
  bool per_cell = false;
  std::string cue, chart_id, chart_path;
  auto* gen = codechart->add_subcommand("gen", "Generate a chart as JSON");
  gen->add_option("--width", cw);
  gen->add_option("--height", ch);
  gen->add_option("--spacing", spacing);
  gen->add_option("--jitter", jitter);
  gen->add_flag("--per-cell", per_cell);
  gen->add_option("--cue", cue, "x,y of a validation cue in window pixels");
  gen->add_option("--radius", radius, "Validation capture radius");
  gen->add_option("--id", chart_id);
  gen->add_option("--out", out);
  auto* render = codechart->add_subcommand("render", "Render a chart JSON to PNG");
  render->add_option("--chart", chart_path)->required()->check(CLI::ExistingFile);
  render->add_option("--out", out)->required();

  std::size_t participants = 0;
  std::string per_image;
  auto* cost = app.add_subcommand("cost", "Cost per image");
  cost->add_option("--participants", participants)->required();
  cost->add_option("--per-image", per_image, "Cost per image per participant, e.g. 0.03")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return cmd_serve(g, store_dir, manifest, host, port);
    if (*simulate) return cmd_simulate(scenario, out);
    if (*ingest) return cmd_ingest(store_dir, from, manifest, files);
    if (*heatmap) return cmd_heatmap(g, iface, store_dir, stimuli, out);
    if (*validate) return cmd_validate(g, iface, store_dir, out);
    if (*metrics_cmd) return cmd_metrics(g, pred, fix, gt);
    if (*ioc) return cmd_ioc(g, fix, width, height, sigma, splits);
    if (*saturation) return cmd_saturation(g, curve, store_dir, iface, stimulus, reference, step, resamples);
    if (*rank) return cmd_rank(pred, manifest, stimulus, compare);
    if (*gen) return cmd_codechart_gen(g, cw, ch, spacing, jitter, per_cell, cue, radius, chart_id, out);
    if (*render) return cmd_codechart_render(chart_path, out);
    if (*cost) return cmd_cost(participants, per_image);
  } catch (const SchemaError& e) {
    std::cerr << "schema error at " << e.field_path() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

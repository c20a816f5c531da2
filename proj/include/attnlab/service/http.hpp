#pragma once

#include <random>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "attnlab/codecharts.hpp"
#include "attnlab/core/error.hpp"
#include "attnlab/core/io.hpp"
#include "attnlab/service/assignment.hpp"
#include "attnlab/service/config.hpp"
#include "attnlab/service/results.hpp"
#include "attnlab/service/store.hpp"

namespace attnlab::service {

inline std::string content_type_for(const fs::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

/// HTTP routes over one LogStore. Every response carries X-Config-Hash.
class HttpService {
 public:
  HttpService(LogStore& store, ServiceConfig cfg) : store_(store), cfg_(std::move(cfg)), hash_(config_hash(cfg_)) {}

  const std::string& hash() const noexcept { return hash_; }

  void mount(httplib::Server& server) {
    server.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
      res.set_header("X-Config-Hash", hash_);
    });
    server.Get(R"(/assignments/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { get_assignment(req, res); });
    });
    server.Get(R"(/stimuli/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { get_stimulus(req, res); });
    });
    server.Get(R"(/charts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, json(store_.chart(req.matches[1]))); });
    });
    server.Post("/logs", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { post_log(req, res); });
    });
    server.Get(R"(/results/([^/]+)/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { get_results(req, res); });
    });
  }

 private:
  void send_json(httplib::Response& res, int status, json body) const {
    if (body.is_object()) body["config_hash"] = hash_;
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <typename F>
  void guarded(httplib::Response& res, F&& f) const {
    try {
      f();
    } catch (const SchemaError& e) {
      send_json(res, 422, {{"error", e.what()}, {"field", e.field_path()}});
    } catch (const NotFound& e) {
      send_json(res, 404, {{"error", e.what()}});
    } catch (const EmptyInput& e) {
      send_json(res, 422, {{"error", e.what()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
    } catch (const ConfigError& e) {
      send_json(res, 409, {{"error", e.what()}});
    } catch (const ParameterError& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  }

  void get_assignment(const httplib::Request& req, httplib::Response& res) {
    Interface iface{};
    try {
      iface = parse_interface(req.matches[1].str());
    } catch (const ParameterError& e) {
      throw NotFound(e.what());
    }
    std::uint64_t seed = 0;
    if (req.has_param("seed")) {
      auto text = req.get_param_value("seed");
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
      if (ec != std::errc{} || ptr != text.data() + text.size()) throw ParameterError("seed must be an unsigned integer");
    } else {
      seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
    }
    auto bundle = build_assignment(iface, store_.stimuli(), cfg_, seed);
    store_.add_assignment(bundle);
    send_json(res, 200, json(bundle.assignment));
  }

  void get_stimulus(const httplib::Request& req, httplib::Response& res) const {
    Stimulus s = store_.stimulus(req.matches[1]);
    fs::path p = s.image_path;
    if (p.empty()) throw NotFound("stimulus '" + s.id + "' has no image");
    if (p.is_relative()) p = store_.dir() / p;
    if (!fs::exists(p)) throw NotFound("image for stimulus '" + s.id + "' is missing");
    res.status = 200;
    res.set_content(read_file(p), content_type_for(p));
  }

  void post_log(const httplib::Request& req, httplib::Response& res) {
    json payload = json::parse(req.body);
    auto status = store_.ingest(payload);
    send_json(res, status == IngestStatus::stored ? 201 : 200,
              {{"status", std::string(to_string(status))}, {"submission_id", payload.at("submission_id")}});
  }

  void get_results(const httplib::Request& req, httplib::Response& res) const {
    Interface iface{};
    try {
      iface = parse_interface(req.matches[1].str());
    } catch (const ParameterError& e) {
      throw NotFound(e.what());
    }
    ResultSummary r = summarize(store_, req.matches[2], iface, cfg_);
    json summary = summary_json(r);
    if (!r.heatmap) {
      summary["error"] = "no qualifying data";
      send_json(res, 422, std::move(summary));
      return;
    }
    const std::string accept = req.get_header_value("Accept");
    res.set_header("X-Counts", std::to_string(r.counts.submitted) + "/" + std::to_string(r.counts.passed) + "/" +
                                   std::to_string(r.counts.used));
    if (accept.find("text/csv") != std::string::npos) {
      res.status = 200;
      res.set_content(grid_to_csv(r.heatmap->values), "text/csv");
    } else if (accept.find("image/png") != std::string::npos) {
      res.status = 200;
      res.set_content(heatmap_to_png(r.heatmap->values), "image/png");
    } else {
      summary["heatmap"] = {{"width", r.heatmap->width()},
                            {"height", r.heatmap->height()},
                            {"provenance", std::string(to_string(r.heatmap->provenance))},
                            {"values", std::vector<double>(r.heatmap->values.begin(), r.heatmap->values.end())}};
      send_json(res, 200, std::move(summary));
    }
  }

  LogStore& store_;
  ServiceConfig cfg_;
  std::string hash_;
};

}  // namespace attnlab::service

#pragma once

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "attnlab/codecharts.hpp"
#include "attnlab/core/error.hpp"
#include "attnlab/core/io.hpp"
#include "attnlab/core/types.hpp"
#include "attnlab/service/assignment.hpp"
#include "attnlab/service/payloads.hpp"

namespace attnlab::service {

struct LogEnvelope {
  std::string assignment_id;
  std::string participant_id;
  std::string submission_id;
  Interface interface = Interface::zoommaps;
  std::string received_at;
  json payload;
};

inline void to_json(json& j, const LogEnvelope& e) {
  j = json{{"assignment_id", e.assignment_id}, {"participant_id", e.participant_id},
           {"submission_id", e.submission_id}, {"interface", std::string(to_string(e.interface))},
           {"received_at", e.received_at},     {"payload", e.payload}};
}
inline void from_json(const json& j, LogEnvelope& e) {
  e.assignment_id = j.at("assignment_id").get<std::string>();
  e.participant_id = j.at("participant_id").get<std::string>();
  e.submission_id = j.at("submission_id").get<std::string>();
  e.interface = parse_interface(j.at("interface").get<std::string>());
  e.received_at = j.value("received_at", std::string{});
  e.payload = j.at("payload");
}

enum class IngestStatus { stored, duplicate };

inline std::string_view to_string(IngestStatus s) { return s == IngestStatus::stored ? "stored" : "duplicate"; }

inline std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Directory-backed, append-only store:
///   manifest.json          stimulus records
///   assignments.jsonl      one TaskAssignment per line
///   charts.jsonl           one CodeChart per line
///   logs/<interface>.jsonl one LogEnvelope per line
/// Writers are serialized; readers see consistent snapshots.
class LogStore {
 public:
  explicit LogStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_ / "logs");
    if (fs::exists(manifest_path())) {
      for (auto& s : load_manifest(manifest_path())) stimuli_.emplace(s.id, std::move(s));
    }
    for_each_line(dir_ / "assignments.jsonl", [&](const json& j) {
      auto a = j.get<TaskAssignment>();
      assignments_.emplace(a.assignment_id, std::move(a));
    });
    for_each_line(dir_ / "charts.jsonl", [&](const json& j) {
      auto c = j.get<codecharts::CodeChart>();
      charts_.emplace(c.chart_id, std::move(c));
    });
    for (auto iface : kInterfaces) {
      for_each_line(log_path(iface), [&](const json& j) {
        auto e = j.get<LogEnvelope>();
        submissions_.insert(e.submission_id);
        logs_[iface].push_back(std::move(e));
      });
    }
  }

  const fs::path& dir() const noexcept { return dir_; }
  fs::path manifest_path() const { return dir_ / "manifest.json"; }
  fs::path log_path(Interface iface) const { return dir_ / "logs" / (std::string(to_string(iface)) + ".jsonl"); }

  /// Replace the stimulus manifest. Only allowed before any log is stored.
  void set_stimuli(const std::vector<Stimulus>& stimuli) {
    std::unique_lock lock(mutex_);
    if (!submissions_.empty()) throw ConfigError("cannot replace the manifest of a store that holds logs");
    for (const auto& s : stimuli) check_stimulus(s);
    save_manifest(stimuli, manifest_path());
    stimuli_.clear();
    for (const auto& s : stimuli) stimuli_.emplace(s.id, s);
  }

  /// Persist an assignment and its charts; re-adding an identical assignment is a no-op.
  void add_assignment(const AssignmentBundle& bundle) {
    std::unique_lock lock(mutex_);
    auto it = assignments_.find(bundle.assignment.assignment_id);
    if (it != assignments_.end()) {
      if (!(it->second == bundle.assignment)) {
        throw ConfigError("assignment '" + bundle.assignment.assignment_id + "' already exists with different trials");
      }
      return;
    }
    for (const auto& c : bundle.charts) {
      if (charts_.count(c.chart_id)) continue;
      append_line(dir_ / "charts.jsonl", json(c));
      charts_.emplace(c.chart_id, c);
    }
    append_line(dir_ / "assignments.jsonl", json(bundle.assignment));
    assignments_.emplace(bundle.assignment.assignment_id, bundle.assignment);
  }

  /// Schema-check and append one payload. Unknown assignment -> NotFound; bad field -> SchemaError.
  IngestStatus ingest(const json& payload, std::optional<std::string> received_at = std::nullopt) {
    PayloadHeader h = decode_header(payload);
    std::unique_lock lock(mutex_);
    auto it = assignments_.find(h.assignment_id);
    if (it == assignments_.end()) throw NotFound("unknown assignment '" + h.assignment_id + "'");
    const Interface iface = it->second.interface;
    if (payload.contains("interface")) {
      const json& v = payload.at("interface");
      if (!v.is_string() || v.get<std::string>() != to_string(iface)) {
        throw SchemaError("interface", "does not match the assignment's interface '" + std::string(to_string(iface)) + "'");
      }
    }
    validate_payload(iface, payload, stimuli_, charts_);
    if (submissions_.count(h.submission_id)) return IngestStatus::duplicate;
    LogEnvelope env{h.assignment_id, h.participant_id, h.submission_id, iface,
                    received_at ? *received_at : utc_now(), payload};
    append_line(log_path(iface), json(env));
    submissions_.insert(h.submission_id);
    logs_[iface].push_back(std::move(env));
    return IngestStatus::stored;
  }

  /// Re-ingest every envelope of another store, preserving receipt times.
  std::size_t replay_from(const LogStore& source) {
    if (stimuli_.empty()) set_stimuli(source.stimuli());
    for (const auto& [id, a] : source.assignments()) {
      AssignmentBundle b{a, {}};
      for (const auto& t : a.trials) {
        if (t.params.contains("chart_id")) b.charts.push_back(source.chart(t.params.at("chart_id").get<std::string>()));
      }
      add_assignment(b);
    }
    std::size_t stored = 0;
    for (auto iface : kInterfaces) {
      for (const auto& e : source.envelopes(iface)) {
        if (ingest(e.payload, e.received_at) == IngestStatus::stored) ++stored;
      }
    }
    return stored;
  }

  // --- readers -------------------------------------------------------------

  std::vector<Stimulus> stimuli() const {
    std::shared_lock lock(mutex_);
    std::vector<Stimulus> out;
    for (const auto& [id, s] : stimuli_) out.push_back(s);
    return out;
  }
  StimulusLookup stimulus_lookup() const {
    std::shared_lock lock(mutex_);
    return stimuli_;
  }
  Stimulus stimulus(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = stimuli_.find(id);
    if (it == stimuli_.end()) throw NotFound("unknown stimulus '" + id + "'");
    return it->second;
  }
  codecharts::CodeChart chart(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = charts_.find(id);
    if (it == charts_.end()) throw NotFound("unknown chart '" + id + "'");
    return it->second;
  }
  heatmaps::ChartLookup charts() const {
    std::shared_lock lock(mutex_);
    return charts_;
  }
  std::map<std::string, TaskAssignment> assignments() const {
    std::shared_lock lock(mutex_);
    return assignments_;
  }
  TaskAssignment assignment(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = assignments_.find(id);
    if (it == assignments_.end()) throw NotFound("unknown assignment '" + id + "'");
    return it->second;
  }
  std::vector<LogEnvelope> envelopes(Interface iface) const {
    std::shared_lock lock(mutex_);
    auto it = logs_.find(iface);
    return it == logs_.end() ? std::vector<LogEnvelope>{} : it->second;
  }

 private:
  static constexpr std::array<Interface, 4> kInterfaces = {Interface::zoommaps, Interface::codecharts,
                                                           Interface::importannots, Interface::bubbleview};

  template <typename F>
  static void for_each_line(const fs::path& path, F&& f) {
    if (!fs::exists(path)) return;
    std::ifstream in(path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        f(json::parse(line));
      } catch (const json::exception& e) {
        throw ConfigError(path.string() + ":" + std::to_string(n) + ": " + e.what());
      }
    }
  }

  static void append_line(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot append to " + path.string());
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw Error("write failed on " + path.string());
  }

  fs::path dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Stimulus> stimuli_;
  std::map<std::string, TaskAssignment> assignments_;
  heatmaps::ChartLookup charts_;
  std::map<Interface, std::vector<LogEnvelope>> logs_;
  std::set<std::string> submissions_;
};

}  // namespace attnlab::service

#pragma once

// Independent reference implementations and shared fixtures for the test suites.
// The oracles deliberately use different formulas from the library code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "attnlab/attnlab.hpp"

namespace attnlab::testing {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Oracles.

/// Pearson correlation from raw sums in long double.
inline double oracle_cc(const std::vector<double>& a, const std::vector<double>& b) {
  long double n = static_cast<long double>(a.size());
  long double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    long double x = a[i], y = b[i];
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
    sab += x * y;
  }
  long double num = n * sab - sa * sb;
  long double den = std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
  return static_cast<double>(num / den);
}

/// Mean of the z-scored map at floor(x), floor(y) of each fixation.
inline double oracle_nss(const std::vector<double>& map, std::size_t width, const std::vector<Point>& fix) {
  long double mean = 0;
  for (double v : map) mean += v;
  mean /= static_cast<long double>(map.size());
  long double var = 0;
  for (double v : map) var += (v - mean) * (v - mean);
  long double sd = std::sqrt(var / static_cast<long double>(map.size()));
  long double acc = 0;
  for (const auto& p : fix) {
    auto x = static_cast<std::size_t>(p.x), y = static_cast<std::size_t>(p.y);
    acc += (map[y * width + x] - mean) / sd;
  }
  return static_cast<double>(acc / static_cast<long double>(fix.size()));
}

/// Ranks by counting: 1 + (# strictly smaller) + (# ties - 1) / 2.
inline std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i] ? 1 : 0;
      equal += w == v[i] ? 1 : 0;
    }
    r[i] = 1.0 + static_cast<double>(less) + (static_cast<double>(equal) - 1.0) / 2.0;
  }
  return r;
}

inline double oracle_spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return oracle_cc(oracle_ranks(a), oracle_ranks(b));
}

/// Set-based intersection over union.
inline double oracle_iou(const Mask& a, const Mask& b) {
  std::vector<std::size_t> sa, sb, inter, uni;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]) sa.push_back(i);
    if (b[i]) sb.push_back(i);
  }
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(uni));
  return uni.empty() ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

/// Direct 2-D convolution with a 3-sigma truncated Gaussian renormalized over in-image taps.
inline Grid<double> oracle_blur(const Grid<double>& g, double sigma) {
  const auto r = static_cast<long>(std::ceil(3.0 * sigma));
  const auto w = static_cast<long>(g.width()), h = static_cast<long>(g.height());
  Grid<double> out(g.width(), g.height(), 0.0);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      long double wx = 0, wy = 0, acc = 0;
      for (long d = -r; d <= r; ++d) {
        if (x + d >= 0 && x + d < w) wx += std::exp(-(d * d) / (2.0L * sigma * sigma));
        if (y + d >= 0 && y + d < h) wy += std::exp(-(d * d) / (2.0L * sigma * sigma));
      }
      for (long dy = -r; dy <= r; ++dy) {
        if (y + dy < 0 || y + dy >= h) continue;
        for (long dx = -r; dx <= r; ++dx) {
          if (x + dx < 0 || x + dx >= w) continue;
          long double k = std::exp(-(dx * dx + dy * dy) / (2.0L * sigma * sigma));
          acc += k * g(static_cast<std::size_t>(x + dx), static_cast<std::size_t>(y + dy));
        }
      }
      out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = static_cast<double>(acc / (wx * wy));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fixtures.

inline Stimulus make_stimulus(std::string id, std::size_t w, std::size_t h,
                              StimulusKind kind = StimulusKind::natural) {
  Stimulus s;
  s.id = std::move(id);
  s.width_px = w;
  s.height_px = h;
  s.kind = kind;
  return s;
}

/// Three-component mixture on a 1000x700 image used by the closed-loop checks.
inline sim::GroundTruthDensity three_gaussians() {
  return sim::GroundTruthDensity::mixture(1000, 700, {{250, 200, 60, 1.0}, {700, 250, 80, 0.8}, {500, 520, 70, 0.6}});
}

inline sim::SyntheticParticipant participant(std::string id, std::uint64_t seed, double noise, double miss) {
  sim::SyntheticParticipant p;
  p.id = std::move(id);
  p.seed = seed;
  p.report_noise_px = noise;
  p.miss_rate = miss;
  return p;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("attnlab-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace attnlab::testing

#pragma once

#include <cmath>
#include <numeric>

#include "attnlab/core/error.hpp"
#include "attnlab/core/grid.hpp"
#include "attnlab/core/types.hpp"

namespace attnlab {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

inline Moments moments(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("moments of an empty grid");
  const auto n = static_cast<double>(values.size());
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

namespace detail {
// Relative floor below which a grid counts as constant (rounding noise of the mean).
inline bool is_degenerate(const Moments& m) {
  return !(m.stddev > 1e-12 * std::max(1.0, std::abs(m.mean)));
}
}  // namespace detail

/// Zero-mean, unit population standard deviation. Throws ZeroVariance on constant input.
inline Grid<double> z_normalize(const Grid<double>& map) {
  if (map.size() < 2) throw ParameterError("z_normalize needs more than one pixel");
  Moments m = moments(map.values());
  if (detail::is_degenerate(m)) throw ZeroVariance("cannot z-normalize a constant map");
  Grid<double> out(map.width(), map.height());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = (map[i] - m.mean) / m.stddev;
  return out;
}

inline AttentionHeatmap z_normalize(const AttentionHeatmap& map) {
  return {map.stimulus_id, z_normalize(map.values), map.provenance, true};
}

/// Divide by the maximum; all-zero grids are returned unchanged.
inline Grid<double> max_normalize(const Grid<double>& map) {
  Grid<double> out = map;
  if (map.empty()) return out;
  double mx = *std::max_element(map.begin(), map.end());
  if (mx > 0.0) {
    for (double& v : out) v /= mx;
  }
  return out;
}

}  // namespace attnlab

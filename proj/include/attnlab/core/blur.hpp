#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "attnlab/core/error.hpp"
#include "attnlab/core/grid.hpp"
#include "attnlab/core/types.hpp"

namespace attnlab {

/// Sampled Gaussian truncated at 3 sigma, normalized to unit sum. Index radius is the center.
inline std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("gaussian sigma must be positive and finite");
  }
  auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace detail {

// One 1-D pass along `count` lines of length `len`; element j of line l sits at
// l * line_stride + j * step. Near the borders the in-bounds part of the kernel
// is renormalized to unit sum.
inline void blur_pass(const std::vector<double>& in, std::vector<double>& out,
                      const std::vector<double>& kernel, std::size_t len, std::size_t count,
                      std::size_t step, std::size_t line_stride) {
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(len);
  std::vector<double> norm(len);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      std::ptrdiff_t j = i + k;
      if (j >= 0 && j < n) s += kernel[static_cast<std::size_t>(k + radius)];
    }
    norm[static_cast<std::size_t>(i)] = s;
  }
  std::vector<double> line(len);
  for (std::size_t l = 0; l < count; ++l) {
    const std::size_t base = l * line_stride;
    for (std::size_t j = 0; j < len; ++j) line[j] = in[base + j * step];
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - radius);
      std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + radius);
      double acc = 0.0;
      for (std::ptrdiff_t j = lo; j <= hi; ++j) {
        acc += line[static_cast<std::size_t>(j)] * kernel[static_cast<std::size_t>(j - i + radius)];
      }
      out[base + static_cast<std::size_t>(i) * step] = acc / norm[static_cast<std::size_t>(i)];
    }
  }
}

}  // namespace detail

/// Separable Gaussian blur; dimensions are preserved and uniform grids stay uniform.
inline Grid<double> gaussian_blur(const Grid<double>& map, double sigma) {
  auto kernel = gaussian_kernel(sigma);
  if (map.empty()) return map;
  const std::size_t w = map.width();
  const std::size_t h = map.height();
  std::vector<double> tmp(map.size());
  std::vector<double> out(map.size());
  detail::blur_pass(map.raw(), tmp, kernel, w, h, 1, w);  // rows
  detail::blur_pass(tmp, out, kernel, h, w, w, 1);        // columns
  return Grid<double>(w, h, std::move(out));
}

/// Same operator as gaussian_blur, evaluated by splatting each non-zero pixel. Cheaper
/// when few pixels are non-zero. Pixels are visited in raster order, so the result
/// depends only on the grid contents.
inline Grid<double> gaussian_blur_sparse(const Grid<double>& map, double sigma) {
  auto kernel = gaussian_kernel(sigma);
  const std::size_t w = map.width();
  const std::size_t h = map.height();
  Grid<double> out(w, h, 0.0);
  if (map.empty()) return out;
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  auto norms = [&](std::size_t len) {
    std::vector<double> norm(len, 0.0);
    const auto n = static_cast<std::ptrdiff_t>(len);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        if (i + k >= 0 && i + k < n) norm[static_cast<std::size_t>(i)] += kernel[static_cast<std::size_t>(k + radius)];
      }
    }
    return norm;
  };
  const auto nx = norms(w);
  const auto ny = norms(h);
  std::vector<double> col(2 * static_cast<std::size_t>(radius) + 1);
  for (std::size_t py = 0; py < h; ++py) {
    for (std::size_t px = 0; px < w; ++px) {
      const double v = map(px, py);
      if (v == 0.0) continue;
      const auto x0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(px) - radius);
      const auto x1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w) - 1, static_cast<std::ptrdiff_t>(px) + radius);
      const auto y0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(py) - radius);
      const auto y1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h) - 1, static_cast<std::ptrdiff_t>(py) + radius);
      for (std::ptrdiff_t y = y0; y <= y1; ++y) {
        const double wy = v * kernel[static_cast<std::size_t>(y - static_cast<std::ptrdiff_t>(py) + radius)] /
                          ny[static_cast<std::size_t>(y)];
        for (std::ptrdiff_t x = x0; x <= x1; ++x) {
          out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) +=
              wy * kernel[static_cast<std::size_t>(x - static_cast<std::ptrdiff_t>(px) + radius)] /
              nx[static_cast<std::size_t>(x)];
        }
      }
    }
  }
  return out;
}

/// Picks the dense or sparse evaluation by estimated cost.
inline Grid<double> gaussian_blur_auto(const Grid<double>& map, double sigma) {
  const double taps = 2.0 * std::ceil(3.0 * sigma) + 1.0;
  auto nonzero = static_cast<double>(std::count_if(map.begin(), map.end(), [](double v) { return v != 0.0; }));
  if (nonzero * taps * taps < 2.0 * taps * static_cast<double>(map.size())) return gaussian_blur_sparse(map, sigma);
  return gaussian_blur(map, sigma);
}

inline AttentionHeatmap gaussian_blur(const AttentionHeatmap& map, double sigma) {
  return {map.stimulus_id, gaussian_blur(map.values, sigma), map.provenance, map.normalized};
}

}  // namespace attnlab

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attnlab/core/error.hpp"
#include "attnlab/core/normalize.hpp"
#include "attnlab/core/rng.hpp"
#include "attnlab/core/types.hpp"
#include "attnlab/heatmaps.hpp"

namespace attnlab::metrics {

// ---------------------------------------------------------------------------
// CC and NSS.

/// Pearson correlation of the two z-normalized grids.
inline double cc(const Grid<double>& a, const Grid<double>& b) {
  if (!a.same_shape(b)) throw ParameterError("cc needs heatmaps of equal dimensions");
  auto za = z_normalize(a);
  auto zb = z_normalize(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < za.size(); ++i) acc += za[i] * zb[i];
  return std::clamp(acc / static_cast<double>(za.size()), -1.0, 1.0);
}

inline double cc(const AttentionHeatmap& a, const AttentionHeatmap& b) { return cc(a.values, b.values); }

/// Mean z-normalized value at the fixated pixels.
inline double nss(const Grid<double>& map, std::span<const Point> fixations) {
  if (fixations.empty()) throw EmptyInput("nss needs at least one fixation");
  auto z = z_normalize(map);
  double acc = 0.0;
  for (const auto& f : fixations) {
    if (!(f.x >= 0 && f.y >= 0 && f.x < static_cast<double>(map.width()) && f.y < static_cast<double>(map.height()))) {
      throw ParameterError("fixation outside the heatmap");
    }
    auto [x, y] = pixel_of(f, map.width(), map.height());
    acc += z(x, y);
  }
  return acc / static_cast<double>(fixations.size());
}

inline std::vector<Point> points_of(const FixationSet& fixations) {
  std::vector<Point> pts;
  pts.reserve(fixations.size());
  for (const auto& f : fixations) pts.push_back({f.x, f.y});
  return pts;
}

inline double nss(const AttentionHeatmap& map, const FixationSet& fixations) {
  auto pts = points_of(fixations);
  return nss(map.values, pts);
}

// ---------------------------------------------------------------------------
// Inter-observer consistency.

using FixationsByParticipant = std::map<std::string, std::vector<Point>>;

inline FixationsByParticipant group_by_participant(const FixationSet& fixations) {
  FixationsByParticipant out;
  for (const auto& f : fixations) out[f.participant_id].push_back({f.x, f.y});
  return out;
}

/// Leave-one-out: each participant's fixations scored by NSS against the heatmap of all others.
inline double ioc_nss(const FixationsByParticipant& groups, std::size_t width, std::size_t height, double sigma) {
  if (groups.size() < 2) throw ParameterError("ioc_nss needs at least two participants");
  double total = 0.0;
  for (const auto& [pid, own] : groups) {
    std::vector<Point> others;
    for (const auto& [other, pts] : groups) {
      if (other != pid) others.insert(others.end(), pts.begin(), pts.end());
    }
    auto map = gaussian_blur_auto(heatmaps::point_histogram(others, width, height), sigma);
    total += nss(map, own);
  }
  return total / static_cast<double>(groups.size());
}

inline double ioc_nss(const FixationSet& fixations, const Stimulus& s, double sigma) {
  return ioc_nss(group_by_participant(fixations), s.width_px, s.height_px, sigma);
}

/// Split-half: CC between heatmaps of random halves of the cohort, averaged over splits.
inline double ioc_cc(const FixationsByParticipant& groups, std::size_t width, std::size_t height, double sigma,
                     std::size_t splits, std::uint64_t seed) {
  if (groups.size() < 2) throw ParameterError("ioc_cc needs at least two participants");
  if (splits == 0) throw ParameterError("ioc_cc needs at least one split");
  std::vector<std::string> ids;
  for (const auto& [pid, pts] : groups) ids.push_back(pid);
  double total = 0.0;
  for (std::size_t s = 0; s < splits; ++s) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    auto order = ids;
    rng.shuffle(order);
    const std::size_t half = order.size() / 2;
    std::vector<Point> first, second;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& pts = groups.at(order[i]);
      auto& dst = i < half ? first : second;
      dst.insert(dst.end(), pts.begin(), pts.end());
    }
    auto a = gaussian_blur_auto(heatmaps::point_histogram(first, width, height), sigma);
    auto b = gaussian_blur_auto(heatmaps::point_histogram(second, width, height), sigma);
    total += cc(a, b);
  }
  return total / static_cast<double>(splits);
}

inline double ioc_cc(const FixationSet& fixations, const Stimulus& s, double sigma, std::size_t splits,
                     std::uint64_t seed) {
  return ioc_cc(group_by_participant(fixations), s.width_px, s.height_px, sigma, splits, seed);
}

// ---------------------------------------------------------------------------
// Element importance and rank correlation.

struct ElementScore {
  std::string element_id;
  double score = 0.0;
};

/// Maximum heatmap value over each element's pixels.
inline std::vector<ElementScore> element_scores(const Grid<double>& map, const std::vector<ElementRegion>& elements) {
  std::vector<ElementScore> out;
  out.reserve(elements.size());
  for (const auto& e : elements) {
    Mask m = rasterize(e, map.width(), map.height());
    bool any = false;
    double best = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m[i]) continue;
      best = any ? std::max(best, map[i]) : map[i];
      any = true;
    }
    if (!any) throw ParameterError("element '" + e.id + "' covers no pixel centers");
    out.push_back({e.id, best});
  }
  return out;
}

/// 1-based ranks, ties receive the average of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("pearson needs equal-length samples");
  Moments ma = moments(a), mb = moments(b);
  if (detail::is_degenerate(ma) || detail::is_degenerate(mb)) throw ZeroVariance("pearson of a constant sample");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - ma.mean) * (b[i] - mb.mean);
  return std::clamp(acc / (static_cast<double>(a.size()) * ma.stddev * mb.stddev), -1.0, 1.0);
}

/// Spearman rho of two aligned score vectors (ties get average ranks).
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("spearman needs rankings over the same items");
  if (a.size() < 2) throw ParameterError("spearman needs at least two items");
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  return pearson(ra, rb);
}

/// Spearman rho of two keyed score lists; the item sets must match.
inline double spearman(const std::vector<ElementScore>& a, const std::vector<ElementScore>& b) {
  std::map<std::string, double> ma, mb;
  for (const auto& e : a) ma[e.element_id] = e.score;
  for (const auto& e : b) mb[e.element_id] = e.score;
  if (ma.size() != a.size() || mb.size() != b.size()) throw ParameterError("duplicate item in ranking");
  std::vector<double> va, vb;
  for (const auto& [id, score] : ma) {
    auto it = mb.find(id);
    if (it == mb.end()) throw ParameterError("item '" + id + "' missing from the second ranking");
    va.push_back(score);
    vb.push_back(it->second);
  }
  if (ma.size() != mb.size()) throw ParameterError("rankings cover different item sets");
  return spearman(va, vb);
}

/// Elements sorted by descending score (ties by id).
inline std::vector<ElementScore> rank_elements(std::vector<ElementScore> scores) {
  std::sort(scores.begin(), scores.end(), [](const ElementScore& x, const ElementScore& y) {
    return x.score != y.score ? x.score > y.score : x.element_id < y.element_id;
  });
  return scores;
}

// ---------------------------------------------------------------------------
// Participant saturation.

struct SaturationPoint {
  std::size_t n_participants = 0;
  double performance = 0.0;
};

struct SaturationCurve {
  std::vector<SaturationPoint> points;
  std::string metric_id;
  std::size_t resamples = 0;
};

struct SaturationResult {
  SaturationCurve curve;
  std::size_t n_star = 0;
  double full_performance = 0.0;
};

using PerformanceFn = std::function<double(const std::vector<std::string>&)>;

inline constexpr double kSaturationFraction = 0.98;

/// Mean performance of random n-subsets (without replacement) for n = step, 2*step, ...
/// and the full cohort; n_star is the first n reaching 98% of full-cohort performance.
inline SaturationResult saturation(const PerformanceFn& performance, std::vector<std::string> participants,
                                   std::size_t step = 1, std::size_t resamples = 20, std::uint64_t seed = 0,
                                   std::string metric_id = "performance", double fraction = kSaturationFraction) {
  if (participants.size() < 2) throw ParameterError("saturation needs at least two participants");
  if (step == 0 || resamples == 0) throw ParameterError("saturation step and resamples must be positive");
  std::sort(participants.begin(), participants.end());
  const std::size_t total = participants.size();
  std::vector<std::size_t> sizes;
  for (std::size_t n = step; n < total; n += step) sizes.push_back(n);
  sizes.push_back(total);

  SaturationResult result;
  result.curve.metric_id = std::move(metric_id);
  result.curve.resamples = resamples;
  for (std::size_t n : sizes) {
    double perf;
    if (n == total) {
      perf = performance(participants);
    } else {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(n)));
      double acc = 0.0;
      for (std::size_t r = 0; r < resamples; ++r) {
        auto pool = participants;
        // partial Fisher-Yates: the first n entries form the subset
        for (std::size_t i = 0; i < n; ++i) {
          auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
          std::swap(pool[i], pool[j]);
        }
        pool.resize(n);
        std::sort(pool.begin(), pool.end());
        acc += performance(pool);
      }
      perf = acc / static_cast<double>(resamples);
    }
    result.curve.points.push_back({n, perf});
  }
  result.full_performance = result.curve.points.back().performance;
  result.n_star = total;
  for (const auto& p : result.curve.points) {
    if (p.performance >= fraction * result.full_performance) {
      result.n_star = p.n_participants;
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Cost.

/// Currency amount held exactly in millionths of a unit.
struct Money {
  std::int64_t micros = 0;

  static Money parse(std::string_view text) {
    if (!text.empty() && text.front() == '$') text.remove_prefix(1);
    if (text.empty()) throw ParameterError("empty amount");
    std::int64_t whole = 0, frac = 0;
    int frac_digits = 0;
    bool seen_dot = false;
    for (char c : text) {
      if (c == '.' && !seen_dot) {
        seen_dot = true;
      } else if (c >= '0' && c <= '9') {
        if (!seen_dot) {
          whole = whole * 10 + (c - '0');
        } else if (frac_digits < 6) {
          frac = frac * 10 + (c - '0');
          ++frac_digits;
        } else if (c != '0') {
          throw ParameterError("amounts are limited to six decimal places");
        }
      } else {
        throw ParameterError("invalid amount '" + std::string(text) + "'");
      }
    }
    while (frac_digits < 6) {
      frac *= 10;
      ++frac_digits;
    }
    return {whole * 1'000'000 + frac};
  }

  /// "$0.45"; at least two decimals, more only when needed.
  std::string str() const {
    std::int64_t whole = micros / 1'000'000, frac = micros % 1'000'000;
    std::string digits = std::to_string(frac);
    digits.insert(0, 6 - digits.size(), '0');
    while (digits.size() > 2 && digits.back() == '0') digits.pop_back();
    return "$" + std::to_string(whole) + "." + digits;
  }

  friend bool operator==(const Money&, const Money&) = default;
};

struct CostEstimate {
  std::size_t participants = 0;
  Money per_participant;
  Money total;
};

/// (number of participants) x (cost per image per participant).
inline CostEstimate cost_estimate(std::size_t participants, Money per_participant) {
  if (per_participant.micros < 0) throw ParameterError("cost per participant must be non-negative");
  return {participants, per_participant, Money{static_cast<std::int64_t>(participants) * per_participant.micros}};
}

}  // namespace attnlab::metrics

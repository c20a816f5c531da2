#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"

using namespace attnlab;
using namespace attnlab::testing;
using codecharts::ReportStatus;
using quality::ResolvedTrial;
using quality::TrialRole;

// ---------------------------------------------------------------------------
// ZoomMaps validation.

namespace {

heatmaps::ZoomSession zoom_session(const std::string& pid, const std::string& sid, double duration_ms, bool zoom) {
  heatmaps::ZoomSession z{pid, sid, {{0, {0, 0, 100, 100}}}, duration_ms};
  if (zoom) z.events.push_back({duration_ms / 2, {10, 10, 50, 50}});
  return z;
}

quality::StimulusLookup ten_images() {
  quality::StimulusLookup out;
  for (int i = 0; i < 10; ++i) {
    auto s = make_stimulus("img" + std::to_string(i), 100, 100);
    out[s.id] = s;
  }
  return out;
}

std::vector<heatmaps::ZoomSession> zoom_cohort(const std::vector<double>& durations, std::size_t zoomed) {
  std::vector<heatmaps::ZoomSession> out;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    out.push_back(zoom_session("p", "img" + std::to_string(i), durations[i], i < zoomed));
  }
  return out;
}

void expect_consistent(const quality::QualityVerdict& v) {
  bool any_failed = std::any_of(v.reasons.begin(), v.reasons.end(),
                                [](const quality::Reason& r) { return r.mandatory && !r.passed; });
  EXPECT_EQ(v.passed, !any_failed);
}

}  // namespace

TEST(ValidateZoom, PassingFixture) {
  std::vector<double> d(9, 22000.0);
  d.push_back(2000.0);  // 9 of 10 images viewed >= 5 s, 200 s total
  auto v = quality::validate_zoom(zoom_cohort(d, 3), ten_images());
  EXPECT_TRUE(v.passed);
  EXPECT_DOUBLE_EQ(v.find("total_time")->observed, 200000.0);
  EXPECT_DOUBLE_EQ(v.find("zoom_pct")->observed, 0.3);
  EXPECT_DOUBLE_EQ(v.find("image_time_pct")->observed, 0.9);
  expect_consistent(v);
}

TEST(ValidateZoom, TooFewZoomedImagesFails) {
  auto v = quality::validate_zoom(zoom_cohort(std::vector<double>(10, 20000.0), 1), ten_images());
  EXPECT_FALSE(v.passed);
  const auto* r = v.find("zoom_pct");
  EXPECT_FALSE(r->passed);
  EXPECT_DOUBLE_EQ(r->observed, 0.10);
  EXPECT_DOUBLE_EQ(r->threshold, 0.20);
}

TEST(ValidateZoom, TotalTimeBelowThreeMinutesFails) {
  auto v = quality::validate_zoom(zoom_cohort(std::vector<double>(10, 17900.0), 5), ten_images());
  EXPECT_FALSE(v.passed);
  EXPECT_FALSE(v.find("total_time")->passed);
  EXPECT_TRUE(v.find("zoom_pct")->passed);
}

TEST(ValidateZoom, EmptyAndUnknownStimulus) {
  EXPECT_THROW(quality::validate_zoom({}, ten_images()), EmptyInput);
  EXPECT_THROW(quality::validate_zoom({zoom_session("p", "nope", 6000, true)}, ten_images()), ReferentialIntegrity);
}

TEST(ValidateZoomProperty, RelaxingThresholdsNeverFlipsPassToFail) {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> dur(1000.0, 40000.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> d(10);
    for (double& x : d) x = dur(gen);
    auto sessions = zoom_cohort(d, gen() % 11);
    quality::ZoomRules strict;
    auto v = quality::validate_zoom(sessions, ten_images(), strict);
    expect_consistent(v);
    for (int k = 0; k < 4; ++k) {
      quality::ZoomRules relaxed = strict;
      if (k == 0) relaxed.min_image_time_ms *= 0.5;
      if (k == 1) relaxed.min_image_time_frac -= 0.3;
      if (k == 2) relaxed.min_total_time_ms *= 0.7;
      if (k == 3) relaxed.min_zoom_frac -= 0.1;
      auto r = quality::validate_zoom(sessions, ten_images(), relaxed);
      if (v.passed) {
        ASSERT_TRUE(r.passed);
      }
      ASSERT_EQ(r.reasons.size(), v.reasons.size());
    }
    EXPECT_EQ(json(v).dump(), json(quality::validate_zoom(sessions, ten_images(), strict)).dump());
  }
}

// ---------------------------------------------------------------------------
// CodeCharts validation.

namespace {

ResolvedTrial trial(TrialRole role, ReportStatus status, Point center = {500, 350}) {
  codecharts::Resolution r;
  r.status = status;
  r.code = "ABC";
  if (status != ReportStatus::nonexistent) r.center = center;
  return {role, r};
}

std::vector<ResolvedTrial> screening(std::size_t correct, std::size_t nonexistent) {
  std::vector<ResolvedTrial> out;
  for (std::size_t i = 0; i < 3; ++i) {
    out.push_back(trial(TrialRole::normal, i < nonexistent ? ReportStatus::nonexistent : ReportStatus::valid));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    out.push_back(trial(TrialRole::validation,
                        i < correct ? ReportStatus::validation_correct : ReportStatus::validation_incorrect));
  }
  return out;
}

std::vector<ResolvedTrial> with_misses(std::size_t validation, std::size_t missed) {
  std::vector<ResolvedTrial> out;
  for (std::size_t i = 0; i < validation; ++i) {
    out.push_back(trial(TrialRole::normal, ReportStatus::valid, {100.0 + 150.0 * i, 100.0 + 50.0 * (i % 2)}));
    out.push_back(trial(TrialRole::validation,
                        i < missed ? ReportStatus::validation_incorrect : ReportStatus::validation_correct));
  }
  return out;
}

}  // namespace

TEST(CodeChartsScreening, Cases) {
  EXPECT_TRUE(quality::validate_codecharts_screening(screening(3, 0)).passed);
  EXPECT_TRUE(quality::validate_codecharts_screening(screening(3, 1)).passed);
  auto two_nonexistent = quality::validate_codecharts_screening(screening(3, 2));
  EXPECT_FALSE(two_nonexistent.passed);
  EXPECT_FALSE(two_nonexistent.find("screening_nonexistent")->passed);
  auto missed = quality::validate_codecharts_screening(screening(2, 0));
  EXPECT_FALSE(missed.passed);
  EXPECT_FALSE(missed.find("screening_validation")->passed);
  auto short_block = screening(3, 0);
  short_block.pop_back();
  EXPECT_THROW(quality::validate_codecharts_screening(short_block), ParameterError);
}

TEST(CodeChartsFull, MissRateBoundaryIsStrict) {
  auto quarter = quality::validate_codecharts_full(with_misses(4, 1));
  EXPECT_TRUE(quarter.passed);
  EXPECT_DOUBLE_EQ(quarter.find("validation_miss_rate")->observed, 0.25);
  EXPECT_FALSE(quality::validate_codecharts_full(with_misses(4, 2)).passed);
  EXPECT_THROW(quality::validate_codecharts_full({trial(TrialRole::normal, ReportStatus::valid)}), ParameterError);
}

TEST(CodeChartsFull, SameSpotRunOfEightFails) {
  auto trials = with_misses(1, 0);
  for (int i = 0; i < 7; ++i) trials.push_back(trial(TrialRole::normal, ReportStatus::valid, {400, 300}));
  EXPECT_TRUE(quality::validate_codecharts_full(trials).passed);
  trials.push_back(trial(TrialRole::normal, ReportStatus::valid, {400, 300}));
  auto v = quality::validate_codecharts_full(trials);
  EXPECT_FALSE(v.passed);
  EXPECT_FALSE(v.find("same_spot")->passed);
  EXPECT_DOUBLE_EQ(v.find("same_spot")->observed, 8.0);
}

TEST(CodeChartsFull, SameSpotUsesCentroidRadius) {
  std::vector<Point> ring;
  for (int i = 0; i < 8; ++i) {
    double a = i * std::numbers::pi / 4;
    ring.push_back({500 + 100 * std::cos(a), 350 + 100 * std::sin(a)});
  }
  EXPECT_EQ(quality::longest_same_spot_run(ring, 100.0 + 1e-9), 8u);
  EXPECT_LT(quality::longest_same_spot_run(ring, 99.0), 8u);
}

// ---------------------------------------------------------------------------
// ImportAnnots validation.

namespace {

Mask line_mask(std::size_t on, std::size_t width = 100) {
  Mask m(width, 1, 0);
  for (std::size_t i = 0; i < on; ++i) m[i] = 1;
  return m;
}

quality::ImportAnnotsSubmission annots(std::vector<std::size_t> overlaps, std::size_t empty_images) {
  quality::ImportAnnotsSubmission sub{"p", {}, {}};
  for (std::size_t i = 0; i < 10; ++i) sub.image_masks.push_back(line_mask(i < empty_images ? 0 : 5));
  for (auto k : overlaps) sub.validations.push_back({line_mask(k), line_mask(100)});
  return sub;
}

}  // namespace

TEST(Iou, HandValues) {
  EXPECT_DOUBLE_EQ(quality::iou(line_mask(4), line_mask(4)), 1.0);
  Mask a(4, 1, 0), b(4, 1, 0);
  a[0] = a[1] = 1;
  b[2] = b[3] = 1;
  EXPECT_DOUBLE_EQ(quality::iou(a, b), 0.0);
  b[2] = 0;
  b[1] = 1;
  EXPECT_DOUBLE_EQ(quality::iou(a, b), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(quality::iou(Mask(3, 3, 0), Mask(3, 3, 0)), 0.0);
  EXPECT_THROW(quality::iou(Mask(3, 3, 0), Mask(3, 2, 0)), ParameterError);
}

TEST(IouProperty, SymmetricAndOneIffIdenticalNonEmpty) {
  std::mt19937_64 gen(55);
  for (int trial = 0; trial < 200; ++trial) {
    Mask a(6, 5, 0), b(6, 5, 0);
    for (auto& v : a) v = gen() % 2;
    b = gen() % 4 == 0 ? a : b;
    if (b == Mask(6, 5, 0)) {
      for (auto& v : b) v = gen() % 2;
    }
    double ab = quality::iou(a, b);
    EXPECT_EQ(ab, quality::iou(b, a));
    EXPECT_DOUBLE_EQ(ab, oracle_iou(a, b));
    bool nonempty = !quality::mask_empty(a);
    EXPECT_EQ(ab == 1.0, a == b && nonempty);
  }
}

TEST(ValidateImportAnnots, IouRule) {
  EXPECT_TRUE(quality::validate_importannots(annots({56, 60, 10}, 0)).find("validation_iou")->passed);
  auto v = quality::validate_importannots(annots({54, 54, 90}, 0));
  EXPECT_FALSE(v.find("validation_iou")->passed);
  EXPECT_DOUBLE_EQ(v.find("validation_iou")->observed, 1.0);
  EXPECT_FALSE(v.passed);
}

TEST(ValidateImportAnnots, EmptyImagesRule) {
  EXPECT_TRUE(quality::validate_importannots(annots({90, 90, 90}, 1)).passed);
  auto v = quality::validate_importannots(annots({90, 90, 90}, 2));
  EXPECT_FALSE(v.passed);
  EXPECT_FALSE(v.find("empty_images")->passed);
}

TEST(ValidateImportAnnots, MissingValidationTruthsError) {
  EXPECT_THROW(quality::validate_importannots(annots({90, 90}, 0)), ParameterError);
}

// ---------------------------------------------------------------------------
// BubbleView validation.

namespace {

quality::BubbleParticipant bubbler(const std::string& pid, std::vector<std::size_t> clicks,
                                   heatmaps::BubbleTask task = heatmaps::BubbleTask::free_view,
                                   std::size_t desc_len = 0) {
  quality::BubbleParticipant p{pid, {}};
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    heatmaps::ClickSession s{pid, "img" + std::to_string(i), {}, std::nullopt, task};
    for (std::size_t k = 0; k < clicks[i]; ++k) s.clicks.push_back({static_cast<double>(k), 1, 1});
    if (task == heatmaps::BubbleTask::description) s.description = std::string(desc_len, 'x');
    p.sessions.push_back(std::move(s));
  }
  return p;
}

}  // namespace

TEST(ValidateBubbleView, DescriptionLength) {
  auto short_desc = quality::validate_bubbleview({bubbler("p", {12, 12}, heatmaps::BubbleTask::description, 149)});
  EXPECT_FALSE(short_desc[0].passed);
  EXPECT_FALSE(short_desc[0].find("description_chars")->passed);
  auto ok = quality::validate_bubbleview({bubbler("p", {12, 12}, heatmaps::BubbleTask::description, 150)});
  EXPECT_TRUE(ok[0].passed);
}

TEST(ValidateBubbleView, DescriptionCountsCodePoints) {
  auto p = bubbler("p", {12}, heatmaps::BubbleTask::description, 0);
  std::string text;
  for (int i = 0; i < 150; ++i) text += "\xC3\xA9";  // U+00E9
  p.sessions[0].description = text;
  EXPECT_TRUE(quality::validate_bubbleview({p})[0].passed);
}

TEST(ValidateBubbleView, FreeViewClickMinimum) {
  auto v = quality::validate_bubbleview({bubbler("p", {2, 2, 2})});
  EXPECT_TRUE(v[0].find("clicks_free_view")->passed);
  auto low = quality::validate_bubbleview({bubbler("p", {2, 1, 2})});
  EXPECT_FALSE(low[0].passed);
  auto desc = quality::validate_bubbleview({bubbler("p", {9, 10}, heatmaps::BubbleTask::description, 200)});
  EXPECT_FALSE(desc[0].find("clicks_description")->passed);
}

TEST(ValidateBubbleView, IqrOutlierFails) {
  std::vector<quality::BubbleParticipant> cohort;
  for (std::size_t n : {10u, 11u, 12u, 13u, 90u}) cohort.push_back(bubbler("p" + std::to_string(n), {n}));
  auto v = quality::validate_bubbleview(cohort);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(v[i].passed) << i;
  EXPECT_FALSE(v[4].passed);
  EXPECT_FALSE(v[4].find("click_iqr")->passed);
}

TEST(ValidateBubbleView, SmallCohortSkipsIqrWithReason) {
  std::vector<quality::BubbleParticipant> cohort{bubbler("a", {3}), bubbler("b", {4}), bubbler("c", {90})};
  auto v = quality::validate_bubbleview(cohort);
  for (const auto& verdict : v) {
    const auto* r = verdict.find("click_iqr");
    ASSERT_NE(r, nullptr);
    EXPECT_FALSE(r->mandatory);
    EXPECT_NE(r->note.find("skipped"), std::string::npos);
    EXPECT_TRUE(verdict.passed);
  }
}

TEST(ValidationConfig, JsonOverridesEveryThreshold) {
  quality::ValidationConfig d;
  json j = d;
  j["zoommaps"]["min_zoom_frac"] = 0.5;
  j["importannots"]["iou_threshold"] = 0.7;
  auto c = j.get<quality::ValidationConfig>();
  EXPECT_DOUBLE_EQ(c.zoom.min_zoom_frac, 0.5);
  EXPECT_DOUBLE_EQ(c.importannots.iou_threshold, 0.7);
  EXPECT_EQ(json(c)["bubbleview"], json(d)["bubbleview"]);
}

// ---------------------------------------------------------------------------
// CC and NSS.

TEST(Cc, HandIdentities) {
  Grid<double> h(3, 2, std::vector<double>{1, 5, 2, 8, 3, 0});
  Grid<double> affine = h, neg = h;
  for (double& v : affine) v = 2 * v + 3;
  for (double& v : neg) v = -v;
  EXPECT_NEAR(metrics::cc(h, h), 1.0, 1e-12);
  EXPECT_NEAR(metrics::cc(h, affine), 1.0, 1e-12);
  EXPECT_NEAR(metrics::cc(h, neg), -1.0, 1e-12);
  EXPECT_THROW(metrics::cc(h, Grid<double>(3, 2, 1.0)), ZeroVariance);
  EXPECT_THROW(metrics::cc(h, Grid<double>(2, 3, 1.0)), ParameterError);
}

TEST(CcProperty, SymmetricAffineInvariantAndMatchesOracle) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Grid<double> a(7, 5), b(7, 5);
    for (double& v : a) v = u(gen);
    for (double& v : b) v = u(gen);
    double ab = metrics::cc(a, b);
    EXPECT_NEAR(ab, metrics::cc(b, a), 1e-12);
    EXPECT_NEAR(ab, oracle_cc(a.raw(), b.raw()), 1e-9);
    Grid<double> t = b;
    double scale = 0.01 + 100 * u(gen), shift = 10 * u(gen) - 5;
    for (double& v : t) v = scale * v + shift;
    EXPECT_NEAR(metrics::cc(a, t), ab, 1e-9);
  }
}

TEST(Nss, HandValues) {
  Grid<double> m(2, 2, std::vector<double>{1, 3, 1, 3});
  std::vector<Point> at_three{{1.5, 0.5}, {1.2, 1.9}};
  EXPECT_NEAR(metrics::nss(m, at_three), 1.0, 1e-12);
  std::vector<Point> all{{0.5, 0.5}, {1.5, 0.5}, {0.5, 1.5}, {1.5, 1.5}};
  EXPECT_NEAR(metrics::nss(m, all), 0.0, 1e-9);
  EXPECT_THROW(metrics::nss(Grid<double>(2, 2, 1.0), all), ZeroVariance);
  EXPECT_THROW(metrics::nss(m, std::vector<Point>{}), EmptyInput);
  EXPECT_THROW(metrics::nss(m, std::vector<Point>{{2.0, 0.0}}), ParameterError);
}

TEST(NssProperty, AffineInvariantAndMatchesOracle) {
  std::mt19937_64 gen(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Grid<double> m(8, 6);
    for (double& v : m) v = u(gen);
    std::vector<Point> fix;
    for (int i = 0; i < 5; ++i) fix.push_back({u(gen) * 8, u(gen) * 6});
    double base = metrics::nss(m, fix);
    EXPECT_NEAR(base, oracle_nss(m.raw(), 8, fix), 1e-9);
    Grid<double> t = m;
    for (double& v : t) v = 4.5 * v + 2;
    EXPECT_NEAR(metrics::nss(t, fix), base, 1e-9);
  }
}

// ---------------------------------------------------------------------------
// Inter-observer consistency.

TEST(IocNss, IdenticalParticipantsMatchSelfNss) {
  std::vector<Point> pts{{10.5, 10.5}, {30.5, 12.5}, {22.5, 25.5}};
  metrics::FixationsByParticipant g{{"a", pts}, {"b", pts}};
  double ioc = metrics::ioc_nss(g, 40, 30, 3.0);
  auto map = gaussian_blur_auto(heatmaps::point_histogram(pts, 40, 30), 3.0);
  EXPECT_NEAR(ioc, metrics::nss(map, pts), 1e-12);
  EXPECT_GT(ioc, 0.0);
}

TEST(IocNss, DisjointFarPointsScoreBelowIdenticalCase) {
  metrics::FixationsByParticipant same{{"a", {{5.5, 5.5}}}, {"b", {{5.5, 5.5}}}};
  metrics::FixationsByParticipant apart{{"a", {{5.5, 5.5}}}, {"b", {{34.5, 24.5}}}};
  double s = metrics::ioc_nss(same, 40, 30, 2.0);
  double d = metrics::ioc_nss(apart, 40, 30, 2.0);
  EXPECT_LT(d, 0.0);
  EXPECT_LT(d, s);
}

TEST(IocNss, LabelPermutationInvariantAndNeedsTwo) {
  metrics::FixationsByParticipant g{{"a", {{5.5, 5.5}, {6, 7}}}, {"b", {{20, 10}}}, {"c", {{25, 20}, {1, 1}}}};
  metrics::FixationsByParticipant relabeled{{"z", g["a"]}, {"y", g["b"]}, {"x", g["c"]}};
  EXPECT_NEAR(metrics::ioc_nss(g, 40, 30, 3.0), metrics::ioc_nss(relabeled, 40, 30, 3.0), 1e-12);
  EXPECT_THROW(metrics::ioc_nss(metrics::FixationsByParticipant{{"a", {{1, 1}}}}, 40, 30, 3.0), ParameterError);
}

TEST(IocCc, IdenticalParticipantsAndDeterminism) {
  std::vector<Point> pts{{10.5, 10.5}, {30.5, 12.5}};
  metrics::FixationsByParticipant g{{"a", pts}, {"b", pts}, {"c", pts}, {"d", pts}};
  EXPECT_NEAR(metrics::ioc_cc(g, 40, 30, 3.0, 5, 1), 1.0, 1e-9);
  metrics::FixationsByParticipant h{{"a", {{3, 3}}}, {"b", {{20, 9}}}, {"c", {{10, 20}}}, {"d", {{30, 5}}}};
  EXPECT_EQ(metrics::ioc_cc(h, 40, 30, 4.0, 7, 99), metrics::ioc_cc(h, 40, 30, 4.0, 7, 99));
  EXPECT_THROW(metrics::ioc_cc(h, 40, 30, 4.0, 0, 99), ParameterError);
}

TEST(IocCcProperty, StandardErrorShrinksWithSplits) {
  metrics::FixationsByParticipant g;
  Rng rng(4);
  for (int p = 0; p < 8; ++p) {
    std::vector<Point> pts;
    for (int k = 0; k < 3; ++k) pts.push_back({rng.uniform(0, 40), rng.uniform(0, 30)});
    g["p" + std::to_string(p)] = pts;
  }
  auto spread = [&](std::size_t splits) {
    std::vector<double> est;
    for (std::uint64_t seed = 0; seed < 40; ++seed) est.push_back(metrics::ioc_cc(g, 40, 30, 3.0, splits, seed));
    return moments(est).stddev;
  };
  double ratio = spread(2) / spread(32);  // expected sqrt(16) = 4
  EXPECT_GT(ratio, 2.0);
  EXPECT_LT(ratio, 8.0);
}

// ---------------------------------------------------------------------------
// Element ranking.

TEST(ElementScores, Definitions) {
  Grid<double> m(10, 10, 0.1);
  m(3, 4) = 0.9;
  std::vector<ElementRegion> els{{"outer", "", Rect{0, 0, 8, 8}}, {"inner", "", Rect{5, 5, 2, 2}},
                                 {"other", "", Rect{8, 8, 2, 2}}};
  auto s = metrics::element_scores(m, els);
  EXPECT_DOUBLE_EQ(s[0].score, 0.9);
  EXPECT_GE(s[0].score, s[1].score);
  EXPECT_DOUBLE_EQ(s[1].score, s[2].score);
  EXPECT_THROW(metrics::element_scores(m, {{"tiny", "", Rect{0.6, 0.6, 0.3, 0.3}}}), ParameterError);
  auto ranked = metrics::rank_elements(s);
  EXPECT_EQ(ranked[0].element_id, "outer");
  EXPECT_EQ(ranked[1].element_id, "inner");  // tie broken by id
}

TEST(Spearman, HandValues) {
  std::vector<double> a{1, 2, 3}, rev{3, 2, 1}, swap{2, 1, 3};
  EXPECT_NEAR(metrics::spearman(a, a), 1.0, 1e-12);
  EXPECT_NEAR(metrics::spearman(a, rev), -1.0, 1e-12);
  EXPECT_NEAR(metrics::spearman(a, swap), 0.5, 1e-12);
  std::vector<metrics::ElementScore> x{{"a", 1}, {"b", 2}}, y{{"a", 1}, {"c", 2}};
  EXPECT_THROW(metrics::spearman(x, y), ParameterError);
}

TEST(SpearmanProperty, RangeMonotoneInvarianceAndOracle) {
  std::mt19937_64 gen(29);
  std::uniform_int_distribution<int> small(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 3 + gen() % 10;
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = small(gen);
    for (auto& v : b) v = small(gen);
    if (moments(a).stddev == 0 || moments(b).stddev == 0) continue;
    double rho = metrics::spearman(a, b);
    EXPECT_GE(rho, -1.0);
    EXPECT_LE(rho, 1.0);
    EXPECT_NEAR(rho, oracle_spearman(a, b), 1e-9);
    std::vector<double> t = a;
    for (auto& v : t) v = std::exp(v) - 3;
    EXPECT_NEAR(metrics::spearman(t, b), rho, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Saturation and cost.

namespace {

metrics::PerformanceFn fixture_curve() {
  return [](const std::vector<std::string>& subset) {
    static const double curve[] = {1.0, 1.7, 1.9, 1.96, 1.97, 1.98};
    return curve[subset.size() - 1];
  };
}

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("p" + std::to_string(i));
  return out;
}

}  // namespace

TEST(Saturation, FixtureCurveGivesFour) {
  auto r = metrics::saturation(fixture_curve(), ids(6), 1, 20, 0);
  EXPECT_EQ(r.n_star, 4u);
  ASSERT_EQ(r.curve.points.size(), 6u);
  EXPECT_DOUBLE_EQ(r.full_performance, 1.98);
  for (std::size_t i = 1; i < r.curve.points.size(); ++i) {
    EXPECT_LT(r.curve.points[i - 1].n_participants, r.curve.points[i].n_participants);
    EXPECT_TRUE(std::isfinite(r.curve.points[i].performance));
  }
}

TEST(Saturation, ConstantCurveGivesSmallestN) {
  auto r = metrics::saturation([](const auto&) { return 0.7; }, ids(10), 3, 5, 1);
  EXPECT_EQ(r.n_star, 3u);
  std::vector<std::size_t> ns;
  for (const auto& p : r.curve.points) ns.push_back(p.n_participants);
  EXPECT_EQ(ns, (std::vector<std::size_t>{3, 6, 9, 10}));
}

TEST(Saturation, DeterministicAndLabelOrderFree) {
  auto perf = [](const std::vector<std::string>& s) {
    double acc = 0;
    for (const auto& id : s) acc += static_cast<double>(std::hash<std::string>{}(id) % 97);
    return acc / static_cast<double>(s.size());
  };
  auto a = metrics::saturation(perf, ids(9), 2, 8, 42);
  auto shuffled = ids(9);
  std::reverse(shuffled.begin(), shuffled.end());
  auto b = metrics::saturation(perf, shuffled, 2, 8, 42);
  ASSERT_EQ(a.curve.points.size(), b.curve.points.size());
  for (std::size_t i = 0; i < a.curve.points.size(); ++i) {
    EXPECT_EQ(a.curve.points[i].performance, b.curve.points[i].performance);
  }
  EXPECT_THROW(metrics::saturation(perf, ids(1)), ParameterError);
}

TEST(Cost, PublishedExamples) {
  auto a = metrics::cost_estimate(15, metrics::Money::parse("$0.03"));
  EXPECT_EQ(a.total.str(), "$0.45");
  auto b = metrics::cost_estimate(30, metrics::Money::parse("0.10"));
  EXPECT_EQ(b.total.str(), "$3.00");
  EXPECT_EQ(metrics::cost_estimate(0, metrics::Money::parse("$1.25")).total.str(), "$0.00");
  EXPECT_EQ(metrics::Money::parse("$0.0125").str(), "$0.0125");
  EXPECT_THROW(metrics::Money::parse("abc"), ParameterError);
}

// ---------------------------------------------------------------------------
// Simulators.

TEST(GroundTruth, NormalizedAndValidated) {
  auto gt = three_gaussians();
  double sum = 0;
  for (double v : gt.density()) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_THROW(sim::GroundTruthDensity(Grid<double>(3, 3, 0.0)), ParameterError);
  EXPECT_THROW(sim::GroundTruthDensity(Grid<double>(2, 1, std::vector<double>{1.0, -1.0})), ParameterError);
}

TEST(SampleFixations, DeltaAndEmpty) {
  auto gt = sim::GroundTruthDensity::delta(50, 40, {12.3, 7.8});
  for (const auto& f : sim::sample_fixations(gt, 100, 5)) {
    EXPECT_DOUBLE_EQ(f.x, 12.5);
    EXPECT_DOUBLE_EQ(f.y, 7.5);
  }
  EXPECT_TRUE(sim::sample_fixations(gt, 0, 5).empty());
}

TEST(SampleFixations, UniformPassesChiSquare) {
  sim::GroundTruthDensity gt(Grid<double>(64, 64, 1.0));
  auto fix = sim::sample_fixations(gt, 10000, 2024);
  std::vector<double> bins(16, 0.0);
  for (const auto& f : fix) bins[static_cast<std::size_t>(f.y / 16) * 4 + static_cast<std::size_t>(f.x / 16)] += 1;
  double chi2 = 0;
  for (double o : bins) chi2 += (o - 625.0) * (o - 625.0) / 625.0;
  EXPECT_LT(chi2, 30.578);  // chi-square(15) upper 1% point
}

TEST(SampleFixations, DeterministicForSeed) {
  auto gt = three_gaussians();
  auto a = sim::sample_fixations(gt, 50, 77), b = sim::sample_fixations(gt, 50, 77);
  EXPECT_EQ(fixations_to_csv(a), fixations_to_csv(b));
}

TEST(SimCodeCharts, ZeroNoiseReportsNearestTriplet) {
  auto s = make_stimulus("s", 800, 500);
  auto m = fit_to_window(s);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    Point target{rng.uniform(0, 800), rng.uniform(0, 500)};
    auto gt = sim::GroundTruthDensity::delta(800, 500, target);
    auto chart = codecharts::generate_codechart({}, seed, "c" + std::to_string(seed));
    auto r = sim::sim_codecharts(gt, chart, m, participant("p", seed, 0.0, 0.0), "s");
    auto [px, py] = pixel_of(target, 800, 500);
    Point center_win = m.to_window({px + 0.5, py + 0.5});
    EXPECT_EQ(r.typed_code, chart.nearest(center_win).code);
    EXPECT_EQ(codecharts::resolve_report(chart, r.typed_code).status, ReportStatus::valid);
    EXPECT_GE(r.response_t_ms, 1500.0);
    EXPECT_LE(r.response_t_ms, 2500.0);
  }
}

TEST(SimCodeCharts, FullMissRateIsAlwaysNonexistent) {
  auto gt = three_gaussians();
  auto s = make_stimulus("s", 1000, 700);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto chart = codecharts::generate_codechart({}, seed, "c" + std::to_string(seed));
    auto r = sim::sim_codecharts(gt, chart, fit_to_window(s), participant("p", seed, 30, 1.0), "s");
    EXPECT_EQ(codecharts::resolve_report(chart, r.typed_code).status, ReportStatus::nonexistent);
  }
}

TEST(SimZoom, SinglePeakArgmaxMatches) {
  auto s = make_stimulus("s", 300, 200);
  auto gt = sim::GroundTruthDensity::mixture(300, 200, {{90, 130, 15, 1.0}});
  auto p = participant("p", 3, 0.0, 0.0);
  auto session = sim::sim_zoom(gt, s, p);
  for (std::size_t i = 1; i < session.events.size(); ++i) {
    EXPECT_GT(session.events[i].t_ms, session.events[i - 1].t_ms);
  }
  auto h = heatmaps::zoom_heatmap({session}, s);
  auto [gx, gy] = argmax(gt.density());
  double hmax = *std::max_element(h.values.begin(), h.values.end());
  EXPECT_EQ(h.values(gx, gy), hmax);
  EXPECT_GT(hmax, 1.0);
}

TEST(SimZoom, NoAffinityMeansUniformOne) {
  auto s = make_stimulus("s", 60, 40);
  auto gt = sim::GroundTruthDensity::mixture(60, 40, {{20, 20, 5, 1.0}});
  auto p = participant("p", 3, 30, 0.05);
  p.zoom_affinity = 0;
  auto session = sim::sim_zoom(gt, s, p);
  EXPECT_EQ(session.events.size(), 1u);
  for (double v : heatmaps::zoom_heatmap({session}, s).values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(SimZoom, TwoEqualPeaksGetSimilarValues) {
  auto s = make_stimulus("s", 400, 200);
  auto gt = sim::GroundTruthDensity::mixture(400, 200, {{100, 100, 20, 1.0}, {300, 100, 20, 1.0}});
  auto p = participant("p", 9, 0.0, 0.0);
  p.zoom_affinity = 2;
  auto h = heatmaps::zoom_heatmap({sim::sim_zoom(gt, s, p)}, s);
  double a = h.values(100, 100), b = h.values(300, 100);
  EXPECT_GT(a, 1.0);
  EXPECT_NEAR(a, b, 0.1 * std::max(a, b));
}

TEST(SimBubble, Cases) {
  auto s = make_stimulus("s", 100, 80);
  auto delta = sim::GroundTruthDensity::delta(100, 80, {40.2, 60.9});
  auto p = participant("p", 1, 0.0, 0.0);
  auto session = sim::sim_bubble(delta, s, p);
  ASSERT_EQ(session.clicks.size(), 10u);
  for (const auto& c : session.clicks) {
    EXPECT_DOUBLE_EQ(c.x, 40.5);
    EXPECT_DOUBLE_EQ(c.y, 60.5);
  }
  EXPECT_FALSE(session.description);
  p.clicks_per_image = 0;
  p.task = heatmaps::BubbleTask::description;
  p.description_length = 160;
  auto empty = sim::sim_bubble(delta, s, p);
  EXPECT_TRUE(empty.clicks.empty());
  EXPECT_EQ(empty.description->size(), 160u);
  quality::BubbleParticipant bp{"p", {empty}};
  EXPECT_FALSE(quality::validate_bubbleview({bp})[0].passed);
}

TEST(SimBubble, NoisyClicksStayInBounds) {
  auto s = make_stimulus("s", 50, 40);
  auto gt = sim::GroundTruthDensity::mixture(50, 40, {{2, 2, 3, 1.0}});
  auto p = participant("p", 6, 40, 0.0);
  p.clicks_per_image = 200;
  for (const auto& c : sim::sim_bubble(gt, s, p).clicks) EXPECT_TRUE(s.in_bounds({c.x, c.y}));
}

TEST(SimAnnotation, Cases) {
  auto s = make_stimulus("s", 40, 30);
  ElementRegion a{"A", "", Rect{2, 2, 10, 8}}, b{"B", "", Rect{20, 10, 12, 12}};
  auto p = participant("p", 1, 0, 0);
  auto m = sim::sim_annotation({{a, 1.0}, {b, 0.0}}, s, p);
  EXPECT_EQ(m.mask, rasterize(a, 40, 30));
  auto none = sim::sim_annotation({{a, 0.0}, {b, 0.0}}, s, p);
  EXPECT_TRUE(quality::mask_empty(none.mask));
  p.mask_noise_px = 1;
  auto dilated = sim::sim_annotation({{a, 1.0}}, s, p);
  EXPECT_EQ(dilated.mask, rasterize({"", "", Rect{1, 1, 12, 10}}, 40, 30));
}

TEST(SimAnnotation, ClosedLoopRanksHeavierElementFirst) {
  auto s = make_stimulus("s", 40, 30);
  ElementRegion a{"A", "", Rect{2, 2, 10, 8}}, b{"B", "", Rect{20, 10, 12, 12}};
  heatmaps::MaskSet masks;
  for (int i = 0; i < 30; ++i) {
    masks.push_back(sim::sim_annotation({{a, 0.9}, {b, 0.3}}, s, participant("p" + std::to_string(i), 500 + i, 0, 0)));
  }
  auto ranked = metrics::rank_elements(metrics::element_scores(heatmaps::importannots_heatmap(masks).values, {a, b}));
  EXPECT_EQ(ranked[0].element_id, "A");
}

TEST(SimulatorProperty, DeterministicGivenSeed) {
  auto gt = three_gaussians();
  auto s = make_stimulus("s", 1000, 700);
  auto p = participant("p", 1234, 30, 0.05);
  auto chart = codecharts::generate_codechart({}, 1, "c1");
  EXPECT_EQ(sim::sim_codecharts(gt, chart, fit_to_window(s), p).typed_code,
            sim::sim_codecharts(gt, chart, fit_to_window(s), p).typed_code);
  auto z1 = sim::sim_zoom(gt, s, p), z2 = sim::sim_zoom(gt, s, p);
  ASSERT_EQ(z1.events.size(), z2.events.size());
  for (std::size_t i = 0; i < z1.events.size(); ++i) EXPECT_EQ(z1.events[i].viewport, z2.events[i].viewport);
  auto b1 = sim::sim_bubble(gt, s, p), b2 = sim::sim_bubble(gt, s, p);
  for (std::size_t i = 0; i < b1.clicks.size(); ++i) EXPECT_EQ(b1.clicks[i].x, b2.clicks[i].x);
}

TEST(SyntheticParticipant, RejectsOutOfRangeRates) {
  auto p = participant("p", 1, 0, 1.5);
  EXPECT_THROW(p.check(), ParameterError);
  p.miss_rate = 0.1;
  p.report_noise_px = -1;
  EXPECT_THROW(p.check(), ParameterError);
}

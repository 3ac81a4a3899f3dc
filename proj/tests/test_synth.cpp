#include <gtest/gtest.h>

#include <cmath>

#include "gelvec/spots.hpp"
#include "gelvec/synth.hpp"
#include "oracles.hpp"

using namespace gelvec;

namespace {

double summed(const GelImage& img) {
  double s = 0;
  for (Density v : img.data()) s += v;
  return s;
}

}  // namespace

TEST(Stain, PiecewiseResponse) {
  const StainModel m{100, 200, 100};
  EXPECT_DOUBLE_EQ(stain_response(0, m), 0.0);
  EXPECT_DOUBLE_EQ(stain_response(100, m), 200.0);
  EXPECT_DOUBLE_EQ(stain_response(150, m), oracle::piecewise_stain(150, 100, 200, 100));
  EXPECT_DOUBLE_EQ(stain_response(150, m), 100.0);
  EXPECT_DOUBLE_EQ(stain_response(1000, m), 0.0);
  EXPECT_THROW(stain_response(-1, m), InvalidArgument);
}

TEST(Stain, ContinuityAndMonotonicityOnGrid) {
  for (const StainModel m : {StainModel{100, 200, 100}, StainModel{40, 255, 10}, StainModel{7.5, 60, 300}}) {
    EXPECT_NEAR(stain_response(m.threshold, m), stain_response(m.threshold * (1 + 1e-15), m), 1e-9);
    EXPECT_NEAR(stain_response(m.threshold, m), m.peak_density, 1e-9);
    double prev = stain_response(0, m);
    for (int i = 1; i <= 1000; ++i) {
      const double v = stain_response(m.threshold * i / 1000.0, m);
      EXPECT_GE(v, prev);
      prev = v;
    }
    for (int i = 1; i <= 1000; ++i) {
      const double v = stain_response(m.threshold + 3 * m.decay_width * i / 1000.0, m);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}

TEST(Render, BlankCanvas) {
  const GelImage img = render_gel({}, StainModel{}, {16, 9}, 255, 0.0, 1);
  EXPECT_EQ(summed(img), 0.0);
  EXPECT_THROW(render_gel({}, StainModel{}, {0, 9}, 255, 0.0, 1), DimensionError);
}

TEST(Render, BelowThresholdPeakAtCenter) {
  const StainModel m{100, 200, 100};
  const std::vector<SpotSpec> spots = {{"P", {20.3, 17.8}, 50, 3.0}};
  const GelImage img = render_gel(spots, m, {40, 40}, 255, 0.0, 1);
  PixelCoord best{};
  Density best_v = 0;
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x)
      if (img(x, y) > best_v) best_v = img(x, y), best = {x, y};
  EXPECT_EQ(best, (PixelCoord{20, 18}));
}

TEST(Render, NegativeStainAnnulus) {
  const StainModel m{100, 200, 100};
  const std::vector<SpotSpec> spots = {{"P", {30, 30}, 300, 4.0}};
  const GelImage img = render_gel(spots, m, {60, 60}, 255, 0.0, 1);
  // Quantity 3T: the center hollows out below the ring where Q ~ T.
  Density ring = 0;
  for (int x = 30; x < 60; ++x) ring = std::max(ring, img(x, 30));
  EXPECT_LT(img(30, 30), ring);
  // q > 2T with W <= T: center density is fully bleached.
  EXPECT_EQ(img(30, 30), 0);
}

TEST(Render, DeterministicPerSeed) {
  const std::vector<SpotSpec> spots = {{"P", {10, 10}, 50, 2.0}, {"Q", {30, 25}, 80, 3.0}};
  const GelImage a = render_gel(spots, StainModel{}, {40, 32}, 255, 0.05, 99);
  const GelImage b = render_gel(spots, StainModel{}, {40, 32}, 255, 0.05, 99);
  const GelImage c = render_gel(spots, StainModel{}, {40, 32}, 255, 0.05, 100);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Render, SuperpositionBelowThreshold) {
  const StainModel m{100, 200, 100};
  const SpotSpec p{"P", {20, 20}, 40, 3.0};
  const SpotSpec q{"Q", {60, 22}, 60, 3.0};
  const std::vector<SpotSpec> both = {p, q};
  const GelImage joint = render_gel(both, m, {80, 40}, 255, 0.0, 1);
  for (const SpotSpec& s : both) {
    const std::vector<SpotSpec> alone = {s};
    const GelImage iso = render_gel(alone, m, {80, 40}, 255, 0.0, 1);
    const PixelCoord c = nearest_pixel(s.center);
    const double joint_sum = spot_density(joint, segment_spot(joint, c, 0.05));
    const double iso_sum = spot_density(iso, segment_spot(iso, c, 0.05));
    EXPECT_NEAR(joint_sum, iso_sum, 0.05 * iso_sum) << s.name;
  }
}

TEST(Jitter, IdentityRangesLeaveSpotsUnchanged) {
  const std::vector<SpotSpec> spots = {{"P", {10.5, 20}, 5, 1}};
  const auto [moved, m] = jitter_spots(spots, JitterSpec{}, 5);
  EXPECT_TRUE(m.is_identity());
  EXPECT_EQ(moved[0].center, spots[0].center);
}

TEST(Jitter, ForcedMapMovesCenters) {
  JitterSpec j;
  j.scale_x = {2, 2};
  j.shift_x = {-5, -5};
  const std::vector<SpotSpec> spots = {{"P", {30, 60}, 5, 1}};
  const auto [moved, m] = jitter_spots(spots, j, 0);
  EXPECT_DOUBLE_EQ(moved[0].center.x, 55.0);
  EXPECT_DOUBLE_EQ(moved[0].center.y, 60.0);
  EXPECT_DOUBLE_EQ(m.sx(), 2.0);
}

TEST(Jitter, DeterministicAndWithinRanges) {
  JitterSpec j;
  j.scale_x = {0.9, 1.1};
  j.scale_y = {0.8, 1.2};
  j.shift_x = {-10, 10};
  j.shift_y = {-3, 4};
  const std::vector<SpotSpec> spots = {{"P", {30, 60}, 5, 1}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto [a, ma] = jitter_spots(spots, j, seed);
    const auto [b, mb] = jitter_spots(spots, j, seed);
    EXPECT_EQ(ma, mb);
    EXPECT_EQ(a[0].center, b[0].center);
    EXPECT_GE(ma.sx(), 0.9);
    EXPECT_LE(ma.sx(), 1.1);
    EXPECT_GE(ma.ty(), -3);
    EXPECT_LE(ma.ty(), 4);
  }
  j.scale_x = {0, 1};
  EXPECT_THROW(jitter_spots(spots, j, 0), InvalidArgument);
}

TEST(Cohort, CountsAndLabels) {
  CohortSpec spec = default_cohort_spec();
  spec.n_normal = spec.n_disease = 20;
  const auto cohort = make_cohort(spec);
  ASSERT_EQ(cohort.size(), 40u);
  int sum = 0;
  for (const auto& s : cohort) sum += s.label;
  EXPECT_EQ(sum, 0);
}

TEST(Cohort, TrueRefsAreRoundedJitteredCenters) {
  const CohortSpec spec = default_cohort_spec();
  const auto cohort = make_cohort(spec);
  for (const auto& s : cohort) {
    const Point a = apply_map(s.truth, find_spot(spec.spots, "BD-1").center);
    EXPECT_EQ(s.refs.a(), nearest_pixel(a));
  }
}

TEST(Cohort, Deterministic) {
  CohortSpec spec = default_cohort_spec();
  spec.n_normal = spec.n_disease = 3;
  const auto a = make_cohort(spec);
  const auto b = make_cohort(spec);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].truth, b[i].truth);
  }
  spec.jitter.seed += 1;
  EXPECT_NE(make_cohort(spec)[0].image, a[0].image);
}

TEST(Cohort, MissingReferenceIsRejected) {
  CohortSpec spec = default_cohort_spec();
  spec.reference_names[1] = "NOPE";
  EXPECT_THROW(make_cohort(spec), MissingReference);
}

TEST(Cohort, DiseaseMultiplierShowsInSpotDensity) {
  CohortSpec spec;
  spec.canvas = {96, 64};
  spec.n_normal = spec.n_disease = 1;
  spec.stain = {100, 200, 100};
  spec.spots = {{"A", {20, 20}, 50, 3}, {"B", {70, 40}, 50, 3}, {"CA-2", {45, 30}, 25, 3}};
  spec.reference_names = {"A", "B"};
  spec.disease_deltas = {{"CA-2", 3.0}};
  const auto cohort = make_cohort(spec);
  // Quantity 25 -> 75, both below T. Segment the whole spot footprint.
  const double normal = spot_density(cohort[0].image, segment_spot(cohort[0].image, {45, 30}, 0.01));
  const double disease = spot_density(cohort[1].image, segment_spot(cohort[1].image, {45, 30}, 0.01));
  EXPECT_NEAR(disease / normal, 3.0, 0.3);
}

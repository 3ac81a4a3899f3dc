#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gelvec/features.hpp"
#include "gelvec/spots.hpp"
#include "gelvec/synth.hpp"

using namespace gelvec;

namespace {

// 3x3 island of 10 centered at (cx, cy) on a zero background.
GelImage island(int w, int h, int cx, int cy, Density v = 10) {
  GelImage img(w, h, 255, Density{0});
  for (int y = cy - 1; y <= cy + 1; ++y)
    for (int x = cx - 1; x <= cx + 1; ++x) img.set(x, y, v);
  return img;
}

bool four_connected(const std::vector<PixelCoord>& px) {
  if (px.empty()) return false;
  std::vector<char> seen(px.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const PixelCoord p = px[stack.back()];
    stack.pop_back();
    for (std::size_t i = 0; i < px.size(); ++i)
      if (!seen[i] && std::abs(px[i].x - p.x) + std::abs(px[i].y - p.y) == 1) {
        seen[i] = 1;
        ++reached;
        stack.push_back(i);
      }
  }
  return reached == px.size();
}

const StainModel kStain{100, 200, 100};

}  // namespace

TEST(Segment, FlatIslandFromAnySeed) {
  const GelImage img = island(7, 7, 3, 3);
  for (int y = 2; y <= 4; ++y)
    for (int x = 2; x <= 4; ++x) {
      const SpotRegion r = segment_spot(img, {x, y}, 0.5);
      EXPECT_EQ(r.pixels.size(), 9u);
      EXPECT_DOUBLE_EQ(r.centroid.x, 3.0);
    }
}

TEST(Segment, FractionOneKeepsPeakPlateau) {
  GelImage img = island(7, 7, 3, 3);
  img.set(3, 3, 20);
  img.set(4, 3, 20);
  const SpotRegion r = segment_spot(img, {2, 2}, 1.0);
  EXPECT_EQ(r.peak, (PixelCoord{3, 3}));
  EXPECT_EQ(r.pixels, (std::vector<PixelCoord>{{3, 3}, {4, 3}}));
}

TEST(Segment, HalfMaximumRadiusOfRenderedSpot) {
  const double sigma = 4.0;
  const std::vector<SpotSpec> spots = {{"P", {40, 40}, 80, sigma}};
  const GelImage img = render_gel(spots, kStain, {80, 80}, 255, 0.0, 1);
  const SpotRegion r = segment_spot(img, {35, 41}, 0.5);
  const double radius = std::sqrt(static_cast<double>(r.pixels.size()) / std::acos(-1.0));
  EXPECT_NEAR(radius, sigma * std::sqrt(2 * std::log(2.0)), 1.0);
}

TEST(Segment, MembershipProperty) {
  CohortSpec spec = default_cohort_spec();
  spec.n_normal = spec.n_disease = 2;
  for (const auto& s : make_cohort(spec)) {
    for (const SpotSpec& spot : spec.spots) {
      const PixelCoord seed = nearest_pixel(apply_map(s.truth, spot.center));
      if (s.image.at(seed) == 0) continue;
      for (const double fraction : {0.3, 0.5, 0.9}) {
        const SpotRegion r = segment_spot(s.image, seed, fraction);
        const double cut = fraction * s.image.at(r.peak);
        for (const PixelCoord& p : r.pixels) EXPECT_GE(s.image.at(p), cut);
        EXPECT_NE(std::find(r.pixels.begin(), r.pixels.end(), r.peak), r.pixels.end());
        EXPECT_TRUE(four_connected(r.pixels));
      }
    }
  }
}

TEST(Segment, ErrorCases) {
  const GelImage img = island(7, 7, 3, 3);
  EXPECT_THROW(segment_spot(img, {0, 0}), SpotNotFound);
  EXPECT_THROW(segment_spot(img, {9, 0}), OutOfBounds);
  EXPECT_THROW(segment_spot(img, {3, 3}, 0.0), InvalidArgument);
  EXPECT_THROW(segment_spot(img, {3, 3}, 1.5), InvalidArgument);
}

TEST(SpotCenter, RenderedSpotNearestPixel) {
  const std::vector<SpotSpec> spots = {{"P", {30.2, 24.7}, 60, 3.0}};
  const GelImage img = render_gel(spots, kStain, {60, 50}, 255, 0.0, 1);
  EXPECT_EQ(spot_center(img, {28, 26}), (PixelCoord{30, 25}));
}

TEST(SpotCenter, SinglePixelAndBackground) {
  GelImage img(5, 5, 255, Density{0});
  img.set(1, 3, 40);
  EXPECT_EQ(spot_center(img, {1, 3}), (PixelCoord{1, 3}));
  EXPECT_THROW(spot_center(img, {4, 4}), SpotNotFound);
}

TEST(SpotDensity, SumsAndIsAdditive) {
  const GelImage img = island(12, 7, 3, 3);
  const SpotRegion r = segment_spot(img, {3, 3});
  EXPECT_DOUBLE_EQ(spot_density(img, r), 90.0);

  GelImage one(3, 3, 255, Density{0});
  one.set(1, 1, 77);
  EXPECT_DOUBLE_EQ(spot_density(one, segment_spot(one, {1, 1})), 77.0);

  GelImage two = island(12, 7, 3, 3);
  for (int y = 2; y <= 4; ++y)
    for (int x = 7; x <= 9; ++x) two.set(x, y, 31);
  const SpotRegion r1 = segment_spot(two, {3, 3});
  const SpotRegion r2 = segment_spot(two, {8, 3});
  SpotRegion u = r1;
  u.pixels.insert(u.pixels.end(), r2.pixels.begin(), r2.pixels.end());
  EXPECT_EQ(spot_density(two, u), spot_density(two, r1) + spot_density(two, r2));

  SpotRegion outside = r1;
  outside.pixels.push_back({40, 0});
  EXPECT_THROW(spot_density(two, outside), OutOfBounds);
}

TEST(SpotDensity, InvariantUnderIntegerCoTranslation) {
  CohortSpec spec = default_cohort_spec();
  spec.n_normal = 1;
  spec.n_disease = 1;
  for (const auto& s : make_cohort(spec)) {
    const std::vector<SpotSpec> moved = apply_to_spots(spec.spots, s.truth);
    const PixelCoord seed = nearest_pixel(find_spot(moved, "CA-2").center);
    const GelImage shifted = resample(s.image, AffineMap(1, 1, 5, -3), s.image.extent(), Bilinear{});
    EXPECT_EQ(spot_density(shifted, segment_spot(shifted, {seed.x + 5, seed.y - 3})),
              spot_density(s.image, segment_spot(s.image, seed)));
  }
}

TEST(Detect, BlankImageHasNoSpots) {
  EXPECT_TRUE(detect_spots(GelImage(20, 20), 10, 5).empty());
  EXPECT_THROW(detect_spots(GelImage(20, 20), 0, 5), InvalidArgument);
}

TEST(Detect, SingleRenderedSpot) {
  const std::vector<SpotSpec> spots = {{"P", {50, 50}, 70, 3.0}};
  const GelImage img = render_gel(spots, kStain, {100, 100}, 255, 0.0, 1);
  const auto found = detect_spots(img, 40, 8);
  ASSERT_EQ(found.size(), 1u);
  EXPECT_NEAR(found[0].centroid.x, 50.0, 1.0);
  EXPECT_NEAR(found[0].centroid.y, 50.0, 1.0);
}

TEST(Detect, TwoSpotsFortyPixelsApart) {
  const std::vector<SpotSpec> spots = {{"P", {30, 40}, 70, 3.0}, {"Q", {70, 40}, 50, 3.0}};
  const GelImage img = render_gel(spots, kStain, {100, 80}, 255, 0.0, 1);
  const auto found = detect_spots(img, 40, 10);
  ASSERT_EQ(found.size(), 2u);
  // Strongest first.
  EXPECT_NEAR(found[0].centroid.x, 30.0, 1.0);
  EXPECT_NEAR(found[1].centroid.x, 70.0, 1.0);
}

TEST(Detect, RenderRoundTripProperty) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(12, 108), q(40, 95);
  for (int trial = 0; trial < 20; ++trial) {
    const double sigma = 2.5;
    std::vector<SpotSpec> spots;
    while (spots.size() < 6) {
      const Point c{pos(rng), pos(rng)};
      const bool clear = std::all_of(spots.begin(), spots.end(), [&](const SpotSpec& s) {
        return std::hypot(s.center.x - c.x, s.center.y - c.y) >= 6 * sigma;
      });
      if (clear) spots.push_back({"S" + std::to_string(spots.size()), c, q(rng), sigma});
    }
    const GelImage img = render_gel(spots, kStain, {120, 120}, 255, 0.0, 1);
    const auto found = detect_spots(img, 30, 2 * sigma);
    ASSERT_EQ(found.size(), spots.size()) << "trial " << trial;
    for (const SpotSpec& s : spots) {
      double best = 1e9;
      for (const SpotRegion& r : found)
        best = std::min(best, std::hypot(r.centroid.x - s.center.x, r.centroid.y - s.center.y));
      EXPECT_LE(best, 1.0) << "trial " << trial << " spot " << s.name;
    }
  }
}

TEST(Vectorize, WholeIsRowMajor) {
  const GelImage img(2, 2, 255, std::vector<Density>{1, 2, 3, 4});
  const FeatureVector fv = vectorize_whole(img, "x");
  EXPECT_EQ(fv.values, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(fv.mode, Representation::WholeRectangle);
  EXPECT_EQ(fv.source_id, "x");
}

TEST(Vectorize, WholeDimensionIsPixelCount) {
  for (const auto& [w, h] : {std::pair{1, 1}, std::pair{128, 128}, std::pair{17, 3}, std::pair{3, 40}})
    EXPECT_EQ(vectorize_whole(GelImage(w, h)).dim(), static_cast<std::size_t>(w * h));
}

TEST(Vectorize, ChosenSpots) {
  const GelImage img = island(7, 7, 3, 3);
  const std::vector<PixelCoord> one = {{3, 3}};
  EXPECT_EQ(vectorize_spots(img, one).values, (std::vector<double>{90}));
  const std::vector<PixelCoord> four = {{3, 3}, {2, 2}, {4, 4}, {2, 4}};
  EXPECT_EQ(vectorize_spots(img, four).dim(), 4u);
  EXPECT_THROW(vectorize_spots(img, std::vector<PixelCoord>{}), EmptySpotList);
  const std::vector<PixelCoord> dead = {{3, 3}, {0, 0}};
  EXPECT_THROW(vectorize_spots(img, dead), SpotNotFound);
}

TEST(Scale, MinMaxToUnitInterval) {
  const std::vector<FeatureVector> v = {
      {{0, 5, 3}, Representation::ChosenSpots, "a"},
      {{255, 5, 1}, Representation::ChosenSpots, "b"},
      {{100, 5, 2}, Representation::ChosenSpots, "c"},
  };
  const auto [scaled, scaler] = scale_features(v);
  EXPECT_EQ(scaled[0].values[0], 0.0);
  EXPECT_EQ(scaled[1].values[0], 1.0);
  for (const auto& s : scaled) EXPECT_EQ(s.values[1], 0.0);  // constant component
  EXPECT_DOUBLE_EQ(scaled[2].values[2], 0.5);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(scaler.apply(v[i]).values, scaled[i].values);
  EXPECT_EQ(scaled[1].source_id, "b");
}

TEST(Scale, DimensionMismatch) {
  const std::vector<FeatureVector> v = {{{1, 2}, {}, ""}, {{1}, {}, ""}};
  EXPECT_THROW(scale_features(v), DimensionMismatch);
  EXPECT_THROW(scale_features(std::vector<FeatureVector>{}), DimensionMismatch);
}

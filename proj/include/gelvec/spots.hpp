#ifndef GELVEC_SPOTS_HPP
#define GELVEC_SPOTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "resample.hpp"

namespace gelvec {

struct SpotRegion {
  PixelCoord seed;
  PixelCoord peak;
  std::vector<PixelCoord> pixels;  // row-major order, 4-connected, contains peak
  Point centroid;                  // density-weighted
};

namespace detail {

inline std::string coord_str(PixelCoord c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

inline void require_seed(const GelImage& image, PixelCoord seed) {
  if (!image.contains(seed)) throw OutOfBounds("seed " + coord_str(seed) + " outside image");
  if (image(seed.x, seed.y) == 0) throw SpotNotFound("no spot at seed " + coord_str(seed) + " (zero density)");
}

// Steepest 8-neighbour ascent; ties go to the lowest row-major index.
inline PixelCoord climb(const GelImage& image, PixelCoord p) {
  for (;;) {
    PixelCoord best = p;
    Density best_v = image(p.x, p.y);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy) continue;
        const int x = p.x + dx;
        const int y = p.y + dy;
        if (!image.contains(x, y)) continue;
        const Density v = image(x, y);
        if (v > best_v || (v == best_v && best != p && image.index(x, y) < image.index(best.x, best.y))) {
          best = {x, y};
          best_v = v;
        }
      }
    if (best == p) return p;
    p = best;
  }
}

}  // namespace detail

// Walks uphill from `seed` to a local peak, then floods 4-connected pixels
// whose density is at least fraction * peak.
inline SpotRegion segment_spot(const GelImage& image, PixelCoord seed, double fraction = 0.5) {
  if (!(fraction > 0.0) || fraction > 1.0) throw InvalidArgument("segmentation fraction must lie in (0, 1]");
  detail::require_seed(image, seed);

  const PixelCoord peak = detail::climb(image, seed);
  const double cut = fraction * image(peak.x, peak.y);

  std::vector<std::uint8_t> seen(image.extent().area(), 0);
  std::vector<PixelCoord> stack{peak};
  std::vector<PixelCoord> pixels;
  seen[image.index(peak.x, peak.y)] = 1;
  while (!stack.empty()) {
    const PixelCoord p = stack.back();
    stack.pop_back();
    pixels.push_back(p);
    const PixelCoord nbrs[4] = {{p.x + 1, p.y}, {p.x - 1, p.y}, {p.x, p.y + 1}, {p.x, p.y - 1}};
    for (const PixelCoord& n : nbrs) {
      if (!image.contains(n)) continue;
      const std::size_t idx = image.index(n.x, n.y);
      if (seen[idx] || image(n.x, n.y) < cut) continue;
      seen[idx] = 1;
      stack.push_back(n);
    }
  }
  std::sort(pixels.begin(), pixels.end(),
            [&](PixelCoord l, PixelCoord r) { return image.index(l.x, l.y) < image.index(r.x, r.y); });

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (const PixelCoord& p : pixels) {
    const double w = image(p.x, p.y);
    sw += w;
    sx += w * p.x;
    sy += w * p.y;
  }
  return {seed, peak, std::move(pixels), {sx / sw, sy / sw}};
}

// Sum of pixel densities over the region; exact in integer arithmetic.
inline double spot_density(const GelImage& image, const SpotRegion& region) {
  std::uint64_t sum = 0;
  for (const PixelCoord& p : region.pixels) sum += image.at(p);
  return static_cast<double>(sum);
}

// Reference pixel of a spot: its density-weighted centroid rounded half-up.
inline PixelCoord spot_center(const GelImage& image, PixelCoord seed, double fraction = 0.5) {
  const SpotRegion r = segment_spot(image, seed, fraction);
  return {static_cast<int>(std::floor(r.centroid.x + 0.5)), static_cast<int>(std::floor(r.centroid.y + 0.5))};
}

// Local maxima at or above min_peak, greedily thinned so that no two
// survivors lie within min_distance of each other (strongest first, then
// row-major), each segmented at `fraction`. Sorted by descending peak
// density, then row-major position.
inline std::vector<SpotRegion> detect_spots(const GelImage& image, Density min_peak, double min_distance,
                                            double fraction = 0.5) {
  if (min_peak == 0) throw InvalidArgument("min_peak must be positive");
  struct Candidate {
    PixelCoord at;
    Density value;
    std::size_t index;
  };
  std::vector<Candidate> candidates;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      const Density v = image(x, y);
      if (v < min_peak) continue;
      const std::size_t idx = image.index(x, y);
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if ((!dx && !dy) || !image.contains(x + dx, y + dy)) continue;
          const Density n = image(x + dx, y + dy);
          if (n > v || (n == v && image.index(x + dx, y + dy) < idx)) {
            is_max = false;
            break;
          }
        }
      if (is_max) candidates.push_back({{x, y}, v, idx});
    }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& l, const Candidate& r) {
    return l.value != r.value ? l.value > r.value : l.index < r.index;
  });

  std::vector<Candidate> kept;
  const double d2 = min_distance * min_distance;
  for (const Candidate& c : candidates) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Candidate& k) {
      const double dx = c.at.x - k.at.x;
      const double dy = c.at.y - k.at.y;
      return dx * dx + dy * dy <= d2;
    });
    if (!suppressed) kept.push_back(c);
  }

  std::vector<SpotRegion> out;
  out.reserve(kept.size());
  for (const Candidate& c : kept) out.push_back(segment_spot(image, c.at, fraction));
  return out;
}

}  // namespace gelvec

#endif  // GELVEC_SPOTS_HPP

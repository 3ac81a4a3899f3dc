#ifndef GELVEC_SYNTH_HPP
#define GELVEC_SYNTH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "affine.hpp"
#include "error.hpp"
#include "image.hpp"
#include "resample.hpp"

namespace gelvec {

// splitmix64 finalizer; mixes (seed, stream) into an independent seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 1));
}

struct SpotSpec {
  std::string name;
  Point center;
  double quantity = 0.0;
  double sigma = 1.0;
};

// Piecewise-linear stain response: density rises linearly to peak_density at
// the saturation threshold, then falls back toward zero over decay_width.
struct StainModel {
  double threshold = 100.0;
  double peak_density = 220.0;
  double decay_width = 100.0;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct JitterSpec {
  Range scale_x{1.0, 1.0};
  Range scale_y{1.0, 1.0};
  Range shift_x{0.0, 0.0};
  Range shift_y{0.0, 0.0};
  double noise_sigma = 0.0;  // fraction of max density
  std::uint64_t seed = 0;
};

struct CohortSpec {
  std::string disease = "synthetic";
  int n_normal = 20;
  int n_disease = 20;
  std::vector<SpotSpec> spots;
  std::map<std::string, double> disease_deltas;
  Extent canvas{192, 192};
  Density max_density = 255;
  StainModel stain;
  JitterSpec jitter;
  std::array<std::string, 2> reference_names;
  // Per-sample multiplicative spread of every spot quantity (log-normal
  // sigma). Models donor-to-donor variation; 0 disables it.
  double quantity_spread = 0.0;
};

struct CohortSample {
  std::string id;
  GelImage image;
  int label = -1;  // +1 disease, -1 normal
  ReferencePair refs;
  AffineMap truth;
};

inline void validate(const StainModel& m) {
  if (!(m.threshold > 0.0) || !(m.peak_density > 0.0) || !(m.decay_width > 0.0))
    throw InvalidArgument("stain model parameters must be positive");
}

inline void validate(const JitterSpec& j) {
  for (const Range& r : {j.scale_x, j.scale_y})
    if (!(r.lo > 0.0) || r.hi < r.lo) throw InvalidArgument("scale range must satisfy 0 < lo <= hi");
  for (const Range& r : {j.shift_x, j.shift_y})
    if (r.hi < r.lo) throw InvalidArgument("translation range must satisfy lo <= hi");
  if (j.noise_sigma < 0.0) throw InvalidArgument("noise sigma must be >= 0");
}

inline double stain_response(double q, const StainModel& m) {
  if (q < 0.0) throw InvalidArgument("protein quantity must be >= 0");
  const double slope = m.peak_density / m.threshold;
  if (q <= m.threshold) return slope * q;
  return std::max(0.0, m.peak_density - (m.peak_density / m.decay_width) * (q - m.threshold));
}

// Sums the Gaussian quantity field of all spots, applies the stain response,
// then adds seeded Gaussian sensor noise (noise_sigma is a fraction of
// max_density).
inline GelImage render_gel(std::span<const SpotSpec> spots, const StainModel& stain, Extent canvas,
                           Density max_density, double noise_sigma, std::uint64_t seed) {
  if (canvas.width < 1 || canvas.height < 1) throw DimensionError("canvas must be at least 1x1");
  validate(stain);
  for (const SpotSpec& s : spots)
    if (s.quantity < 0.0 || !(s.sigma > 0.0)) throw InvalidArgument("spot '" + s.name + "' has invalid quantity/sigma");

  std::vector<double> field(canvas.area(), 0.0);
  for (const SpotSpec& s : spots) {
    if (s.quantity == 0.0) continue;
    // Beyond 8 sigma the contribution is below 1e-13 of the amplitude.
    const double reach = 8.0 * s.sigma;
    const int x0 = std::max(0, static_cast<int>(std::floor(s.center.x - reach)));
    const int x1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(s.center.x + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(s.center.y - reach)));
    const int y1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(s.center.y + reach)));
    const double inv = 1.0 / (2.0 * s.sigma * s.sigma);
    for (int y = y0; y <= y1; ++y) {
      const double dy = y - s.center.y;
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - s.center.x;
        field[static_cast<std::size_t>(y) * static_cast<std::size_t>(canvas.width) + static_cast<std::size_t>(x)] +=
            s.quantity * std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma * max_density);
  std::vector<Density> data(canvas.area());
  for (std::size_t i = 0; i < field.size(); ++i) {
    double v = stain_response(field[i], stain);
    if (noise_sigma > 0.0) v += noise(rng);
    data[i] = detail::to_density(v, max_density);
  }
  return GelImage(canvas.width, canvas.height, max_density, std::move(data));
}

inline std::vector<SpotSpec> apply_to_spots(std::span<const SpotSpec> spots, const AffineMap& m) {
  std::vector<SpotSpec> out(spots.begin(), spots.end());
  for (SpotSpec& s : out) s.center = apply_map(m, s.center);
  return out;
}

// Draws a per-axis scale and translation from the jitter ranges and moves
// every spot center with it. The drawn map is returned for use as ground
// truth.
inline std::pair<std::vector<SpotSpec>, AffineMap> jitter_spots(std::span<const SpotSpec> spots,
                                                                const JitterSpec& jitter, std::uint64_t seed) {
  validate(jitter);
  std::mt19937_64 rng(seed);
  auto draw = [&rng](const Range& r) {
    if (r.lo == r.hi) return r.lo;
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
  };
  const double sx = draw(jitter.scale_x);
  const double sy = draw(jitter.scale_y);
  const double tx = draw(jitter.shift_x);
  const double ty = draw(jitter.shift_y);
  const AffineMap m(sx, sy, tx, ty);
  return {apply_to_spots(spots, m), m};
}

inline const SpotSpec& find_spot(std::span<const SpotSpec> spots, const std::string& name) {
  const auto it = std::find_if(spots.begin(), spots.end(), [&](const SpotSpec& s) { return s.name == name; });
  if (it == spots.end()) throw MissingReference("spot '" + name + "' not in cohort spec");
  return *it;
}

inline PixelCoord nearest_pixel(Point p) {
  return {static_cast<int>(std::floor(p.x + 0.5)), static_cast<int>(std::floor(p.y + 0.5))};
}

inline std::string sample_id(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
  return "s" + digits;
}

inline CohortSample make_sample(const CohortSpec& spec, std::size_t index, int label) {
  const std::uint64_t seed = derive_seed(spec.jitter.seed, index);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  std::vector<SpotSpec> spots = spec.spots;
  for (SpotSpec& s : spots) {
    if (label == +1)
      if (auto it = spec.disease_deltas.find(s.name); it != spec.disease_deltas.end()) s.quantity *= it->second;
    if (spec.quantity_spread > 0.0) s.quantity *= std::exp(spec.quantity_spread * unit(rng));
  }

  auto [moved, truth] = jitter_spots(spots, spec.jitter, rng());
  const std::uint64_t noise_seed = rng();
  CohortSample out{sample_id(index),
                   render_gel(moved, spec.stain, spec.canvas, spec.max_density, spec.jitter.noise_sigma, noise_seed),
                   label,
                   ReferencePair(nearest_pixel(find_spot(moved, spec.reference_names[0]).center),
                                 nearest_pixel(find_spot(moved, spec.reference_names[1]).center)),
                   truth};
  return out;
}

inline void validate(const CohortSpec& spec) {
  if (spec.n_normal < 0 || spec.n_disease < 0) throw InvalidArgument("sample counts must be >= 0");
  if (spec.quantity_spread < 0.0) throw InvalidArgument("quantity spread must be >= 0");
  validate(spec.stain);
  validate(spec.jitter);
  for (const auto& name : spec.reference_names) find_spot(spec.spots, name);
  for (const auto& [name, mult] : spec.disease_deltas) {
    find_spot(spec.spots, name);
    if (mult < 0.0) throw InvalidArgument("disease multiplier for '" + name + "' must be >= 0");
  }
}

// Normal samples come first (label -1), then disease samples (label +1).
// Sample i uses seed derive_seed(jitter.seed, i), so every sample is
// reproducible on its own.
inline std::vector<CohortSample> make_cohort(const CohortSpec& spec) {
  validate(spec);
  std::vector<CohortSample> out;
  out.reserve(static_cast<std::size_t>(spec.n_normal + spec.n_disease));
  for (int i = 0; i < spec.n_normal + spec.n_disease; ++i)
    out.push_back(make_sample(spec, static_cast<std::size_t>(i), i < spec.n_normal ? -1 : +1));
  return out;
}

// Reference pair of the undistorted template layout.
inline ReferencePair template_refs(const CohortSpec& spec) {
  return {nearest_pixel(find_spot(spec.spots, spec.reference_names[0]).center),
          nearest_pixel(find_spot(spec.spots, spec.reference_names[1]).center)};
}

// Twelve-spot layout used by the bundled study manifests and tests. BD-1
// and CA-3 are the landmarks; ALB is abundant enough to stain negatively.
inline CohortSpec default_cohort_spec() {
  CohortSpec c;
  c.disease = "synthetic-marker-disease";
  c.canvas = {192, 192};
  c.max_density = 255;
  c.stain = {100.0, 220.0, 100.0};
  c.spots = {
      {"BD-1", {48, 44}, 70, 3.0},   {"CA-3", {140, 136}, 65, 3.0}, {"CA-1", {72, 60}, 45, 3.0},
      {"CA-2", {108, 58}, 40, 3.0},  {"CA-4", {128, 88}, 50, 3.5},  {"ALB", {84, 100}, 160, 4.5},
      {"BD-2", {56, 124}, 35, 3.0},  {"BD-3", {112, 118}, 55, 3.0}, {"BD-4", {132, 60}, 30, 2.5},
      {"HP-1", {62, 88}, 45, 3.0},   {"HP-2", {104, 82}, 38, 3.0},  {"TF-1", {84, 138}, 42, 3.5},
  };
  c.reference_names = {"BD-1", "CA-3"};
  c.disease_deltas = {{"CA-1", 1.6}, {"CA-2", 1.8}, {"CA-4", 1.6}};
  c.jitter.scale_x = {0.9, 1.1};
  c.jitter.scale_y = {0.9, 1.1};
  c.jitter.shift_x = {-10.0, 10.0};
  c.jitter.shift_y = {-10.0, 10.0};
  c.jitter.noise_sigma = 0.02;
  c.jitter.seed = 20260101;
  c.quantity_spread = 0.1;
  return c;
}

}  // namespace gelvec

#endif  // GELVEC_SYNTH_HPP

#ifndef GELVEC_FEATURES_HPP
#define GELVEC_FEATURES_HPP

#include <algorithm>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "spots.hpp"

namespace gelvec {

enum class Representation { WholeRectangle, ChosenSpots };

inline const char* to_string(Representation r) { return r == Representation::WholeRectangle ? "whole" : "spots"; }

struct FeatureVector {
  std::vector<double> values;
  Representation mode = Representation::WholeRectangle;
  std::string source_id;

  std::size_t dim() const { return values.size(); }
};

// Every ROI pixel in row-major order, top-left first.
inline FeatureVector vectorize_whole(const GelImage& roi, std::string source_id = {}) {
  const auto data = roi.data();
  return {std::vector<double>(data.begin(), data.end()), Representation::WholeRectangle, std::move(source_id)};
}

// One component per seed: the summed density of the spot segmented from it.
// A dead seed fails the sample instead of contributing a zero.
inline FeatureVector vectorize_spots(const GelImage& roi, std::span<const PixelCoord> seeds, double fraction = 0.5,
                                     std::string source_id = {}) {
  if (seeds.empty()) throw EmptySpotList("chosen-spot representation needs at least one seed");
  FeatureVector fv{{}, Representation::ChosenSpots, std::move(source_id)};
  fv.values.reserve(seeds.size());
  for (const PixelCoord& s : seeds) fv.values.push_back(spot_density(roi, segment_spot(roi, s, fraction)));
  return fv;
}

// Per-component min-max scaling fitted on a training set. Constant
// components map to 0.
class MinMaxScaler {
public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size()) throw DimensionMismatch("scaler bounds differ in length");
  }

  template <class Rows>
  static MinMaxScaler fit(const Rows& rows) {
    auto it = std::begin(rows);
    if (it == std::end(rows)) throw DimensionMismatch("cannot fit scaler on an empty set");
    const std::size_t dim = values_of(*it).size();
    std::vector<double> lo(values_of(*it).begin(), values_of(*it).end());
    std::vector<double> hi = lo;
    for (; it != std::end(rows); ++it) {
      const auto& v = values_of(*it);
      if (v.size() != dim) throw DimensionMismatch("feature vectors differ in dimension");
      for (std::size_t k = 0; k < dim; ++k) {
        lo[k] = std::min(lo[k], v[k]);
        hi[k] = std::max(hi[k], v[k]);
      }
    }
    return {std::move(lo), std::move(hi)};
  }

  std::size_t dim() const { return lo_.size(); }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }

  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != lo_.size()) throw DimensionMismatch("vector dimension " + std::to_string(x.size()) +
                                                        " does not match scaler dimension " + std::to_string(dim()));
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double span = hi_[k] - lo_[k];
      out[k] = span > 0.0 ? (x[k] - lo_[k]) / span : 0.0;
    }
    return out;
  }

  FeatureVector apply(const FeatureVector& fv) const { return {apply(fv.values), fv.mode, fv.source_id}; }

  friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;

private:
  static const std::vector<double>& values_of(const FeatureVector& f) { return f.values; }
  static const std::vector<double>& values_of(const std::vector<double>& v) { return v; }

  std::vector<double> lo_;
  std::vector<double> hi_;
};

inline std::pair<std::vector<FeatureVector>, MinMaxScaler> scale_features(std::span<const FeatureVector> vectors) {
  MinMaxScaler scaler = MinMaxScaler::fit(vectors);
  std::vector<FeatureVector> out;
  out.reserve(vectors.size());
  for (const FeatureVector& v : vectors) out.push_back(scaler.apply(v));
  return {std::move(out), std::move(scaler)};
}

}  // namespace gelvec

#endif  // GELVEC_FEATURES_HPP

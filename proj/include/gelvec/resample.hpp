#ifndef GELVEC_RESAMPLE_HPP
#define GELVEC_RESAMPLE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "affine.hpp"
#include "error.hpp"
#include "image.hpp"

namespace gelvec {

struct Bilinear {
  friend bool operator==(const Bilinear&, const Bilinear&) = default;
};

// Normalized truncated Gaussian over the (2r+1)^2 taps around the rounded
// source point.
struct Gaussian {
  int radius = 2;
  double sigma = 1.0;
  friend bool operator==(const Gaussian&, const Gaussian&) = default;
};

using InterpKind = std::variant<Bilinear, Gaussian>;

struct RoiSpec {
  int width = 128;
  int height = 128;
  Density fill = 0;
  friend bool operator==(const RoiSpec&, const RoiSpec&) = default;
};

namespace detail {

inline double round_half_up(double v) { return std::floor(v + 0.5); }

inline Density to_density(double v, Density max_density) {
  const double r = round_half_up(v);
  if (!(r > 0.0)) return 0;
  if (r >= max_density) return max_density;
  return static_cast<Density>(r);
}

inline long floor_div2(long v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

// Offsets this close to an integer are treated as exact pixel hits.
constexpr double kIntegralEps = 1e-9;

// A source coordinate split into an integer cell and a fraction in [0, 1).
// Keeping the integer part exact makes integer translations of the source
// shift every tap without perturbing the weights.
struct AxisCoord {
  long cell;
  double frac;
};

inline AxisCoord axis_coord(long anchor, double offset) {
  const double fl = std::floor(offset);
  AxisCoord c{anchor + static_cast<long>(fl), offset - fl};
  if (c.frac <= kIntegralEps) {
    c.frac = 0.0;
  } else if (1.0 - c.frac <= kIntegralEps) {
    c.cell += 1;
    c.frac = 0.0;
  }
  return c;
}

inline double sample_bilinear(const GelImage& img, AxisCoord px, AxisCoord py, double fill) {
  if (px.cell < -2 || py.cell < -2 || px.cell > img.width() + 1L || py.cell > img.height() + 1L) return fill;
  auto tap = [&](long x, long y) {
    return img.contains(static_cast<int>(x), static_cast<int>(y)) ? static_cast<double>(img(int(x), int(y))) : fill;
  };
  double acc = 0.0;
  // Zero-weight taps are skipped so an exact hit returns the pixel untouched.
  const std::array<double, 2> wx{1.0 - px.frac, px.frac};
  const std::array<double, 2> wy{1.0 - py.frac, py.frac};
  for (int j = 0; j < 2; ++j) {
    if (wy[j] == 0.0) continue;
    for (int i = 0; i < 2; ++i) {
      if (wx[i] == 0.0) continue;
      acc += wx[i] * wy[j] * tap(px.cell + i, py.cell + j);
    }
  }
  return acc;
}

// Weights for taps centre-radius .. centre+radius; returns the centre, the
// half-up rounded source coordinate.
inline long gaussian_weights(AxisCoord c, const Gaussian& g, std::vector<double>& w) {
  w.assign(static_cast<std::size_t>(2 * g.radius + 1), 0.0);
  const long up = c.frac >= 0.5 ? 1 : 0;
  if (c.frac == 0.0) {
    w[static_cast<std::size_t>(g.radius)] = 1.0;
    return c.cell;
  }
  const double inv = 1.0 / (2.0 * g.sigma * g.sigma);
  for (int k = -g.radius; k <= g.radius; ++k) {
    const double d = static_cast<double>(up + k) - c.frac;
    w[static_cast<std::size_t>(k + g.radius)] = std::exp(-d * d * inv);
  }
  return c.cell + up;
}

inline double sample_gaussian(const GelImage& img, AxisCoord px, AxisCoord py, const Gaussian& g, double fill,
                              std::vector<double>& wx, std::vector<double>& wy) {
  const long cx = gaussian_weights(px, g, wx);
  const long cy = gaussian_weights(py, g, wy);
  if (cx < 0 || cy < 0 || cx >= img.width() || cy >= img.height()) return fill;
  double acc = 0.0;
  double norm = 0.0;
  for (int j = -g.radius; j <= g.radius; ++j) {
    const long y = cy + j;
    const double wyj = wy[static_cast<std::size_t>(j + g.radius)];
    if (wyj == 0.0 || y < 0 || y >= img.height()) continue;
    for (int i = -g.radius; i <= g.radius; ++i) {
      const long x = cx + i;
      const double w = wx[static_cast<std::size_t>(i + g.radius)] * wyj;
      if (w == 0.0 || x < 0 || x >= img.width()) continue;
      acc += w * img(static_cast<int>(x), static_cast<int>(y));
      norm += w;
    }
  }
  return norm > 0.0 ? acc / norm : fill;
}

// Per-axis inverse map: output coordinate p samples the source at
// src_anchor + (p - dst_anchor) * step.
struct AnchoredAxis {
  long src_anchor = 0;
  long dst_anchor = 0;
  double step = 1.0;
  double offset = 0.0;

  AxisCoord at(long p) const {
    return axis_coord(src_anchor, static_cast<double>(p - dst_anchor) * step + offset);
  }
};

inline GelImage warp(const GelImage& image, const AnchoredAxis& ax, const AnchoredAxis& ay, Extent out,
                     const InterpKind& interp, Density fill) {
  if (out.width < 1 || out.height < 1) throw DimensionError("resample output must be at least 1x1");
  if (const auto* g = std::get_if<Gaussian>(&interp); g && (g->radius < 1 || !(g->sigma > 0.0)))
    throw InvalidArgument("gaussian interpolation needs radius >= 1 and sigma > 0");
  if (fill > image.max_density()) throw RangeError("fill value exceeds max density");

  std::vector<AxisCoord> xs(static_cast<std::size_t>(out.width));
  for (int x = 0; x < out.width; ++x) xs[static_cast<std::size_t>(x)] = ax.at(x);
  std::vector<Density> data(out.area());
  std::vector<double> wx;
  std::vector<double> wy;
  const double f = fill;
  for (int y = 0; y < out.height; ++y) {
    const AxisCoord py = ay.at(y);
    for (int x = 0; x < out.width; ++x) {
      const AxisCoord px = xs[static_cast<std::size_t>(x)];
      const double v = std::visit(
          [&](const auto& kind) {
            if constexpr (std::is_same_v<std::decay_t<decltype(kind)>, Bilinear>)
              return sample_bilinear(image, px, py, f);
            else
              return sample_gaussian(image, px, py, kind, f, wx, wy);
          },
          interp);
      data[static_cast<std::size_t>(y) * static_cast<std::size_t>(out.width) + static_cast<std::size_t>(x)] =
          to_density(v, image.max_density());
    }
  }
  return GelImage(out.width, out.height, image.max_density(), std::move(data));
}

}  // namespace detail

// Inverse-mapping warp: output pixel p samples the source at
// invert_map(map)(p). Samples falling outside the source take `fill`.
inline GelImage resample(const GelImage& image, const AffineMap& map, Extent out, const InterpKind& interp,
                         Density fill = 0) {
  const AffineMap inv = invert_map(map);
  return detail::warp(image, {0, 0, inv.sx(), inv.tx()}, {0, 0, inv.sy(), inv.ty()}, out, interp, fill);
}

// Top-left corner of the ROI: the floored reference midpoint minus half the
// ROI size (floored).
inline PixelCoord roi_origin(const ReferencePair& refs, const RoiSpec& roi) {
  const long mx = detail::floor_div2(static_cast<long>(refs.a().x) + refs.b().x);
  const long my = detail::floor_div2(static_cast<long>(refs.a().y) + refs.b().y);
  return {static_cast<int>(mx - roi.width / 2), static_cast<int>(my - roi.height / 2)};
}

inline GelImage extract_roi(const GelImage& image, const ReferencePair& refs, const RoiSpec& roi) {
  if (roi.width < 1 || roi.height < 1) throw DimensionError("ROI must be at least 1x1");
  if (roi.fill > image.max_density()) throw RangeError("ROI fill exceeds max density");
  const PixelCoord o = roi_origin(refs, roi);
  std::vector<Density> data(static_cast<std::size_t>(roi.width) * static_cast<std::size_t>(roi.height), roi.fill);
  for (int y = 0; y < roi.height; ++y)
    for (int x = 0; x < roi.width; ++x)
      if (image.contains(o.x + x, o.y + y))
        data[static_cast<std::size_t>(y) * static_cast<std::size_t>(roi.width) + static_cast<std::size_t>(x)] =
            image(o.x + x, o.y + y);
  return GelImage(roi.width, roi.height, image.max_density(), std::move(data));
}

// Warps an image into the canonical frame defined by `canonical` refs.
// The canvas defaults to the input's own dimensions.
inline GelImage to_canonical(const GelImage& image, const ReferencePair& image_refs, const ReferencePair& canonical,
                             const InterpKind& interp, Density fill = 0, std::optional<Extent> canvas = {}) {
  // Anchoring at reference A keeps the integer part of every source
  // coordinate exact, so integer translations give byte-identical output.
  auto axis = [](int src_a, int src_b, int dst_a, int dst_b) {
    return detail::AnchoredAxis{src_a, dst_a, static_cast<double>(src_b - src_a) / (dst_b - dst_a), 0.0};
  };
  return detail::warp(image, axis(image_refs.a().x, image_refs.b().x, canonical.a().x, canonical.b().x),
                      axis(image_refs.a().y, image_refs.b().y, canonical.a().y, canonical.b().y),
                      canvas.value_or(image.extent()), interp, fill);
}

inline GelImage normalize(const GelImage& image, const ReferencePair& image_refs, const ReferencePair& canonical,
                          const RoiSpec& roi, const InterpKind& interp, std::optional<Extent> canvas = {}) {
  return extract_roi(to_canonical(image, image_refs, canonical, interp, roi.fill, canvas), canonical, roi);
}

}  // namespace gelvec

#endif  // GELVEC_RESAMPLE_HPP

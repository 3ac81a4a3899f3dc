#ifndef GELVEC_IMAGE_HPP
#define GELVEC_IMAGE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace gelvec {

using Density = std::uint16_t;

// Integer pixel position. x runs along the pH axis (columns), y along the
// mass axis (rows); origin is the top-left pixel.
struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

// Continuous position in pixel units; pixel (i, j) sits at (i, j).
struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Extent {
  int width = 0;
  int height = 0;
  friend bool operator==(const Extent&, const Extent&) = default;
  std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
};

// Rectangular grid of stain densities, row-major. 0 means no stain and
// max_density the strongest stain; file polarity is resolved at load time.
class GelImage {
public:
  GelImage() = default;

  GelImage(int width, int height, Density max_density = 255, Density fill = 0)
      : extent_{width, height}, max_density_(max_density) {
    check_shape();
    data_.assign(extent_.area(), fill);
    if (fill > max_density_) throw RangeError("fill value exceeds max density");
  }

  GelImage(int width, int height, Density max_density, std::vector<Density> data)
      : extent_{width, height}, max_density_(max_density), data_(std::move(data)) {
    check_shape();
    if (data_.size() != extent_.area())
      throw DimensionError("pixel count " + std::to_string(data_.size()) + " does not match " +
                           std::to_string(width) + "x" + std::to_string(height));
    for (Density v : data_)
      if (v > max_density_) throw RangeError("density " + std::to_string(v) + " exceeds max " +
                                             std::to_string(max_density_));
  }

  int width() const { return extent_.width; }
  int height() const { return extent_.height; }
  Extent extent() const { return extent_; }
  Density max_density() const { return max_density_; }
  std::span<const Density> data() const { return data_; }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < extent_.width && y < extent_.height; }
  bool contains(PixelCoord c) const { return contains(c.x, c.y); }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(extent_.width) + static_cast<std::size_t>(x);
  }

  // Unchecked access; callers guarantee bounds.
  Density operator()(int x, int y) const { return data_[index(x, y)]; }

  Density at(PixelCoord c) const {
    if (!contains(c))
      throw OutOfBounds("pixel (" + std::to_string(c.x) + "," + std::to_string(c.y) + ") outside " +
                        std::to_string(extent_.width) + "x" + std::to_string(extent_.height) + " image");
    return (*this)(c.x, c.y);
  }

  void set(int x, int y, Density v) {
    if (v > max_density_) throw RangeError("density exceeds max");
    data_[index(x, y)] = v;
  }

  friend bool operator==(const GelImage&, const GelImage&) = default;

private:
  void check_shape() const {
    if (extent_.width < 1 || extent_.height < 1)
      throw DimensionError("image dimensions must be at least 1x1");
    if (max_density_ < 1) throw RangeError("max density must be at least 1");
  }

  Extent extent_{};
  Density max_density_ = 255;
  std::vector<Density> data_;
};

inline Density density_at(const GelImage& image, PixelCoord coord) { return image.at(coord); }

// max_density - v for every pixel; flips file polarity.
inline GelImage inverted(const GelImage& image) {
  std::vector<Density> out(image.data().begin(), image.data().end());
  for (Density& v : out) v = static_cast<Density>(image.max_density() - v);
  return GelImage(image.width(), image.height(), image.max_density(), std::move(out));
}

}  // namespace gelvec

#endif  // GELVEC_IMAGE_HPP

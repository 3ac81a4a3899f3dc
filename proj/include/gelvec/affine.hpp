#ifndef GELVEC_AFFINE_HPP
#define GELVEC_AFFINE_HPP

#include <string>

#include "error.hpp"
#include "image.hpp"

namespace gelvec {

// Two landmarks anchoring the normalization. They may share neither a row
// nor a column, otherwise the per-axis solve is singular.
template <class P>
class BasicReferencePair {
public:
  BasicReferencePair(P a, P b) : a_(a), b_(b) {
    if (a.x == b.x || a.y == b.y)
      throw DegenerateReferences("reference points share a row or column");
  }

  const P& a() const { return a_; }
  const P& b() const { return b_; }

  friend bool operator==(const BasicReferencePair&, const BasicReferencePair&) = default;

private:
  P a_;
  P b_;
};

using ReferencePair = BasicReferencePair<PixelCoord>;
using PointPair = BasicReferencePair<Point>;

inline Point to_point(PixelCoord c) { return {static_cast<double>(c.x), static_cast<double>(c.y)}; }
inline PointPair to_points(const ReferencePair& r) { return {to_point(r.a()), to_point(r.b())}; }

// f(p) = M p + b with M = diag(sx, sy).
class AffineMap {
public:
  AffineMap() = default;
  AffineMap(double sx, double sy, double tx, double ty) : sx_(sx), sy_(sy), tx_(tx), ty_(ty) {
    if (sx == 0.0 || sy == 0.0) throw InvalidArgument("affine scale factors must be nonzero");
  }

  static AffineMap identity() { return {}; }

  double sx() const { return sx_; }
  double sy() const { return sy_; }
  double tx() const { return tx_; }
  double ty() const { return ty_; }

  bool is_identity() const { return sx_ == 1.0 && sy_ == 1.0 && tx_ == 0.0 && ty_ == 0.0; }

  friend bool operator==(const AffineMap&, const AffineMap&) = default;

private:
  double sx_ = 1.0;
  double sy_ = 1.0;
  double tx_ = 0.0;
  double ty_ = 0.0;
};

inline Point apply_map(const AffineMap& m, Point p) { return {m.sx() * p.x + m.tx(), m.sy() * p.y + m.ty()}; }

inline AffineMap invert_map(const AffineMap& m) {
  return {1.0 / m.sx(), 1.0 / m.sy(), -m.tx() / m.sx(), -m.ty() / m.sy()};
}

// Map sending src.a -> dst.a and src.b -> dst.b, solved independently per axis.
template <class P>
AffineMap solve_affine(const BasicReferencePair<P>& src, const BasicReferencePair<P>& dst) {
  const double sdx = static_cast<double>(src.b().x) - static_cast<double>(src.a().x);
  const double sdy = static_cast<double>(src.b().y) - static_cast<double>(src.a().y);
  const double ddx = static_cast<double>(dst.b().x) - static_cast<double>(dst.a().x);
  const double ddy = static_cast<double>(dst.b().y) - static_cast<double>(dst.a().y);
  if (sdx == 0.0 || sdy == 0.0 || ddx == 0.0 || ddy == 0.0)
    throw DegenerateReferences("reference points share a row or column");
  if (src == dst) return AffineMap::identity();
  const double sx = ddx / sdx;
  const double sy = ddy / sdy;
  return {sx, sy, static_cast<double>(dst.a().x) - sx * static_cast<double>(src.a().x),
          static_cast<double>(dst.a().y) - sy * static_cast<double>(src.a().y)};
}

}  // namespace gelvec

#endif  // GELVEC_AFFINE_HPP

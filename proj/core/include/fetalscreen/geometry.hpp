#pragma once

// Pixel-raster geometry: connected components, area, perimeter, centroid,
// principal axis and angles. Pixel (x, y) has its center at (x, y); y grows
// downward.

#include <cstdint>
#include <vector>

#include "fetalscreen/mask_model.hpp"

namespace fetalscreen {

struct PixelCoord {
  int x = 0;
  int y = 0;
  bool operator==(const PixelCoord&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double norm() const;
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
};

inline Vec2 operator-(const Point& a, const Point& b) { return {a.x - b.x, a.y - b.y}; }

struct BoundingBox {
  int min_x = 0;
  int min_y = 0;
  int max_x = 0;  // inclusive
  int max_y = 0;  // inclusive
  int width() const { return max_x - min_x + 1; }
  int height() const { return max_y - min_y + 1; }
};

/// One 8-connected component of one label. Pixels are kept in row-major order.
class Region {
 public:
  /// Throws Error(InvalidArgument) when `pixels` is empty.
  Region(std::vector<PixelCoord> pixels, MaskSchema schema, std::uint8_t label);

  const std::vector<PixelCoord>& pixels() const noexcept { return pixels_; }
  const BoundingBox& bbox() const noexcept { return bbox_; }
  MaskSchema schema() const noexcept { return schema_; }
  std::uint8_t label() const noexcept { return label_; }
  std::size_t size() const noexcept { return pixels_.size(); }

 private:
  std::vector<PixelCoord> pixels_;
  BoundingBox bbox_;
  MaskSchema schema_;
  std::uint8_t label_;
};

/// Maximal 8-connected components of `label`, largest first (ties broken by
/// the row-major position of each component's first pixel).
std::vector<Region> connected_components(const LabelMask& mask, std::uint8_t label);

std::size_t area(const Region& region);

/// Length of the closed outer boundary chain through boundary-pixel centers
/// (Moore-neighbour trace); axial steps count 1, diagonal steps sqrt(2).
/// Holes are ignored. Throws DEGENERATE_REGION for a single pixel.
double perimeter(const Region& region);

/// Ordered outer boundary chain starting at the top-left pixel; the start is
/// not repeated at the end.
std::vector<PixelCoord> trace_outer_boundary(const Region& region);

Point centroid(const Region& region);

/// Region with its holes filled: every pixel not reachable from outside the
/// bounding box through non-member pixels (4-connectivity).
Region fill_holes(const Region& region);

struct SecondMoments {
  double mu20 = 0.0;
  double mu02 = 0.0;
  double mu11 = 0.0;
};

/// Central second moments normalised by pixel count.
SecondMoments central_moments(const Region& region);

/// Eigenvalue ratio below which principal_axis refuses to answer.
inline constexpr double kIsotropyThreshold = 1.05;

/// Major-axis eigenvector of the second-moment matrix, unit length,
/// canonicalised to y >= 0 (and x >= 0 when y == 0).
/// Throws ISOTROPIC_REGION when lambda_max / lambda_min < 1.05.
Vec2 principal_axis(const Region& region);

/// A half-line with unit direction.
class Ray {
 public:
  /// Throws Error(InvalidArgument) unless |direction| is 1 within 1e-9.
  Ray(Point origin, Vec2 direction);
  /// Ray from `origin` towards `target` (normalised). Throws when they coincide.
  static Ray through(Point origin, Point target);

  const Point& origin() const noexcept { return origin_; }
  const Vec2& direction() const noexcept { return direction_; }

 private:
  Point origin_;
  Vec2 direction_;
};

/// arccos of the dot product of the two directions, in degrees [0, 180].
double angle_between(const Ray& a, const Ray& b);

}  // namespace fetalscreen

#pragma once

// Analytic shapes rasterised by pixel-center sampling: a pixel belongs to a
// shape iff its center (x, y) lies inside.

#include <variant>

#include "fetalscreen/geometry.hpp"
#include "fetalscreen/mask_model.hpp"

namespace fetalscreen {

struct Ellipse {
  Point center;
  double semi_x = 1.0;  // along the rotated x axis
  double semi_y = 1.0;
  double rotation_rad = 0.0;

  bool contains(double x, double y) const;
  BoundingBox bounds() const;
};

/// Oriented rectangle: `half_length` along `axis` (unit), `half_width` across.
struct Bar {
  Point center;
  Vec2 axis{1.0, 0.0};
  double half_length = 1.0;
  double half_width = 1.0;

  bool contains(double x, double y) const;
  BoundingBox bounds() const;
};

using Shape = std::variant<Ellipse, Bar>;

inline Ellipse disk(Point center, double radius) { return {center, radius, radius, 0.0}; }

bool shape_contains(const Shape& shape, double x, double y);
BoundingBox shape_bounds(const Shape& shape);

/// Paints `code` on every covered pixel (clipped to the raster).
void paint(LabelMask& mask, const Shape& shape, std::uint8_t code);
void paint(GreyImage& image, const Shape& shape, float value);

/// True when the shape's bounds lie inside the raster with `margin` pixels spare.
bool fits(const Shape& shape, int width, int height, int margin);

/// Rotation of v by `radians` (counter-clockwise in x-right/y-up terms, which is
/// clockwise on screen since y grows downward).
Vec2 rotate(const Vec2& v, double radians);

}  // namespace fetalscreen

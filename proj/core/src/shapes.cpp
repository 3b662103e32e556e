#include "fetalscreen/shapes.hpp"

#include <algorithm>
#include <cmath>

namespace fetalscreen {

Vec2 rotate(const Vec2& v, double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

bool Ellipse::contains(double x, double y) const {
  const double dx = x - center.x, dy = y - center.y;
  const double c = std::cos(rotation_rad), s = std::sin(rotation_rad);
  const double u = (c * dx + s * dy) / semi_x;
  const double v = (-s * dx + c * dy) / semi_y;
  return u * u + v * v <= 1.0;
}

BoundingBox Ellipse::bounds() const {
  const double c = std::cos(rotation_rad), s = std::sin(rotation_rad);
  const double ex = std::sqrt(semi_x * semi_x * c * c + semi_y * semi_y * s * s);
  const double ey = std::sqrt(semi_x * semi_x * s * s + semi_y * semi_y * c * c);
  return {static_cast<int>(std::floor(center.x - ex)), static_cast<int>(std::floor(center.y - ey)),
          static_cast<int>(std::ceil(center.x + ex)), static_cast<int>(std::ceil(center.y + ey))};
}

bool Bar::contains(double x, double y) const {
  const double dx = x - center.x, dy = y - center.y;
  const double along = dx * axis.x + dy * axis.y;
  const double across = -dx * axis.y + dy * axis.x;
  return std::abs(along) <= half_length && std::abs(across) <= half_width;
}

BoundingBox Bar::bounds() const {
  const double ex = std::abs(axis.x) * half_length + std::abs(axis.y) * half_width;
  const double ey = std::abs(axis.y) * half_length + std::abs(axis.x) * half_width;
  return {static_cast<int>(std::floor(center.x - ex)), static_cast<int>(std::floor(center.y - ey)),
          static_cast<int>(std::ceil(center.x + ex)), static_cast<int>(std::ceil(center.y + ey))};
}

bool shape_contains(const Shape& shape, double x, double y) {
  return std::visit([&](const auto& s) { return s.contains(x, y); }, shape);
}

BoundingBox shape_bounds(const Shape& shape) {
  return std::visit([](const auto& s) { return s.bounds(); }, shape);
}

namespace {

template <typename Raster, typename Value>
void paint_impl(Raster& raster, const Shape& shape, Value value) {
  const auto b = shape_bounds(shape);
  const int x0 = std::max(0, b.min_x), x1 = std::min(raster.width() - 1, b.max_x);
  const int y0 = std::max(0, b.min_y), y1 = std::min(raster.height() - 1, b.max_y);
  if (const auto* e = std::get_if<Ellipse>(&shape)) {
    // Same arithmetic as Ellipse::contains with the trig hoisted out.
    const double c = std::cos(e->rotation_rad), s = std::sin(e->rotation_rad);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - e->center.x, dy = y - e->center.y;
        const double u = (c * dx + s * dy) / e->semi_x;
        const double v = (-s * dx + c * dy) / e->semi_y;
        if (u * u + v * v <= 1.0) raster.set(x, y, value);
      }
    return;
  }
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (shape_contains(shape, x, y)) raster.set(x, y, value);
}

}  // namespace

void paint(LabelMask& mask, const Shape& shape, std::uint8_t code) { paint_impl(mask, shape, code); }
void paint(GreyImage& image, const Shape& shape, float value) { paint_impl(image, shape, value); }

bool fits(const Shape& shape, int width, int height, int margin) {
  const auto b = shape_bounds(shape);
  return b.min_x >= margin && b.min_y >= margin && b.max_x <= width - 1 - margin && b.max_y <= height - 1 - margin;
}

}  // namespace fetalscreen

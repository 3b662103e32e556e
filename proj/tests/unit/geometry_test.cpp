#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "error_code.hpp"
#include "fetalscreen/geometry.hpp"
#include "fetalscreen/phantom.hpp"
#include "fetalscreen/shapes.hpp"
#include "test_support.hpp"

namespace fetalscreen {
namespace {

using testing::code_of;
using testing::fill_rect;

constexpr double kPi = std::numbers::pi;

Region only_region(const LabelMask& mask, std::uint8_t label) {
  auto regions = connected_components(mask, label);
  EXPECT_EQ(regions.size(), 1u);
  return regions.at(0);
}

Region painted(const Shape& shape, int w = 400, int h = 300) {
  LabelMask m(w, h, MaskSchema::Cardiothoracic);
  paint(m, shape, ctr_label::kHeart);
  return only_region(m, ctr_label::kHeart);
}

// Angle between two undirected lines, degrees in [0, 90].
double line_angle(const Vec2& a, const Vec2& b) {
  return std::acos(std::min(1.0, std::abs(a.dot(b)) / (a.norm() * b.norm()))) * 180.0 / kPi;
}

TEST(Components, TwoBlocks) {
  LabelMask m(12, 8, MaskSchema::Cardiothoracic);
  fill_rect(m, 0, 0, 3, 3, 2);
  fill_rect(m, 6, 4, 3, 3, 2);
  const auto regions = connected_components(m, 2);
  ASSERT_EQ(regions.size(), 2u);
  EXPECT_EQ(regions[0].size(), 9u);
  EXPECT_EQ(regions[1].size(), 9u);
  EXPECT_EQ(regions[0].pixels().front(), (PixelCoord{0, 0}));
  EXPECT_TRUE(connected_components(m, 1).empty());
}

TEST(Components, DiagonalNeighboursJoinAndLargestFirst) {
  LabelMask m(10, 10, MaskSchema::Axis);
  m.set(0, 0, 1);
  m.set(1, 1, 1);
  m.set(2, 2, 1);
  fill_rect(m, 5, 5, 4, 4, 1);
  const auto regions = connected_components(m, 1);
  ASSERT_EQ(regions.size(), 2u);
  EXPECT_EQ(regions[0].size(), 16u);
  EXPECT_EQ(regions[1].size(), 3u);
  EXPECT_EQ(code_of([&] { connected_components(m, 9); }), ErrorCode::InvalidLabel);
}

TEST(Components, PhantomStructuresAreSingle) {
  PhantomParams p;
  p.n_frames = 1;
  p.render_images = false;
  const auto s = generate_phantom_study(p);
  const auto& axis = *s.masks[0].axis;
  for (auto label : {axis_label::kThorax, axis_label::kHeart, axis_label::kSpine, axis_label::kSeptum})
    EXPECT_EQ(connected_components(axis, label).size(), 1u) << int(label);
  for (auto label : {chamber_label::kLV, chamber_label::kRV, chamber_label::kLA, chamber_label::kRA})
    EXPECT_EQ(connected_components(*s.masks[0].chambers, label).size(), 1u) << int(label);
}

TEST(Region, EmptyRejected) {
  EXPECT_EQ(code_of([] { Region({}, MaskSchema::Axis, 1); }), ErrorCode::InvalidArgument);
}

TEST(Area, Fixtures) {
  LabelMask m(20, 20, MaskSchema::Axis);
  fill_rect(m, 0, 0, 10, 10, 1);
  m.set(15, 15, 2);
  EXPECT_EQ(area(only_region(m, 1)), 100u);
  EXPECT_EQ(area(only_region(m, 2)), 1u);
  const auto disk30 = painted(disk({200, 150}, 30));
  EXPECT_NEAR(static_cast<double>(area(disk30)), kPi * 900.0, 0.02 * kPi * 900.0);
}

TEST(Perimeter, Fixtures) {
  LabelMask m(20, 20, MaskSchema::Axis);
  fill_rect(m, 0, 0, 10, 10, 1);
  fill_rect(m, 12, 2, 5, 1, 2);
  m.set(19, 19, 3);
  EXPECT_EQ(perimeter(only_region(m, 1)), 36.0);
  EXPECT_EQ(perimeter(only_region(m, 2)), 8.0);
  EXPECT_EQ(code_of([&] { perimeter(only_region(m, 3)); }), ErrorCode::DegenerateRegion);
  const auto disk30 = painted(disk({200.3, 150.6}, 30));
  EXPECT_NEAR(perimeter(disk30), 2 * kPi * 30, 0.05 * 2 * kPi * 30);
}

TEST(Perimeter, HolesIgnored) {
  LabelMask m(20, 20, MaskSchema::Axis);
  fill_rect(m, 0, 0, 10, 10, 1);
  fill_rect(m, 3, 3, 4, 4, 0);
  EXPECT_EQ(perimeter(only_region(m, 1)), 36.0);
}

TEST(Trace, StartsTopLeftAndCloses) {
  LabelMask m(10, 10, MaskSchema::Axis);
  fill_rect(m, 2, 3, 3, 2, 1);
  const auto chain = trace_outer_boundary(only_region(m, 1));
  ASSERT_EQ(chain.size(), 6u);
  EXPECT_EQ(chain.front(), (PixelCoord{2, 3}));
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& a = chain[i];
    const auto& b = chain[(i + 1) % chain.size()];
    EXPECT_LE(std::abs(a.x - b.x), 1);
    EXPECT_LE(std::abs(a.y - b.y), 1);
  }
}

TEST(Centroid, Fixtures) {
  LabelMask m(20, 20, MaskSchema::Axis);
  fill_rect(m, 0, 0, 10, 10, 1);
  const auto c = centroid(only_region(m, 1));
  EXPECT_DOUBLE_EQ(c.x, 4.5);
  EXPECT_DOUBLE_EQ(c.y, 4.5);
  LabelMask single(20, 20, MaskSchema::Axis);
  single.set(3, 7, 2);
  const auto p = centroid(only_region(single, 2));
  EXPECT_EQ(p.x, 3.0);
  EXPECT_EQ(p.y, 7.0);
  const auto blob = centroid(painted(Ellipse{{123.4, 87.9}, 14, 9, 0.3}));
  EXPECT_NEAR(blob.x, 123.4, 0.5);
  EXPECT_NEAR(blob.y, 87.9, 0.5);
}

TEST(FillHoles, RingBecomesDisk) {
  LabelMask m(30, 30, MaskSchema::Axis);
  fill_rect(m, 5, 5, 20, 20, 1);
  fill_rect(m, 10, 10, 5, 5, 0);
  const auto ring = only_region(m, 1);
  const auto filled = fill_holes(ring);
  EXPECT_EQ(area(ring), 375u);
  EXPECT_EQ(area(filled), 400u);
  EXPECT_EQ(area(fill_holes(filled)), 400u);
}

TEST(PrincipalAxis, Fixtures) {
  LabelMask m(100, 100, MaskSchema::Axis);
  fill_rect(m, 10, 10, 40, 10, 1);
  const auto d = principal_axis(only_region(m, 1));
  EXPECT_NEAR(d.x, 1.0, 1e-12);
  EXPECT_NEAR(d.y, 0.0, 1e-12);

  EXPECT_EQ(code_of([] { principal_axis(painted(disk({200, 150}, 30))); }), ErrorCode::IsotropicRegion);

  // 30 degrees from vertical.
  const Vec2 axis{std::sin(30 * kPi / 180), std::cos(30 * kPi / 180)};
  const auto bar = painted(Bar{{200, 150}, axis, 40, 4});
  const auto got = principal_axis(bar);
  EXPECT_NEAR(got.norm(), 1.0, 1e-12);
  EXPECT_GE(got.y, 0.0);
  EXPECT_LT(line_angle(got, axis), 2.0);
}

TEST(PrincipalAxis, RotationRobustness) {
  const auto base = principal_axis(painted(Ellipse{{200, 150}, 45, 15, 0.0}));
  for (int deg = 0; deg < 180; deg += 15) {
    const double rad = deg * kPi / 180;
    const auto got = principal_axis(painted(Ellipse{{200, 150}, 45, 15, rad}));
    EXPECT_LT(line_angle(got, rotate(base, rad)), 2.0) << deg;
  }
}

TEST(Invariance, ScaleAndTranslation) {
  for (double rot : {0.0, 0.4, 1.1}) {
    const auto small = painted(Ellipse{{200, 150}, 30, 18, rot});
    const auto big = painted(Ellipse{{200, 150}, 60, 36, rot});
    EXPECT_NEAR(perimeter(big) / perimeter(small), 2.0, 0.06);
    EXPECT_NEAR(static_cast<double>(area(big)) / static_cast<double>(area(small)), 4.0, 0.12);

    const auto moved = painted(Ellipse{{207, 141}, 30, 18, rot});
    EXPECT_EQ(area(moved), area(small));
    EXPECT_DOUBLE_EQ(perimeter(moved), perimeter(small));
    EXPECT_NEAR(centroid(moved).x - centroid(small).x, 7.0, 1e-9);
    EXPECT_NEAR(centroid(moved).y - centroid(small).y, -9.0, 1e-9);
    const auto a = principal_axis(moved), b = principal_axis(small);
    EXPECT_NEAR(a.x, b.x, 1e-9);
    EXPECT_NEAR(a.y, b.y, 1e-9);
  }
}

TEST(Angle, Fixtures) {
  const Ray x({0, 0}, {1, 0});
  const Ray y({0, 0}, {0, 1});
  const Ray diag({0, 0}, {std::sqrt(0.5), std::sqrt(0.5)});
  EXPECT_NEAR(angle_between(x, y), 90.0, 1e-12);
  EXPECT_NEAR(angle_between(x, diag), 45.0, 1e-12);
  EXPECT_EQ(angle_between(x, x), 0.0);
  EXPECT_NEAR(angle_between(x, Ray({5, 5}, {-1, 0})), 180.0, 1e-12);
  EXPECT_EQ(code_of([] { Ray({0, 0}, {2, 0}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { Ray::through({1, 1}, {1, 1}); }), ErrorCode::InvalidArgument);
  EXPECT_NEAR(Ray::through({0, 0}, {3, 4}).direction().x, 0.6, 1e-15);
}

}  // namespace
}  // namespace fetalscreen

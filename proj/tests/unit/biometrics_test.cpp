#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "error_code.hpp"
#include "fetalscreen/biometrics.hpp"
#include "fetalscreen/phantom.hpp"
#include "fetalscreen/random.hpp"
#include "fetalscreen/shapes.hpp"
#include "test_support.hpp"

namespace fetalscreen {
namespace {

using testing::code_of;
using testing::fill_rect;

constexpr double kPi = std::numbers::pi;

AreaSeries series_of(std::vector<double> areas) {
  AreaSeries s;
  s.areas = std::move(areas);
  return s;
}

// Hand-built AXIS mask: septum at `ca_deg` to the midline, whole body rotated
// by `rot_deg` about the raster center and scaled by `scale`.
LabelMask axis_mask(double ca_deg, double rot_deg = 0.0, double scale = 1.0) {
  const Point c{200, 150};
  const double rot = rot_deg * kPi / 180;
  auto place = [&](Vec2 offset) {
    const auto r = rotate({offset.x * scale, offset.y * scale}, rot);
    return Point{c.x + r.x, c.y + r.y};
  };
  const Vec2 midline = rotate({0, -1}, rot);
  const Vec2 septum_dir = rotate(midline, ca_deg * kPi / 180);
  const Point heart = place({15, -20});
  const Point septum{heart.x - 10 * scale * septum_dir.x, heart.y - 10 * scale * septum_dir.y};

  LabelMask m(400, 300, MaskSchema::Axis);
  paint(m, Ellipse{c, 110 * scale, 90 * scale, rot}, axis_label::kThorax);
  paint(m, Ellipse{heart, 40 * scale, 34 * scale, rot}, axis_label::kHeart);
  paint(m, Bar{septum, septum_dir, 14 * scale, 2.5 * scale}, axis_label::kSeptum);
  paint(m, disk(place({0, 70}), 9 * scale), axis_label::kSpine);
  return m;
}

LabelMask concentric_ctr(double r_heart, double r_thorax) {
  LabelMask m(400, 300, MaskSchema::Cardiothoracic);
  paint(m, disk({200.2, 150.4}, r_thorax), ctr_label::kThorax);
  paint(m, disk({200.2, 150.4}, r_heart), ctr_label::kHeart);
  return m;
}

PhantomStudy phantom(double ctr, double ca, int period = 20, int n = 60, std::uint64_t seed = 7) {
  PhantomParams p;
  p.target_ctr = ctr;
  p.target_ca = ca;
  p.period = period;
  p.n_frames = n;
  p.seed = seed;
  p.render_images = false;
  return generate_phantom_study(p);
}

TEST(Anatomy, Validation) {
  const auto good = phantom(0.52, 45, 20, 1);
  EXPECT_TRUE(validate_anatomy(*good.masks[0].axis));
  EXPECT_TRUE(validate_anatomy(*good.masks[0].ctr));

  LabelMask outside(100, 100, MaskSchema::Cardiothoracic);
  fill_rect(outside, 0, 0, 40, 40, ctr_label::kThorax);
  fill_rect(outside, 60, 60, 20, 20, ctr_label::kHeart);
  const auto check = validate_anatomy(outside);
  EXPECT_FALSE(check);
  EXPECT_EQ(check.reason, "heart outside thorax");

  LabelMask no_heart(100, 100, MaskSchema::Cardiothoracic);
  fill_rect(no_heart, 0, 0, 40, 40, ctr_label::kThorax);
  EXPECT_EQ(validate_anatomy(no_heart).reason, "missing structure");

  LabelMask two_hearts(100, 100, MaskSchema::Cardiothoracic);
  fill_rect(two_hearts, 0, 0, 90, 90, ctr_label::kThorax);
  fill_rect(two_hearts, 10, 10, 10, 10, ctr_label::kHeart);
  fill_rect(two_hearts, 50, 50, 10, 10, ctr_label::kHeart);
  EXPECT_FALSE(validate_anatomy(two_hearts));

  // Straddling the thorax edge leaves a bay, not an enclosed hole, so none of
  // the heart counts as inside.
  LabelMask partial(100, 100, MaskSchema::Cardiothoracic);
  fill_rect(partial, 0, 0, 50, 100, ctr_label::kThorax);
  fill_rect(partial, 40, 10, 20, 10, ctr_label::kHeart);
  EXPECT_FALSE(validate_anatomy(partial));
  EXPECT_FALSE(validate_anatomy(partial, 0.1));

  EXPECT_EQ(code_of([] { validate_anatomy(LabelMask(4, 4, MaskSchema::Chambers)); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { cardiothoracic_ratio(outside); }), ErrorCode::AnatomyInvalid);
}

TEST(Ctr, ConcentricDisks) {
  EXPECT_NEAR(cardiothoracic_ratio(concentric_ctr(25, 50)), 0.50, 0.02);
  EXPECT_NEAR(cardiothoracic_ratio(concentric_ctr(30, 60)), 0.50, 0.02);
}

TEST(Ctr, HeartWithinThoraxEnclosingIt) {
  // A heart that fills the thorax except a one-pixel rim has nearly equal contours.
  LabelMask m(100, 100, MaskSchema::Cardiothoracic);
  fill_rect(m, 10, 10, 60, 60, ctr_label::kThorax);
  fill_rect(m, 11, 11, 58, 58, ctr_label::kHeart);
  EXPECT_NEAR(cardiothoracic_ratio(m), 1.0, 0.04);
}

TEST(Ctr, ScaleInvariance) {
  const double base = cardiothoracic_ratio(axis_mask(45));
  for (double k : {1.5, 2.0}) {
    LabelMask m(800, 600, MaskSchema::Axis);
    const auto small = axis_mask(45);
    for (int y = 0; y < 600; ++y)
      for (int x = 0; x < 800; ++x) {
        const int sx = static_cast<int>(std::floor((x - 400) / k + 200));
        const int sy = static_cast<int>(std::floor((y - 300) / k + 150));
        if (small.contains(sx, sy)) m.set(x, y, small.at(sx, sy));
      }
    EXPECT_NEAR(cardiothoracic_ratio(m), base, 0.02) << k;
  }
}

TEST(Ctr, PhantomTarget) {
  const auto s = phantom(0.52, 45, 20, 1);
  EXPECT_NEAR(cardiothoracic_ratio(*s.masks[0].ctr), 0.52, 0.02);
  EXPECT_NEAR(cardiothoracic_ratio(*s.masks[0].axis), 0.52, 0.02);
}

TEST(CardiacAxis, HandBuiltMasks) {
  EXPECT_NEAR(cardiac_axis(axis_mask(45)), 45.0, 2.0);
  EXPECT_NEAR(cardiac_axis(axis_mask(0)), 0.0, 2.0);
  EXPECT_NEAR(cardiac_axis(axis_mask(120)), 120.0, 2.0);
  EXPECT_EQ(code_of([] { cardiac_axis(concentric_ctr(25, 50)); }), ErrorCode::InvalidArgument);
}

TEST(CardiacAxis, RotationEquivariance) {
  for (double rot : {0.0, 15.0, 40.0, 90.0, 135.0, 180.0, 250.0}) {
    EXPECT_NEAR(cardiac_axis(axis_mask(45, rot)), 45.0, 2.0) << rot;
    EXPECT_NEAR(cardiac_axis(axis_mask(30, rot, 1.4)), 30.0, 2.0) << rot;
  }
}

TEST(CardiacAxis, PhantomSweep) {
  for (double ca : {25.0, 35.0, 45.0, 55.0, 65.0, 70.0}) {
    const auto s = phantom(0.5, ca, 20, 1, static_cast<std::uint64_t>(ca));
    EXPECT_NEAR(cardiac_axis(*s.masks[0].axis), ca, 2.0) << ca;
  }
  EXPECT_NEAR(cardiac_axis(*phantom(0.5, 0.0, 20, 1).masks[0].axis), 0.0, 2.0);
}

TEST(CardiacAxis, MissingSeptum) {
  auto m = axis_mask(45);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y) == axis_label::kSeptum) m.set(x, y, axis_label::kHeart);
  EXPECT_EQ(code_of([&] { cardiac_axis(m); }), ErrorCode::AnatomyInvalid);
}

TEST(Fac, Fixtures) {
  EXPECT_EQ(fractional_area_change(series_of({100, 80, 60, 80, 100})), 0.40);
  EXPECT_EQ(fractional_area_change(series_of({50, 50, 50})), 0.0);
  std::vector<double> sinus;
  for (int t = 0; t < 40; ++t) sinus.push_back(100 - 20 * std::sin(2 * kPi * t / 20));
  EXPECT_NEAR(fractional_area_change(series_of(sinus)), 1.0 / 3.0, 0.02);
  EXPECT_EQ(code_of([] { fractional_area_change(series_of({5})); }), ErrorCode::EmptySeries);
  EXPECT_EQ(code_of([] { fractional_area_change(series_of({0, 0, 0})); }), ErrorCode::ZeroArea);
}

TEST(Fac, BoundsProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(2 + rng.below(30));
    const bool constant = trial % 5 == 0;
    for (auto& v : a) v = constant ? 42.0 : rng.uniform(1, 1000);
    const double fac = fractional_area_change(series_of(a));
    EXPECT_GE(fac, 0.0);
    EXPECT_LE(fac, 1.0);
    EXPECT_EQ(fac == 0.0, constant);
  }
}

TEST(Smoothing, MovingAverage) {
  const std::vector<double> v{1, 2, 3, 10};
  const auto s = smooth_series(v, 3);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_DOUBLE_EQ(s[0], 1.5);
  EXPECT_DOUBLE_EQ(s[1], 2.0);
  EXPECT_DOUBLE_EQ(s[2], 5.0);
  EXPECT_DOUBLE_EQ(s[3], 6.5);
  EXPECT_EQ(code_of([&] { smooth_series(v, 2); }), ErrorCode::InvalidArgument);
}

TEST(Cycle, Sinusoid) {
  std::vector<double> a;
  for (int t = 0; t < 60; ++t) a.push_back(100 - 20 * std::sin(2 * kPi * t / 20));
  const auto c = detect_cardiac_cycle(series_of(a));
  ASSERT_EQ(c.systole_frames.size(), 3u);
  ASSERT_EQ(c.diastole_frames.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(c.systole_frames[k], 5 + 20 * k, 1);
    EXPECT_NEAR(c.diastole_frames[k], 15 + 20 * k, 1);
  }
}

TEST(Cycle, Errors) {
  std::vector<double> mono;
  for (int t = 0; t < 30; ++t) mono.push_back(t);
  EXPECT_EQ(code_of([&] { detect_cardiac_cycle(series_of(mono)); }), ErrorCode::NoCycle);
  EXPECT_EQ(code_of([] { detect_cardiac_cycle(series_of({1, 2, 1, 2, 1})); }), ErrorCode::SeriesTooShort);
  EXPECT_EQ(code_of([] { detect_cardiac_cycle(series_of(std::vector<double>(10, 3.0))); }), ErrorCode::NoCycle);
}

TEST(Cycle, AlternationProperty) {
  Rng rng(17);
  int detected = 0;
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<double> a(6 + rng.below(60));
    double level = 500;
    for (auto& v : a) v = level += rng.normal() * 20;
    CardiacCycle c;
    try {
      c = detect_cardiac_cycle(series_of(a));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NoCycle);
      continue;
    }
    ++detected;
    std::vector<std::pair<int, bool>> events;
    for (int f : c.systole_frames) events.push_back({f, false});
    for (int f : c.diastole_frames) events.push_back({f, true});
    std::sort(events.begin(), events.end());
    for (std::size_t i = 1; i < events.size(); ++i) {
      EXPECT_LT(events[i - 1].first, events[i].first);
      EXPECT_NE(events[i - 1].second, events[i].second);
    }
    for (const auto& e : events) {
      EXPECT_GT(e.first, 0);
      EXPECT_LT(e.first, static_cast<int>(a.size()) - 1);
    }
  }
  EXPECT_GT(detected, 100);
}

TEST(Cycle, PhantomExtrema) {
  const auto s = phantom(0.52, 45, 24, 72, 3);
  std::vector<FrameMasks> chambers_only;
  for (const auto& f : s.masks) chambers_only.push_back({std::nullopt, std::nullopt, f.chambers});
  const auto r = measure_study(chambers_only);
  ASSERT_TRUE(r.cycle.valid()) << r.cycle.reason;
  const auto& c = *r.cycle.value;
  ASSERT_EQ(c.systole_frames.size(), s.truth.systole_frames.size());
  ASSERT_EQ(c.diastole_frames.size(), s.truth.diastole_frames.size());
  for (std::size_t k = 0; k < c.systole_frames.size(); ++k)
    EXPECT_NEAR(c.systole_frames[k], s.truth.systole_frames[k], 1);
  for (std::size_t k = 0; k < c.diastole_frames.size(); ++k)
    EXPECT_NEAR(c.diastole_frames[k], s.truth.diastole_frames[k], 1);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(*r.fac[k].value, s.truth.fac[k], 0.02);
  EXPECT_FALSE(r.ctr.valid());
  EXPECT_EQ(r.frames_used, 0);
}

TEST(MeasureStudy, PhantomExample) {
  const auto s = phantom(0.52, 45, 20, 60, 7);
  const auto r = measure_study(s.masks);
  EXPECT_EQ(r.frames_total, 60);
  EXPECT_EQ(r.frames_used, 60);
  EXPECT_GE(*r.ctr.value, 0.50);
  EXPECT_LE(*r.ctr.value, 0.54);
  EXPECT_GE(*r.ca_degrees.value, 43.0);
  EXPECT_LE(*r.ca_degrees.value, 47.0);
  EXPECT_TRUE(r.exclusions.empty());
  EXPECT_EQ(r.area_series.size(), 4u);
  EXPECT_FALSE(report_to_json(r).empty());
}

TEST(MeasureStudy, CorruptedFramesExcluded) {
  auto s = phantom(0.52, 45, 10, 10, 5);
  for (int bad : {3, 7}) {
    for (auto* mask : {&*s.masks[bad].axis, &*s.masks[bad].ctr}) {
      LabelMask moved(mask->width(), mask->height(), mask->schema());
      for (int y = 0; y < mask->height(); ++y)
        for (int x = 0; x < mask->width(); ++x)
          if (mask->at(x, y) == axis_label::kThorax) moved.set(x, y, axis_label::kThorax);
      fill_rect(moved, 0, 0, 8, 8, axis_label::kHeart);
      *mask = moved;
    }
  }
  const auto r = measure_study(s.masks);
  EXPECT_EQ(r.frames_used, 8);
  ASSERT_EQ(r.exclusions.size(), 2u);
  EXPECT_EQ(r.exclusions[0].frame, 3);
  EXPECT_EQ(r.exclusions[1].frame, 7);
  EXPECT_EQ(r.exclusions[0].reason, "heart outside thorax");
  EXPECT_NEAR(*r.ctr.value, 0.52, 0.02);
}

TEST(MeasureStudy, SingleFrame) {
  const auto s = phantom(0.52, 45, 20, 1);
  const auto r = measure_study(s.masks);
  EXPECT_TRUE(r.ctr.valid());
  EXPECT_TRUE(r.ca_degrees.valid());
  for (const auto& f : r.fac) {
    EXPECT_FALSE(f.valid());
    EXPECT_EQ(f.reason, "series too short");
  }
  EXPECT_FALSE(r.cycle.valid());
}

TEST(MeasureStudy, AllFramesInvalid) {
  LabelMask bad(50, 50, MaskSchema::Cardiothoracic);
  fill_rect(bad, 0, 0, 10, 10, ctr_label::kThorax);
  std::vector<FrameMasks> frames(3, FrameMasks{std::nullopt, bad, std::nullopt});
  EXPECT_EQ(code_of([&] { measure_study(frames); }), ErrorCode::NoValidFrames);
  EXPECT_NO_THROW(measure_study(std::vector<FrameMasks>(2)));
}

}  // namespace
}  // namespace fetalscreen

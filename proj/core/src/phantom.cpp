#include "fetalscreen/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"

#include "fetalscreen/error.hpp"
#include "fetalscreen/random.hpp"
#include "fetalscreen/shapes.hpp"

namespace fetalscreen {

namespace {

// Body-frame dimensions at scale 1 (pixels). Anterior is -y.
constexpr double kThoraxSemiX = 170.0;
constexpr double kThoraxSemiY = 130.0;
constexpr double kSpineRadius = 10.0;
constexpr double kSpineDepth = 112.0;
constexpr double kSeptumHalfWidth = 2.5;
constexpr double kChamberOffset = 0.42;  // fraction of the heart's minor semi-axis
constexpr double kMargin = 2.0;

constexpr float kBackgroundGrey = 0.08f;
constexpr float kThoraxGrey = 0.35f;
constexpr float kHeartGrey = 0.60f;
constexpr float kChamberGrey = 0.15f;
constexpr float kSpineGrey = 0.95f;
constexpr float kSeptumGrey = 0.80f;
constexpr double kSpeckleSigma = 0.35;

struct Layout {
  Ellipse thorax;
  Ellipse heart;
  Ellipse spine;
  Bar septum;
  std::array<Point, 4> chamber_centers;
};

Point add(Point p, Vec2 v) { return {p.x + v.x, p.y + v.y}; }
Vec2 scaled(Vec2 v, double k) { return {v.x * k, v.y * k}; }

// Boundary samples of `inner` grown by `margin`; all must be inside `outer` shrunk by `margin`.
bool ellipse_inside(const Ellipse& inner, const Ellipse& outer, double margin) {
  const Ellipse shrunk{outer.center, outer.semi_x - margin, outer.semi_y - margin, outer.rotation_rad};
  if (shrunk.semi_x <= 0 || shrunk.semi_y <= 0) return false;
  for (int i = 0; i < 720; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 720.0;
    const Vec2 local{(inner.semi_x + margin) * std::cos(t), (inner.semi_y + margin) * std::sin(t)};
    const Point p = add(inner.center, rotate(local, inner.rotation_rad));
    if (!shrunk.contains(p.x, p.y)) return false;
  }
  return true;
}

bool ellipses_apart(const Ellipse& a, const Ellipse& b, double margin) {
  const Ellipse grown{b.center, b.semi_x + margin, b.semi_y + margin, b.rotation_rad};
  for (int i = 0; i < 720; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 720.0;
    const Vec2 local{(a.semi_x + margin) * std::cos(t), (a.semi_y + margin) * std::sin(t)};
    const Point p = add(a.center, rotate(local, a.rotation_rad));
    if (grown.contains(p.x, p.y)) return false;
  }
  return !a.contains(b.center.x, b.center.y) && !b.contains(a.center.x, a.center.y);
}

[[noreturn]] void infeasible(const std::string& what) { throw Error(ErrorCode::InfeasibleGeometry, what); }

Layout make_layout(const PhantomParams& p) {
  const double s = p.scale;
  const double c = p.target_ctr;
  const double rot = p.body_rotation_deg * std::numbers::pi / 180.0;
  const Point origin{(p.width - 1) / 2.0 + p.offset_x, (p.height - 1) / 2.0 + p.offset_y};
  auto place = [&](double bx, double by) { return add(origin, rotate({bx * s, by * s}, rot)); };

  Layout L;
  L.thorax = {origin, kThoraxSemiX * s, kThoraxSemiY * s, rot};

  // Heart sits anterior; shift it as far as the spine and thorax wall allow.
  const double wanted = 0.5 * (1.0 - c) * kThoraxSemiY;
  const double upper = (1.0 - c) * kThoraxSemiY - kMargin / s;
  const double lower = c * kThoraxSemiY - (kSpineDepth - kSpineRadius) + kMargin / s;
  const double shift = std::clamp(wanted, std::min(lower, upper), upper);
  L.heart = {place(0.0, -shift), c * kThoraxSemiX * s, c * kThoraxSemiY * s, rot};
  L.spine = disk(place(0.0, kSpineDepth), kSpineRadius * s);

  const double theta = p.target_ca * std::numbers::pi / 180.0;
  const Vec2 u = rotate({-std::sin(theta), -std::cos(theta)}, rot);  // towards the apex
  const Vec2 v{-u.y, u.x};
  const double r_min = std::min(L.heart.semi_x, L.heart.semi_y);
  L.septum = {add(L.heart.center, scaled(u, -0.15 * r_min)), u, 0.5 * r_min, kSeptumHalfWidth};

  const double a = kChamberOffset * r_min;
  L.chamber_centers = {add(L.heart.center, scaled(u, a) + scaled(v, a)),
                       add(L.heart.center, scaled(u, a) + scaled(v, -a)),
                       add(L.heart.center, scaled(u, -a) + scaled(v, a)),
                       add(L.heart.center, scaled(u, -a) + scaled(v, -a))};

  if (!fits(L.thorax, p.width, p.height, static_cast<int>(kMargin))) infeasible("thorax does not fit the image");
  if (!ellipse_inside(L.heart, L.thorax, kMargin)) infeasible("heart does not fit inside the thorax");
  if (!ellipse_inside(L.spine, L.thorax, kMargin)) infeasible("spine does not fit inside the thorax");
  if (!ellipses_apart(L.spine, L.heart, kMargin)) infeasible("spine overlaps the heart");
  if (0.35 * r_min < kMargin + kSeptumHalfWidth) infeasible("heart too small for a septum");

  std::array<double, 4> radius{};
  for (std::size_t i = 0; i < 4; ++i) radius[i] = std::sqrt(p.chamber_base_areas[i] / std::numbers::pi);
  const double reach = std::numbers::sqrt2 * a;
  for (std::size_t i = 0; i < 4; ++i)
    if (reach + radius[i] > r_min - kMargin)
      infeasible("chamber " + std::string(label_name(MaskSchema::Chambers, kChambers[i])) +
                 " does not fit inside the heart");
  // Neighbours in the 2x2 arrangement: LV-RV, LA-RA, LV-LA, RV-RA.
  constexpr std::array<std::pair<int, int>, 4> kAdjacent = {{{0, 1}, {2, 3}, {0, 2}, {1, 3}}};
  for (const auto& [i, j] : kAdjacent)
    if (radius[i] + radius[j] + kMargin > 2.0 * a) infeasible("chambers overlap");
  return L;
}

LabelMask render_structure_mask(const Layout& L, const PhantomParams& p, MaskSchema schema) {
  LabelMask mask(p.width, p.height, schema);
  paint(mask, L.thorax, axis_label::kThorax);
  paint(mask, L.heart, axis_label::kHeart);
  if (schema == MaskSchema::Axis) {
    paint(mask, L.spine, axis_label::kSpine);
    paint(mask, L.septum, axis_label::kSeptum);
  }
  return mask;
}

std::array<double, 4> chamber_radii(const PhantomParams& p, int frame) {
  std::array<double, 4> r{};
  for (std::size_t i = 0; i < 4; ++i)
    r[i] = std::sqrt(chamber_area(p.chamber_base_areas[i], p.fac_targets[i], p.period, frame) / std::numbers::pi);
  return r;
}

LabelMask render_chamber_mask(const Layout& L, const PhantomParams& p, int frame) {
  LabelMask mask(p.width, p.height, MaskSchema::Chambers);
  const auto r = chamber_radii(p, frame);
  for (std::size_t i = 0; i < 4; ++i) paint(mask, disk(L.chamber_centers[i], r[i]), kChambers[i]);
  return mask;
}

GreyImage render_image(const Layout& L, const PhantomParams& p, int frame) {
  GreyImage img(p.width, p.height, kBackgroundGrey);
  paint(img, L.thorax, kThoraxGrey);
  paint(img, L.heart, kHeartGrey);
  const auto r = chamber_radii(p, frame);
  for (std::size_t i = 0; i < 4; ++i) paint(img, disk(L.chamber_centers[i], r[i]), kChamberGrey);
  paint(img, L.septum, kSeptumGrey);
  paint(img, L.spine, kSpineGrey);
  if (p.noise_level > 0.0) {
    Rng rng(derive_seed(p.seed, {0xA4C, static_cast<std::uint64_t>(frame)}));
    const double sigma = kSpeckleSigma * p.noise_level;
    for (int y = 0; y < p.height; ++y)
      for (int x = 0; x < p.width; ++x)
        img.set(x, y, static_cast<float>(img.at(x, y) + sigma * rng.normal()));
  }
  return img;
}

}  // namespace

void PhantomParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(target_ctr >= 0.2 && target_ctr <= 0.9)) bad("target_ctr must lie in [0.2, 0.9]");
  if (!(target_ca >= 0.0 && target_ca < 180.0)) bad("target_ca must lie in [0, 180)");
  for (double f : fac_targets)
    if (!(f >= 0.0 && f <= 0.9)) bad("fac targets must lie in [0, 0.9]");
  for (double a : chamber_base_areas)
    if (!(a > 0.0)) bad("chamber base areas must be positive");
  if (period < 6) bad("period must be at least 6 frames");
  if (n_frames < 1) bad("n_frames must be positive");
  if (!(noise_level >= 0.0 && noise_level <= 1.0)) bad("noise_level must lie in [0, 1]");
  if (width < 16 || height < 16) bad("raster too small");
  if (!(scale > 0.0)) bad("scale must be positive");
}

double chamber_area(double base, double fac, int period, double t) {
  return base * (1.0 - fac * (1.0 - std::cos(2.0 * std::numbers::pi * t / period)) / 2.0);
}

double PhantomTruth::area(std::size_t chamber, double t) const {
  return chamber_area(chamber_base_areas.at(chamber), fac.at(chamber), period, t);
}

PhantomTruth phantom_truth(const PhantomParams& params) {
  PhantomTruth truth;
  truth.ctr = params.target_ctr;
  truth.ca_degrees = params.target_ca;
  truth.chamber_base_areas = params.chamber_base_areas;
  truth.fac = params.fac_targets;
  truth.period = params.period;
  truth.n_frames = params.n_frames;
  const int guard = (params.period + 3) / 4;
  auto interior = [&](int f) { return f >= guard && f <= params.n_frames - 1 - guard; };
  for (int k = 0; k * params.period < params.n_frames + params.period; ++k) {
    const int dia = k * params.period;
    const int sys = static_cast<int>(std::lround((k + 0.5) * params.period));
    if (interior(dia)) truth.diastole_frames.push_back(dia);
    if (interior(sys)) truth.systole_frames.push_back(sys);
  }
  return truth;
}

PhantomStudy generate_phantom_study(const PhantomParams& params) {
  params.validate();
  const Layout L = make_layout(params);
  PhantomStudy study;
  study.truth = phantom_truth(params);

  const LabelMask axis = render_structure_mask(L, params, MaskSchema::Axis);
  const LabelMask ctr = render_structure_mask(L, params, MaskSchema::Cardiothoracic);
  study.masks.reserve(static_cast<std::size_t>(params.n_frames));
  for (int t = 0; t < params.n_frames; ++t) {
    study.masks.push_back({axis, ctr, render_chamber_mask(L, params, t)});
    if (params.render_images) study.images.push_back(render_image(L, params, t));
  }
  return study;
}

GreyImage render_phantom_frame(const PhantomParams& params, int frame) {
  params.validate();
  return render_image(make_layout(params), params, frame);
}

std::string truth_to_json(const PhantomTruth& truth) {
  nlohmann::ordered_json j;
  j["motif"] = truth.motif;
  j["ctr"] = truth.ctr;
  j["ca_degrees"] = truth.ca_degrees;
  j["period"] = truth.period;
  j["n_frames"] = truth.n_frames;
  auto chambers = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < 4; ++i)
    chambers.push_back({{"chamber", label_name(MaskSchema::Chambers, kChambers[i])},
                        {"base_area", truth.chamber_base_areas[i]},
                        {"fac", truth.fac[i]}});
  j["chambers"] = chambers;
  j["systole_frames"] = truth.systole_frames;
  j["diastole_frames"] = truth.diastole_frames;
  return j.dump(2) + "\n";
}

}  // namespace fetalscreen

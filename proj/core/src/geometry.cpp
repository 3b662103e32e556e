#include "fetalscreen/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

namespace fetalscreen {

namespace {

// Clockwise on screen (y down), starting east.
constexpr std::array<PixelCoord, 8> kDirs = {{{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
constexpr int kWest = 4;

int dir_index(int dx, int dy) {
  for (int i = 0; i < 8; ++i)
    if (kDirs[i].x == dx && kDirs[i].y == dy) return i;
  return -1;
}

bool row_major_less(const PixelCoord& a, const PixelCoord& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }

// Membership bitmap over a bounding box with a one-pixel apron.
class LocalBitmap {
 public:
  explicit LocalBitmap(const Region& region)
      : x0_(region.bbox().min_x - 1),
        y0_(region.bbox().min_y - 1),
        w_(region.bbox().width() + 2),
        h_(region.bbox().height() + 2),
        bits_(static_cast<std::size_t>(w_) * static_cast<std::size_t>(h_), 0) {
    for (const auto& p : region.pixels()) bits_[offset(p.x, p.y)] = 1;
  }

  bool test(int x, int y) const {
    const int lx = x - x0_, ly = y - y0_;
    if (lx < 0 || ly < 0 || lx >= w_ || ly >= h_) return false;
    return bits_[static_cast<std::size_t>(ly) * w_ + lx] != 0;
  }

  int x0() const { return x0_; }
  int y0() const { return y0_; }
  int w() const { return w_; }
  int h() const { return h_; }
  std::size_t offset(int x, int y) const {
    return static_cast<std::size_t>(y - y0_) * static_cast<std::size_t>(w_) + static_cast<std::size_t>(x - x0_);
  }

 private:
  int x0_, y0_, w_, h_;
  std::vector<std::uint8_t> bits_;
};

}  // namespace

double Vec2::norm() const { return std::hypot(x, y); }

Region::Region(std::vector<PixelCoord> pixels, MaskSchema schema, std::uint8_t label)
    : pixels_(std::move(pixels)), schema_(schema), label_(label) {
  if (pixels_.empty()) throw Error(ErrorCode::InvalidArgument, "region must contain at least one pixel");
  if (!std::is_sorted(pixels_.begin(), pixels_.end(), row_major_less))
    std::sort(pixels_.begin(), pixels_.end(), row_major_less);
  bbox_ = {pixels_.front().x, pixels_.front().y, pixels_.front().x, pixels_.front().y};
  for (const auto& p : pixels_) {
    bbox_.min_x = std::min(bbox_.min_x, p.x);
    bbox_.max_x = std::max(bbox_.max_x, p.x);
    bbox_.min_y = std::min(bbox_.min_y, p.y);
    bbox_.max_y = std::max(bbox_.max_y, p.y);
  }
}

std::vector<Region> connected_components(const LabelMask& mask, std::uint8_t label) {
  if (label > schema_max_label(mask.schema()))
    throw Error(ErrorCode::InvalidLabel, "label " + std::to_string(label) + " not valid for schema " +
                                             std::string(schema_name(mask.schema())));
  const int w = mask.width(), h = mask.height();
  const auto labels = mask.labels();
  // Flood-fill component ids first, then gather pixels in one row-major pass.
  std::vector<std::int32_t> comp(labels.size(), 0);
  std::vector<std::size_t> sizes;
  std::vector<PixelCoord> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto idx = static_cast<std::size_t>(y) * w + x;
      if (comp[idx] || labels[idx] != label) continue;
      sizes.push_back(0);
      const auto id = static_cast<std::int32_t>(sizes.size());
      comp[idx] = id;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const auto p = stack.back();
        stack.pop_back();
        ++sizes.back();
        for (const auto& d : kDirs) {
          const int nx = p.x + d.x, ny = p.y + d.y;
          if (!mask.contains(nx, ny)) continue;
          const auto nidx = static_cast<std::size_t>(ny) * w + nx;
          if (comp[nidx] || labels[nidx] != label) continue;
          comp[nidx] = id;
          stack.push_back({nx, ny});
        }
      }
    }
  }
  std::vector<std::vector<PixelCoord>> pixels(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) pixels[i].reserve(sizes[i]);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (const auto id = comp[static_cast<std::size_t>(y) * w + x]) pixels[static_cast<std::size_t>(id - 1)].push_back({x, y});
  std::vector<Region> regions;
  regions.reserve(pixels.size());
  for (auto& px : pixels) regions.emplace_back(std::move(px), mask.schema(), label);
  std::stable_sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) { return a.size() > b.size(); });
  return regions;
}

std::size_t area(const Region& region) { return region.size(); }

std::vector<PixelCoord> trace_outer_boundary(const Region& region) {
  if (region.size() < 2) throw Error(ErrorCode::DegenerateRegion, "boundary of a single pixel is undefined");
  const LocalBitmap member(region);
  const PixelCoord start = region.pixels().front();  // top-most, then left-most

  std::vector<PixelCoord> chain;
  PixelCoord p = start;
  int backtrack = kWest;  // the west neighbour of the first pixel is never a member
  std::optional<PixelCoord> second;
  const std::size_t max_steps = 8 * region.size() + 16;

  for (std::size_t step = 0; step < max_steps; ++step) {
    int found = -1;
    for (int i = 1; i <= 8; ++i) {
      const int d = (backtrack + i) % 8;
      if (member.test(p.x + kDirs[d].x, p.y + kDirs[d].y)) {
        found = d;
        break;
      }
    }
    if (found < 0) throw Error(ErrorCode::DegenerateRegion, "region is not 8-connected");
    const PixelCoord q{p.x + kDirs[found].x, p.y + kDirs[found].y};
    if (second && p == start && q == *second) return chain;
    if (!second) second = q;
    chain.push_back(p);

    const int prev = (found + 7) % 8;
    const PixelCoord c{p.x + kDirs[prev].x, p.y + kDirs[prev].y};
    backtrack = dir_index(c.x - q.x, c.y - q.y);
    p = q;
  }
  throw Error(ErrorCode::DegenerateRegion, "boundary trace did not close");
}

double perimeter(const Region& region) {
  const auto chain = trace_outer_boundary(region);
  double length = 0.0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& a = chain[i];
    const auto& b = chain[(i + 1) % chain.size()];
    length += (a.x != b.x && a.y != b.y) ? std::numbers::sqrt2 : 1.0;
  }
  return length;
}

Point centroid(const Region& region) {
  double sx = 0.0, sy = 0.0;
  for (const auto& p : region.pixels()) {
    sx += p.x;
    sy += p.y;
  }
  const auto n = static_cast<double>(region.size());
  return {sx / n, sy / n};
}

Region fill_holes(const Region& region) {
  const LocalBitmap member(region);
  const int w = member.w(), h = member.h();
  std::vector<std::uint8_t> outside(static_cast<std::size_t>(w) * h, 0);
  std::vector<PixelCoord> queue;
  auto visit = [&](int lx, int ly) {
    if (lx < 0 || ly < 0 || lx >= w || ly >= h) return;
    const auto i = static_cast<std::size_t>(ly) * w + lx;
    if (outside[i] || member.test(lx + member.x0(), ly + member.y0())) return;
    outside[i] = 1;
    queue.push_back({lx, ly});
  };
  visit(0, 0);  // the apron corner is always outside
  while (!queue.empty()) {
    const auto p = queue.back();
    queue.pop_back();
    visit(p.x + 1, p.y);
    visit(p.x - 1, p.y);
    visit(p.x, p.y + 1);
    visit(p.x, p.y - 1);
  }
  std::vector<PixelCoord> filled;
  for (int ly = 0; ly < h; ++ly)
    for (int lx = 0; lx < w; ++lx)
      if (!outside[static_cast<std::size_t>(ly) * w + lx]) filled.push_back({lx + member.x0(), ly + member.y0()});
  return Region(std::move(filled), region.schema(), region.label());
}

SecondMoments central_moments(const Region& region) {
  const auto c = centroid(region);
  SecondMoments m;
  for (const auto& p : region.pixels()) {
    const double dx = p.x - c.x, dy = p.y - c.y;
    m.mu20 += dx * dx;
    m.mu02 += dy * dy;
    m.mu11 += dx * dy;
  }
  const auto n = static_cast<double>(region.size());
  m.mu20 /= n;
  m.mu02 /= n;
  m.mu11 /= n;
  return m;
}

Vec2 principal_axis(const Region& region) {
  const auto m = central_moments(region);
  const double half_trace = 0.5 * (m.mu20 + m.mu02);
  const double spread = std::hypot(0.5 * (m.mu20 - m.mu02), m.mu11);
  const double major = half_trace + spread;
  const double minor = half_trace - spread;
  if (major <= 0.0 || major < kIsotropyThreshold * minor)
    throw Error(ErrorCode::IsotropicRegion, "second-moment eigenvalue ratio below " + std::to_string(kIsotropyThreshold));

  const double theta = 0.5 * std::atan2(2.0 * m.mu11, m.mu20 - m.mu02);
  Vec2 v{std::cos(theta), std::sin(theta)};
  constexpr double eps = 1e-12;
  if (v.y < -eps || (std::abs(v.y) <= eps && v.x < 0.0)) v = -v;
  if (std::abs(v.y) <= eps) v.y = 0.0;
  return v;
}

Ray::Ray(Point origin, Vec2 direction) : origin_(origin), direction_(direction) {
  if (std::abs(direction.norm() - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "ray direction must be a unit vector");
}

Ray Ray::through(Point origin, Point target) {
  const Vec2 d = target - origin;
  const double n = d.norm();
  if (n == 0.0) throw Error(ErrorCode::InvalidArgument, "ray origin and target coincide");
  return Ray(origin, {d.x / n, d.y / n});
}

double angle_between(const Ray& a, const Ray& b) {
  const double c = std::clamp(a.direction().dot(b.direction()), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace fetalscreen

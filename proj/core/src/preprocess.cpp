#include <algorithm>
#include <cmath>
#include <numbers>

#include "fetalscreen/classifier.hpp"
#include "fetalscreen/error.hpp"
#include "fetalscreen/random.hpp"

namespace fetalscreen {

void PreprocessConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (source_width <= 0 || source_height <= 0) bad("source size must be positive");
  if (crop_width <= 0 || crop_height <= 0 || crop_width > source_width || crop_height > source_height)
    bad("crop must fit inside the source");
  if (factor <= 0 || crop_width % factor != 0 || crop_height % factor != 0)
    bad("downsampling factor must divide the crop");
  const int x = crop_x.value_or((source_width - crop_width) / 2);
  const int y = crop_y.value_or((source_height - crop_height) / 2);
  if (x < 0 || y < 0 || x + crop_width > source_width || y + crop_height > source_height)
    bad("crop offset places the crop outside the source");
}

GreyImage preprocess(const GreyImage& image, const PreprocessConfig& config) {
  config.validate();
  if (image.width() != config.source_width || image.height() != config.source_height)
    throw Error(ErrorCode::DimensionMismatch, "expected a " + std::to_string(config.source_width) + "x" +
                                                  std::to_string(config.source_height) + " image, got " +
                                                  std::to_string(image.width()) + "x" + std::to_string(image.height()));
  const int x0 = config.crop_x.value_or((config.source_width - config.crop_width) / 2);
  const int y0 = config.crop_y.value_or((config.source_height - config.crop_height) / 2);
  const int f = config.factor;
  const int ow = config.output_width(), oh = config.output_height();

  std::vector<double> box(static_cast<std::size_t>(ow) * oh, 0.0);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      double sum = 0.0;
      for (int dy = 0; dy < f; ++dy)
        for (int dx = 0; dx < f; ++dx) sum += image.at(x0 + ox * f + dx, y0 + oy * f + dy);
      box[static_cast<std::size_t>(oy) * ow + ox] = sum / (f * f);
    }

  std::vector<float> out(box.size(), 0.0f);
  if (config.normalization == Normalization::MinMax) {
    const auto [lo, hi] = std::minmax_element(box.begin(), box.end());
    const double range = *hi - *lo;
    if (range > 0.0)
      for (std::size_t i = 0; i < box.size(); ++i) out[i] = static_cast<float>((box[i] - *lo) / range);
  } else {
    for (std::size_t i = 0; i < box.size(); ++i) out[i] = static_cast<float>(box[i]);
  }
  return GreyImage(ow, oh, std::move(out));
}

AugmentationConfig AugmentationConfig::identity() {
  AugmentationConfig c;
  c.rotation_range = c.width_shift = c.height_shift = c.shear = c.zoom = 0.0;
  c.horizontal_flip = c.vertical_flip = false;
  return c;
}

void AugmentationConfig::validate() const {
  if (rotation_range < 0 || width_shift < 0 || height_shift < 0 || shear < 0 || zoom < 0 || zoom >= 1.0)
    throw Error(ErrorCode::InvalidArgument, "augmentation ranges must be non-negative (zoom below 1)");
}

AffineDraw draw_augmentation(const AugmentationConfig& config, int width, int height, std::uint64_t draw_seed) {
  config.validate();
  Rng rng(derive_seed(config.seed, {draw_seed}));
  auto sym = [&](double range) { return range > 0.0 ? rng.uniform(-range, range) : 0.0; };
  AffineDraw d;
  d.rotation_deg = sym(config.rotation_range);
  d.shift_x = sym(config.width_shift) * width;
  d.shift_y = sym(config.height_shift) * height;
  d.shear_deg = sym(config.shear);
  d.zoom_x = 1.0 + sym(config.zoom);
  d.zoom_y = 1.0 + sym(config.zoom);
  d.flip_h = config.horizontal_flip && rng.bernoulli(0.5);
  d.flip_v = config.vertical_flip && rng.bernoulli(0.5);
  return d;
}

GreyImage apply_affine(const GreyImage& image, const AffineDraw& d) {
  const int w = image.width(), h = image.height();
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double th = d.rotation_deg * std::numbers::pi / 180.0;
  const double sh = d.shear_deg * std::numbers::pi / 180.0;

  // Forward map M = R * S * Z * F (about the center), then a translation.
  const double fx = d.flip_h ? -1.0 : 1.0, fy = d.flip_v ? -1.0 : 1.0;
  const double z[2][2] = {{d.zoom_x * fx, 0.0}, {0.0, d.zoom_y * fy}};
  const double s[2][2] = {{1.0, -std::sin(sh)}, {0.0, std::cos(sh)}};
  const double r[2][2] = {{std::cos(th), -std::sin(th)}, {std::sin(th), std::cos(th)}};
  auto mul = [](const double a[2][2], const double b[2][2], double out[2][2]) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
  };
  double sz[2][2], m[2][2];
  mul(s, z, sz);
  mul(r, sz, m);
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double inv[2][2] = {{m[1][1] / det, -m[0][1] / det}, {-m[1][0] / det, m[0][0] / det}};

  std::vector<float> out(static_cast<std::size_t>(w) * h, 0.0f);
  constexpr double eps = 1e-9;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double px = x - cx - d.shift_x, py = y - cy - d.shift_y;
      double sx = inv[0][0] * px + inv[0][1] * py + cx;
      double sy = inv[1][0] * px + inv[1][1] * py + cy;
      if (sx < -eps || sy < -eps || sx > w - 1 + eps || sy > h - 1 + eps) continue;
      sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
      sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
      const int x0 = std::min(static_cast<int>(sx), w - 1), y0 = std::min(static_cast<int>(sy), h - 1);
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const double ax = sx - x0, ay = sy - y0;
      const double v = (1 - ax) * (1 - ay) * image.at(x0, y0) + ax * (1 - ay) * image.at(x1, y0) +
                       (1 - ax) * ay * image.at(x0, y1) + ax * ay * image.at(x1, y1);
      out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  return GreyImage(w, h, std::move(out));
}

GreyImage augment(const GreyImage& image, const AugmentationConfig& config, std::uint64_t draw_seed) {
  return apply_affine(image, draw_augmentation(config, image.width(), image.height(), draw_seed));
}

}  // namespace fetalscreen

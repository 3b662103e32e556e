#include "fetalscreen/view_dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "fetalscreen/error.hpp"
#include "fetalscreen/parallel.hpp"
#include "fetalscreen/perturb.hpp"
#include "fetalscreen/random.hpp"
#include "fetalscreen/shapes.hpp"
#include "json.hpp"

namespace fetalscreen {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr double kViewBodyScale = 0.6;  // A4C phantom scale matching the view motifs
constexpr double kSpeckleSigma = 0.35;

constexpr float kBackground = 0.08f;
constexpr float kBody = 0.32f;
constexpr float kBone = 0.95f;
constexpr float kLumen = 0.10f;
constexpr float kMyocardium = 0.60f;
constexpr float kBlood = 0.15f;
constexpr float kLiver = 0.45f;
constexpr float kFluid = 0.05f;
constexpr float kCartilage = 0.85f;

enum Anatomy { kPA, kAo, kSVC, kHeart, kStomach, kLiverSize };

struct Painted {
  Shape shape;
  float grey;
};

double deg(double d) { return d * std::numbers::pi / 180.0; }

Bar bar_between(Point a, Point b, double half_width) {
  const Vec2 d = b - a;
  const double len = d.norm();
  return {{(a.x + b.x) / 2, (a.y + b.y) / 2}, {d.x / len, d.y / len}, len / 2, half_width};
}

// Body-frame (pixels, anterior = -y) drawing list for a non-A4C view.
std::vector<Painted> motif(ViewLabel view, LesionClass lesion, double severity, const std::array<double, 6>& a) {
  const double s = severity;
  const bool tof = lesion == LesionClass::Tof;
  const bool hlhs = lesion == LesionClass::Hlhs;
  std::vector<Painted> out;
  auto add = [&](Shape shape, float grey) { out.push_back({shape, grey}); };

  if (view == ViewLabel::Abdo) {
    add(Ellipse{{0, 0}, 92, 84, 0}, kBody);
    add(Ellipse{{28, -4}, 42 * a[kLiverSize], 34 * a[kLiverSize], deg(15)}, kLiver);
    add(Ellipse{{-34, -10}, 19 * a[kStomach], 12 * a[kStomach], deg(-20)}, kFluid);
    add(bar_between({8, -4}, {30, -40}, 3.0), kLumen);
    add(disk({-8, 44}, 5), kLumen);
    add(disk({12, 38}, 6), kLumen);
    add(disk({0, 64}, 8), kBone);
    return out;
  }

  add(Ellipse{{0, 0}, 100, 78, 0}, kBody);
  add(disk({0, 62}, 8), kBone);

  if (view == ViewLabel::ThreeVT) {
    double pa = 11.0 * a[kPA], ao = 8.5 * a[kAo], duct = 4.5;
    if (tof) pa *= 1 - 0.55 * s, ao *= 1 + 0.45 * s, duct *= 1 - 0.6 * s;
    if (hlhs) ao *= 1 - 0.65 * s, pa *= 1 + 0.25 * s, duct *= 1 + 0.3 * s;
    const Point p{-30, -8}, q{-2, -16};
    add(bar_between(p, q, std::max(duct, 0.8)), kLumen);
    add(disk(p, pa), kLumen);
    add(disk(q, ao), kLumen);
    add(disk({22, -22}, 5.5 * a[kSVC]), kLumen);
    add(disk({14, -2}, 7), kCartilage);
    add(disk({14, -2}, 3.5), kLumen);
  } else if (view == ViewLabel::ThreeVV) {
    double pa = 11.5 * a[kPA], ao = 8.5 * a[kAo], branch = 4.0;
    if (tof) pa *= 1 - 0.55 * s, ao *= 1 + 0.45 * s, branch *= 1 - 0.5 * s;
    if (hlhs) ao *= 1 - 0.65 * s, pa *= 1 + 0.25 * s;
    const Point p{-32, -18};
    add(bar_between(p, {-45, 10}, std::max(branch, 0.8)), kLumen);
    add(disk(p, pa), kLumen);
    add(disk({-3, -20}, ao), kLumen);
    add(disk({24, -23}, 6 * a[kSVC]), kLumen);
    add(disk({-14, 46}, 6), kLumen);
  } else if (view == ViewLabel::A5C) {
    const Point hc{-8, -12};
    const double phi = deg(35);
    const double k = a[kHeart];
    auto local = [&](double x, double y) {
      const Vec2 r = rotate({x * k, y * k}, phi);
      return Point{hc.x + r.x, hc.y + r.y};
    };
    double lv = 9.5, outflow = 4.5, override_shift = 0.0;
    if (tof) outflow *= 1 + 0.7 * s, override_shift = -7 * s;
    if (hlhs) lv *= 1 - 0.7 * s, outflow *= 1 - 0.6 * s;
    add(Ellipse{hc, 46 * k, 36 * k, phi}, kMyocardium);
    const Point lvc = local(14, 8);
    add(disk(lvc, std::max(lv, 1.0) * k), kBlood);
    add(disk(local(-14, 8), 9 * k), kBlood);
    add(disk(local(14, -12), 7.5 * k), kBlood);
    add(disk(local(-14, -12), 7.5 * k), kBlood);
    const Point root = local(14 + override_shift, 8);
    const Vec2 dir = rotate({0.3 / std::hypot(0.3, 1.0), -1.0 / std::hypot(0.3, 1.0)}, phi);
    add(bar_between(root, {root.x + 34 * k * dir.x, root.y + 34 * k * dir.y}, std::max(outflow, 0.8) * k), kLumen);
  }
  return out;
}

Shape to_image(const Shape& shape, Point origin, double rot, double scale) {
  auto place = [&](Point p) {
    const Vec2 r = rotate({p.x * scale, p.y * scale}, rot);
    return Point{origin.x + r.x, origin.y + r.y};
  };
  if (const auto* e = std::get_if<Ellipse>(&shape))
    return Ellipse{place(e->center), e->semi_x * scale, e->semi_y * scale, e->rotation_rad + rot};
  const auto& b = std::get<Bar>(shape);
  return Bar{place(b.center), rotate(b.axis, rot), b.half_length * scale, b.half_width * scale};
}

void add_speckle(GreyImage& img, double noise_level, std::uint64_t seed) {
  if (noise_level <= 0.0) return;
  Rng rng(seed);
  const double sigma = kSpeckleSigma * noise_level;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) img.set(x, y, static_cast<float>(img.at(x, y) + sigma * rng.normal()));
}

std::uint64_t view_stream(ViewLabel v) { return 0x7100 + view_index(v); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

std::string mask_suffix(MaskSchema s) {
  switch (s) {
    case MaskSchema::Axis: return "axis";
    case MaskSchema::Cardiothoracic: return "ctr";
    case MaskSchema::Chambers: return "chambers";
  }
  return "?";
}

const LabelMask& mask_of(const FrameMasks& m, MaskSchema s) {
  switch (s) {
    case MaskSchema::Axis: return *m.axis;
    case MaskSchema::Cardiothoracic: return *m.ctr;
    case MaskSchema::Chambers: return *m.chambers;
  }
  return *m.axis;
}

}  // namespace

void ViewMotifParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (frames_per_view < 1 || cine_frames < 1) bad("every view needs at least one frame");
  if (cine_period < 6) bad("cine period must be at least 6 frames");
  if (!(noise_level >= 0.0 && noise_level <= 1.0)) bad("noise_level must lie in [0, 1]");
  if (jitter_shift_px < 0 || jitter_rotation_deg < 0 || jitter_scale < 0 || jitter_scale >= 0.2 || frame_shift_px < 0 ||
      frame_rotation_deg < 0 || anatomy_variation < 0 || anatomy_variation >= 0.3)
    bad("jitter ranges out of bounds");
  if (!(lesion_severity >= 0.0 && lesion_severity <= 1.0)) bad("lesion_severity must lie in [0, 1]");
}

void LesionMix::validate() const {
  if (normal < 0 || tof < 0 || hlhs < 0 || std::abs(normal + tof + hlhs - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "lesion mix must be non-negative and sum to 1");
}

std::array<int, 3> apportion_lesions(int n, const LesionMix& mix) {
  mix.validate();
  const std::array<double, 3> share = {mix.normal * n, mix.tof * n, mix.hlhs * n};
  std::array<int, 3> count{};
  int assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    count[i] = static_cast<int>(std::floor(share[i]));
    assigned += count[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](auto x, auto y) { return share[x] - count[x] > share[y] - count[y]; });
  for (int k = 0; assigned < n; ++k, ++assigned) ++count[order[static_cast<std::size_t>(k) % 3]];
  return count;
}

std::string study_id_for(int index, int n_studies) {
  const std::size_t digits = std::max<std::size_t>(4, std::to_string(n_studies).size());
  std::string number = std::to_string(index + 1);
  if (number.size() < digits) number.insert(0, digits - number.size(), '0');
  return "S" + number;
}

std::vector<ViewStudyPlan> plan_view_dataset(int n_studies, const ViewMotifParams& motifs, const LesionMix& mix,
                                             std::uint64_t seed) {
  if (n_studies < 2) throw Error(ErrorCode::InvalidArgument, "at least two studies are required");
  motifs.validate();
  const auto counts = apportion_lesions(n_studies, mix);
  std::vector<LesionClass> lesions;
  for (std::size_t c = 0; c < 3; ++c) lesions.insert(lesions.end(), static_cast<std::size_t>(counts[c]), kAllLesions[c]);
  Rng order(derive_seed(seed, {0x4C45}));
  order.shuffle(std::span<LesionClass>(lesions));

  std::vector<ViewStudyPlan> plans;
  for (int i = 0; i < n_studies; ++i) {
    ViewStudyPlan p;
    p.study_id = study_id_for(i, n_studies);
    p.lesion = lesions[static_cast<std::size_t>(i)];
    p.seed = derive_seed(seed, {static_cast<std::uint64_t>(i)});
    Rng rng(p.seed);
    p.jitter.dx = rng.uniform(-1, 1) * motifs.jitter_shift_px;
    p.jitter.dy = rng.uniform(-1, 1) * motifs.jitter_shift_px;
    p.jitter.rotation_deg = rng.uniform(-1, 1) * motifs.jitter_rotation_deg;
    p.jitter.scale = 1.0 + rng.uniform(-1, 1) * motifs.jitter_scale;
    for (auto& m : p.anatomy) m = 1.0 + rng.uniform(-1, 1) * motifs.anatomy_variation;

    auto& a = p.a4c;
    a.scale = kViewBodyScale * p.jitter.scale;
    a.body_rotation_deg = p.jitter.rotation_deg;
    a.offset_x = p.jitter.dx;
    a.offset_y = p.jitter.dy;
    a.target_ctr = rng.uniform(0.45, 0.55);
    a.target_ca = rng.uniform(35.0, 55.0);
    a.chamber_base_areas = {rng.uniform(220, 300), rng.uniform(200, 280), rng.uniform(150, 220), rng.uniform(150, 220)};
    a.fac_targets = {rng.uniform(0.3, 0.45), rng.uniform(0.3, 0.45), rng.uniform(0.2, 0.35), rng.uniform(0.2, 0.35)};
    const double s = motifs.lesion_severity;
    if (p.lesion == LesionClass::Tof) a.target_ca += 20.0 * s;
    if (p.lesion == LesionClass::Hlhs) {
      a.chamber_base_areas[0] *= 1.0 - 0.8 * s;
      a.chamber_base_areas[1] *= 1.0 + 0.3 * s;
    }
    a.period = motifs.cine_period;
    a.n_frames = motifs.cine_frames;
    a.noise_level = motifs.noise_level;
    a.seed = derive_seed(p.seed, {view_stream(ViewLabel::A4C)});
    plans.push_back(std::move(p));
  }
  return plans;
}

GreyImage render_view_frame(const ViewStudyPlan& plan, const ViewMotifParams& motifs, ViewLabel view, int frame) {
  if (frame < 0 || frame >= motifs.frames_for(view)) throw Error(ErrorCode::InvalidArgument, "frame index out of range");
  if (view == ViewLabel::A4C) return render_phantom_frame(plan.a4c, frame);

  const std::uint64_t frame_seed = derive_seed(plan.seed, {view_stream(view), static_cast<std::uint64_t>(frame)});
  Rng rng(frame_seed);
  const double dx = plan.jitter.dx + rng.uniform(-1, 1) * motifs.frame_shift_px;
  const double dy = plan.jitter.dy + rng.uniform(-1, 1) * motifs.frame_shift_px;
  const double rot = deg(plan.jitter.rotation_deg + rng.uniform(-1, 1) * motifs.frame_rotation_deg);
  const double scale = plan.jitter.scale;  // motif coordinates are already at view scale

  const int w = plan.a4c.width, h = plan.a4c.height;
  const Point origin{(w - 1) / 2.0 + dx, (h - 1) / 2.0 + dy};
  GreyImage img(w, h, kBackground);
  for (const auto& p : motif(view, plan.lesion, motifs.lesion_severity, plan.anatomy))
    paint(img, to_image(p.shape, origin, rot, scale), p.grey);
  add_speckle(img, motifs.noise_level, derive_seed(frame_seed, {0x5EC}));
  return img;
}

StudyManifest generate_view_dataset(int n_studies, const ViewMotifParams& motifs, const LesionMix& mix,
                                    std::uint64_t seed, const fs::path& out_dir, int threads) {
  const auto plans = plan_view_dataset(n_studies, motifs, mix, seed);
  ensure_dir(out_dir);
  StudyManifest manifest;
  manifest.studies.resize(plans.size());

  parallel_for(static_cast<int>(plans.size()), threads, [&](int i) {
    const auto& plan = plans[static_cast<std::size_t>(i)];
    const fs::path dir = out_dir / plan.study_id;
    ensure_dir(dir);
    StudyRecord rec{plan.study_id, plan.lesion, {}};

    std::optional<PhantomStudy> a4c;
    if (motifs.write_masks) {
      auto params = plan.a4c;
      params.render_images = false;
      a4c = generate_phantom_study(params);
    }
    for (auto view : kAllViews) {
      for (int k = 0; k < motifs.frames_for(view); ++k) {
        FrameRecord f;
        f.frame_id = std::string(view_name(view)) + "_" + std::to_string(k);
        f.view = view;
        f.image_path = plan.study_id + "/" + f.frame_id + ".fsimg";
        save_image(render_view_frame(plan, motifs, view, k), out_dir / f.image_path);
        if (a4c && view == ViewLabel::A4C) {
          for (auto schema : kAllSchemas) {
            const std::string rel = plan.study_id + "/" + f.frame_id + "_" + mask_suffix(schema) + ".fsmask";
            save_mask(mask_of(a4c->masks[static_cast<std::size_t>(k)], schema), out_dir / rel);
            f.mask_paths[static_cast<std::size_t>(schema)] = rel;
          }
        }
        rec.frames.push_back(std::move(f));
      }
    }

    ordered_json truth;
    truth["study_id"] = plan.study_id;
    truth["lesion"] = lesion_name(plan.lesion);
    truth["jitter"] = {{"dx", plan.jitter.dx},
                       {"dy", plan.jitter.dy},
                       {"rotation_deg", plan.jitter.rotation_deg},
                       {"scale", plan.jitter.scale}};
    truth["a4c"] = ordered_json::parse(truth_to_json(phantom_truth(plan.a4c)));
    write_text_file(dir / "truth.json", truth.dump(2) + "\n");
    manifest.studies[static_cast<std::size_t>(i)] = std::move(rec);
  });

  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

PhantomParams draw_phantom_params(std::uint64_t seed, const PhantomDrawRanges& r) {
  Rng rng(derive_seed(seed, {0xB10}));
  PhantomParams p;
  p.target_ctr = rng.uniform(r.ctr_lo, r.ctr_hi);
  p.target_ca = rng.uniform(r.ca_lo, r.ca_hi);
  for (auto& f : p.fac_targets) f = rng.uniform(r.fac_lo, r.fac_hi);
  for (auto& a : p.chamber_base_areas) a = rng.uniform(r.area_lo, r.area_hi);
  const int lo = (r.period_lo + 1) / 2, hi = r.period_hi / 2;
  p.period = 2 * (lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, hi - lo + 1)))));
  p.n_frames = r.cycles * p.period;
  p.noise_level = r.noise_level;
  p.seed = seed;
  return p;
}

StudyManifest generate_biometric_corpus(int n_studies, std::uint64_t seed, const fs::path& out_dir,
                                        const BiometricCorpusOptions& options) {
  if (n_studies < 1) throw Error(ErrorCode::InvalidArgument, "at least one study is required");
  ensure_dir(out_dir);
  StudyManifest manifest, predicted;
  manifest.studies.resize(static_cast<std::size_t>(n_studies));
  predicted.studies.resize(static_cast<std::size_t>(n_studies));

  parallel_for(n_studies, options.threads, [&](int i) {
    auto params = draw_phantom_params(derive_seed(seed, {static_cast<std::uint64_t>(i)}), options.ranges);
    if (options.n_frames) params.n_frames = *options.n_frames;
    params.render_images = options.write_images;
    const auto study = generate_phantom_study(params);
    const std::string id = study_id_for(i, n_studies);
    ensure_dir(out_dir / id);

    StudyRecord rec{id, LesionClass::Normal, {}};
    StudyRecord pred{id, LesionClass::Normal, {}};
    for (int t = 0; t < params.n_frames; ++t) {
      FrameRecord f;
      char name[32];
      std::snprintf(name, sizeof name, "a4c_%03d", t);
      f.frame_id = name;
      f.view = ViewLabel::A4C;
      f.image_path = id + "/" + f.frame_id + ".fsimg";
      if (options.write_images) save_image(study.images[static_cast<std::size_t>(t)], out_dir / f.image_path);
      FrameRecord pf = f;
      for (auto schema : kAllSchemas) {
        const auto& truth_mask = mask_of(study.masks[static_cast<std::size_t>(t)], schema);
        const std::string rel = id + "/" + f.frame_id + "_" + mask_suffix(schema) + ".fsmask";
        save_mask(truth_mask, out_dir / rel);
        f.mask_paths[static_cast<std::size_t>(schema)] = rel;
        if (options.predicted_jaccard) {
          const auto noisy = perturb_mask(truth_mask, *options.predicted_jaccard,
                                          derive_seed(params.seed, {0x9E7, static_cast<std::uint64_t>(t),
                                                                    static_cast<std::uint64_t>(schema)}));
          const std::string prel = id + "/" + f.frame_id + "_" + mask_suffix(schema) + ".pred.fsmask";
          save_mask(noisy, out_dir / prel);
          pf.mask_paths[static_cast<std::size_t>(schema)] = prel;
        }
      }
      rec.frames.push_back(std::move(f));
      pred.frames.push_back(std::move(pf));
    }
    write_text_file(out_dir / id / "truth.json", truth_to_json(study.truth));
    manifest.studies[static_cast<std::size_t>(i)] = std::move(rec);
    predicted.studies[static_cast<std::size_t>(i)] = std::move(pred);
  });

  save_manifest(manifest, out_dir / "manifest.json");
  if (options.predicted_jaccard) save_manifest(predicted, out_dir / "predicted_manifest.json");
  return manifest;
}

}  // namespace fetalscreen

#include "fetalscreen/biometrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <variant>

#include "json.hpp"

namespace fetalscreen {

namespace {

struct Anatomy {
  Region heart;
  Region thorax;
  Region filled_thorax;
};

// Shared by validate_anatomy and the metrics so the failure reason is identical.
std::variant<Anatomy, std::string> inspect_anatomy(const LabelMask& mask, double containment) {
  if (mask.schema() != MaskSchema::Axis && mask.schema() != MaskSchema::Cardiothoracic)
    throw Error(ErrorCode::InvalidArgument, "anatomy validation needs an AXIS or CTR mask");
  static_assert(axis_label::kHeart == ctr_label::kHeart && axis_label::kThorax == ctr_label::kThorax);

  auto hearts = connected_components(mask, axis_label::kHeart);
  auto thoraces = connected_components(mask, axis_label::kThorax);
  if (hearts.empty() || thoraces.empty()) return std::string("missing structure");
  if (hearts.size() != 1) return std::string("multiple heart components");
  if (thoraces.size() != 1) return std::string("multiple thorax components");

  Region filled = fill_holes(thoraces.front());
  std::vector<std::uint8_t> inside(static_cast<std::size_t>(mask.width()) * mask.height(), 0);
  for (const auto& p : filled.pixels()) inside[static_cast<std::size_t>(p.y) * mask.width() + p.x] = 1;
  std::size_t contained = 0;
  for (const auto& p : hearts.front().pixels())
    contained += inside[static_cast<std::size_t>(p.y) * mask.width() + p.x];
  if (static_cast<double>(contained) < containment * static_cast<double>(hearts.front().size()))
    return std::string("heart outside thorax");
  return Anatomy{std::move(hearts.front()), std::move(thoraces.front()), std::move(filled)};
}

Anatomy require_anatomy(const LabelMask& mask) {
  auto result = inspect_anatomy(mask, kHeartContainment);
  if (auto* reason = std::get_if<std::string>(&result)) throw Error(ErrorCode::AnatomyInvalid, *reason);
  return std::get<Anatomy>(std::move(result));
}

double ctr_of(const Anatomy& anatomy) { return perimeter(anatomy.heart) / perimeter(anatomy.thorax); }

double axis_of(const LabelMask& mask, const Anatomy& anatomy) {
  const auto spines = connected_components(mask, axis_label::kSpine);
  const auto septa = connected_components(mask, axis_label::kSeptum);
  if (spines.empty()) throw Error(ErrorCode::AnatomyInvalid, "missing spine");
  if (septa.empty()) throw Error(ErrorCode::AnatomyInvalid, "missing septum");

  const Point spine_c = centroid(spines.front());
  const Point thorax_c = centroid(anatomy.filled_thorax);
  const Ray midline = Ray::through(spine_c, thorax_c);

  const Region& septum = septa.front();
  Vec2 axis = principal_axis(septum);
  const Point septum_c = centroid(septum);
  const Point heart_c = centroid(fill_holes(anatomy.heart));
  if (axis.dot(heart_c - septum_c) < 0.0) axis = -axis;
  return angle_between(midline, Ray(septum_c, axis));
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

AnatomyCheck validate_anatomy(const LabelMask& mask, double containment) {
  auto result = inspect_anatomy(mask, containment);
  if (auto* reason = std::get_if<std::string>(&result)) return {false, *reason};
  return {true, {}};
}

double cardiothoracic_ratio(const LabelMask& mask) { return ctr_of(require_anatomy(mask)); }

double cardiac_axis(const LabelMask& mask) {
  if (mask.schema() != MaskSchema::Axis) throw Error(ErrorCode::InvalidArgument, "cardiac axis needs an AXIS mask");
  return axis_of(mask, require_anatomy(mask));
}

std::vector<double> smooth_series(std::span<const double> values, int window) {
  if (window < 1 || window % 2 == 0) throw Error(ErrorCode::InvalidArgument, "smoothing window must be odd and positive");
  const int n = static_cast<int>(values.size());
  const int half = window / 2;
  std::vector<double> out(values.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (int k = lo; k <= hi; ++k) sum += values[k];
    out[i] = sum / (hi - lo + 1);
  }
  return out;
}

double fractional_area_change(const AreaSeries& series) {
  if (series.areas.size() < 2) throw Error(ErrorCode::EmptySeries, "series too short");
  for (double a : series.areas)
    if (!(a >= 0.0)) throw Error(ErrorCode::InvalidArgument, "areas must be non-negative");
  const auto [lo, hi] = std::minmax_element(series.areas.begin(), series.areas.end());
  if (*hi <= 0.0) throw Error(ErrorCode::ZeroArea, "chamber area is zero in every frame");
  return (*hi - *lo) / *hi;
}

CardiacCycle detect_cardiac_cycle(const AreaSeries& series, const CycleOptions& options) {
  const int n = static_cast<int>(series.areas.size());
  if (n < kMinCycleFrames)
    throw Error(ErrorCode::SeriesTooShort, "need at least " + std::to_string(kMinCycleFrames) + " frames, got " +
                                               std::to_string(n));
  const auto s = smooth_series(series.areas, options.smoothing_window);
  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  const double range = *mx - *mn;
  if (range <= 0.0) throw Error(ErrorCode::NoCycle, "series is constant");
  const double delta = options.hysteresis * range;

  // Zig-zag turning points: a candidate extremum is confirmed once the series
  // retreats from it by at least delta, which keeps minima and maxima alternating.
  CardiacCycle cycle;
  auto confirm = [&](int index, bool is_max) {
    if (index == 0 || index == n - 1) return;
    (is_max ? cycle.diastole_frames : cycle.systole_frames).push_back(index);
  };
  int hi = 0, lo = 0, trend = 0;
  for (int i = 1; i < n; ++i) {
    if (trend == 0) {
      if (s[i] > s[hi]) hi = i;
      if (s[i] < s[lo]) lo = i;
      if (s[hi] - s[i] >= delta && hi < i) {
        confirm(hi, true);
        trend = -1;
        lo = i;
      } else if (s[i] - s[lo] >= delta && lo < i) {
        confirm(lo, false);
        trend = 1;
        hi = i;
      }
    } else if (trend < 0) {
      if (s[i] < s[lo]) {
        lo = i;
      } else if (s[i] - s[lo] >= delta) {
        confirm(lo, false);
        trend = 1;
        hi = i;
      }
    } else {
      if (s[i] > s[hi]) {
        hi = i;
      } else if (s[hi] - s[i] >= delta) {
        confirm(hi, true);
        trend = -1;
        lo = i;
      }
    }
  }
  if (cycle.systole_frames.empty() || cycle.diastole_frames.empty())
    throw Error(ErrorCode::NoCycle, "fewer than one minimum and one maximum");
  return cycle;
}

BiometricReport measure_study(std::span<const FrameMasks> frames, const MeasureConfig& config) {
  BiometricReport report;
  report.frames_total = static_cast<int>(frames.size());

  std::vector<double> ctrs, cas;
  std::array<AreaSeries, 4> chamber_series;
  for (std::size_t c = 0; c < kChambers.size(); ++c) chamber_series[c].chamber = kChambers[c];

  struct FrameResult {
    std::string failure;
    Measured<double> ctr, ca;
  };
  std::optional<FrameResult> last;

  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    FrameMeasurement m;
    m.frame = static_cast<int>(i);

    if (f.chambers) {
      if (f.chambers->schema() != MaskSchema::Chambers)
        throw Error(ErrorCode::SchemaMismatch, "chamber slot holds a " + std::string(schema_name(f.chambers->schema())) + " mask");
      for (std::size_t c = 0; c < kChambers.size(); ++c)
        chamber_series[c].areas.push_back(static_cast<double>(f.chambers->count(kChambers[c])));
    }

    if (!f.axis && !f.ctr) {
      m.ctr = Measured<double>::invalid("no anatomy mask");
      m.ca_degrees = Measured<double>::invalid("no anatomy mask");
      report.frames.push_back(std::move(m));
      continue;
    }

    // Static stretches of a series repeat the same masks; reuse the last answer.
    const bool repeat = i > 0 && f.axis == frames[i - 1].axis && f.ctr == frames[i - 1].ctr && last.has_value();
    if (!repeat) {
      last = FrameResult{};
      std::optional<Anatomy> axis_anatomy, ctr_anatomy;
      auto inspect = [&](const std::optional<LabelMask>& mask, std::optional<Anatomy>& out) {
        if (!mask || !last->failure.empty()) return;
        auto inspected = inspect_anatomy(*mask, config.containment);
        if (auto* reason = std::get_if<std::string>(&inspected))
          last->failure = *reason;
        else
          out = std::get<Anatomy>(std::move(inspected));
      };
      inspect(f.axis, axis_anatomy);
      inspect(f.ctr, ctr_anatomy);
      if (last->failure.empty()) {
        try {
          last->ctr = Measured<double>::ok(ctr_of(ctr_anatomy ? *ctr_anatomy : *axis_anatomy));
        } catch (const Error& e) {
          last->ctr = Measured<double>::invalid(e.detail());
        }
        if (f.axis) {
          try {
            last->ca = Measured<double>::ok(axis_of(*f.axis, *axis_anatomy));
          } catch (const Error& e) {
            last->ca = Measured<double>::invalid(std::string(error_code_name(e.code())) + ": " + e.detail());
          }
        } else {
          last->ca = Measured<double>::invalid("no AXIS mask");
        }
      }
    }
    if (!last->failure.empty()) {
      m.ctr = Measured<double>::invalid(last->failure);
      m.ca_degrees = Measured<double>::invalid(last->failure);
      report.exclusions.push_back({m.frame, last->failure});
      report.frames.push_back(std::move(m));
      continue;
    }
    m.anatomy_valid = true;
    ++report.frames_used;
    m.ctr = last->ctr;
    m.ca_degrees = last->ca;
    if (m.ctr.value) ctrs.push_back(*m.ctr.value);
    if (m.ca_degrees.value) cas.push_back(*m.ca_degrees.value);
    report.frames.push_back(std::move(m));
  }

  const bool any_anatomy =
      std::any_of(frames.begin(), frames.end(), [](const FrameMasks& f) { return f.axis || f.ctr; });
  if (any_anatomy && report.frames_used == 0)
    throw Error(ErrorCode::NoValidFrames, "no frame passed anatomy validation");

  report.ctr = ctrs.empty() ? Measured<double>::invalid("no frame yielded a CTR") : Measured<double>::ok(mean(ctrs));
  report.ca_degrees = cas.empty() ? Measured<double>::invalid("no frame yielded a cardiac axis") : Measured<double>::ok(mean(cas));

  const bool have_chambers = !chamber_series[0].areas.empty();
  for (std::size_t c = 0; c < kChambers.size(); ++c) {
    if (!have_chambers) {
      report.fac[c] = Measured<double>::invalid("no chamber masks");
      continue;
    }
    try {
      report.fac[c] = Measured<double>::ok(fractional_area_change(chamber_series[c]));
    } catch (const Error& e) {
      report.fac[c] = Measured<double>::invalid(e.detail());
    }
  }

  if (!have_chambers) {
    report.cycle = Measured<CardiacCycle>::invalid("no chamber masks");
  } else {
    AreaSeries ventricles;
    ventricles.chamber = chamber_label::kLV;
    ventricles.areas.resize(chamber_series[0].areas.size());
    for (std::size_t t = 0; t < ventricles.areas.size(); ++t)
      ventricles.areas[t] = chamber_series[0].areas[t] + chamber_series[1].areas[t];
    try {
      report.cycle = Measured<CardiacCycle>::ok(detect_cardiac_cycle(ventricles, config.cycle));
    } catch (const Error& e) {
      report.cycle = Measured<CardiacCycle>::invalid(std::string(error_code_name(e.code())) + ": " + e.detail());
    }
    report.area_series.assign(chamber_series.begin(), chamber_series.end());
  }
  return report;
}

namespace {

template <typename T>
nlohmann::ordered_json measured_json(const Measured<T>& m) {
  if (m.value) return *m.value;
  return nullptr;
}

}  // namespace

std::string report_to_json(const BiometricReport& report) {
  nlohmann::ordered_json j;
  j["study_id"] = report.study_id;
  j["ctr"] = measured_json(report.ctr);
  j["ca_degrees"] = measured_json(report.ca_degrees);
  nlohmann::ordered_json fac;
  for (std::size_t c = 0; c < kChambers.size(); ++c)
    fac[std::string(label_name(MaskSchema::Chambers, kChambers[c]))] = measured_json(report.fac[c]);
  j["fac"] = fac;
  if (report.cycle.value) {
    j["systole_frames"] = report.cycle.value->systole_frames;
    j["diastole_frames"] = report.cycle.value->diastole_frames;
  } else {
    j["systole_frames"] = nlohmann::ordered_json::array();
    j["diastole_frames"] = nlohmann::ordered_json::array();
  }

  nlohmann::ordered_json validity;
  auto entry = [](bool valid, const std::string& reason) {
    nlohmann::ordered_json v;
    v["valid"] = valid;
    if (!valid) v["reason"] = reason;
    return v;
  };
  validity["ctr"] = entry(report.ctr.valid(), report.ctr.reason);
  validity["ca"] = entry(report.ca_degrees.valid(), report.ca_degrees.reason);
  for (std::size_t c = 0; c < kChambers.size(); ++c)
    validity["fac_" + std::string(label_name(MaskSchema::Chambers, kChambers[c]))] =
        entry(report.fac[c].valid(), report.fac[c].reason);
  validity["cycle"] = entry(report.cycle.valid(), report.cycle.reason);
  j["validity"] = validity;

  j["frames_total"] = report.frames_total;
  j["frames_used"] = report.frames_used;
  auto frames = nlohmann::ordered_json::array();
  for (const auto& f : report.frames) {
    nlohmann::ordered_json fj;
    fj["frame"] = f.frame;
    fj["anatomy_valid"] = f.anatomy_valid;
    fj["ctr"] = measured_json(f.ctr);
    if (!f.ctr.valid()) fj["ctr_reason"] = f.ctr.reason;
    fj["ca_degrees"] = measured_json(f.ca_degrees);
    if (!f.ca_degrees.valid()) fj["ca_reason"] = f.ca_degrees.reason;
    frames.push_back(std::move(fj));
  }
  j["frames"] = std::move(frames);
  auto exclusions = nlohmann::ordered_json::array();
  for (const auto& e : report.exclusions) exclusions.push_back({{"frame", e.frame}, {"reason", e.reason}});
  j["exclusions"] = std::move(exclusions);
  return j.dump(2) + "\n";
}

std::string area_series_csv(const AreaSeries& series) {
  std::ostringstream out;
  out << "frame,area\n";
  for (std::size_t t = 0; t < series.areas.size(); ++t) out << t << ',' << series.areas[t] << '\n';
  return out.str();
}

}  // namespace fetalscreen

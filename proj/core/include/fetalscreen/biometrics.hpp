#pragma once

// Cardiothoracic ratio, cardiac axis, chamber fractional area change and
// cardiac-cycle detection from label masks.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fetalscreen/geometry.hpp"
#include "fetalscreen/mask_model.hpp"

namespace fetalscreen {

/// A value that is either present or absent with a reason.
template <typename T>
struct Measured {
  std::optional<T> value;
  std::string reason;

  bool valid() const { return value.has_value(); }
  static Measured ok(T v) { return {std::move(v), {}}; }
  static Measured invalid(std::string why) { return {std::nullopt, std::move(why)}; }
};

struct AnatomyCheck {
  bool pass = false;
  std::string reason;  // empty when pass
  explicit operator bool() const { return pass; }
};

inline constexpr double kHeartContainment = 0.95;

/// Passes iff the mask has exactly one heart and one thorax component and at
/// least `containment` of the heart lies inside the filled thorax outline.
/// Schema must be AXIS or CTR.
AnatomyCheck validate_anatomy(const LabelMask& mask, double containment = kHeartContainment);

/// Heart perimeter / thorax perimeter (largest components, outer boundaries).
/// Throws ANATOMY_INVALID when validate_anatomy fails.
double cardiothoracic_ratio(const LabelMask& mask);

/// Angle in degrees between the anteroposterior midline (spine centroid
/// towards the filled-thorax centroid) and the septum's principal axis, the
/// latter oriented from the septum centroid towards the filled-heart centroid.
/// AXIS schema only.
double cardiac_axis(const LabelMask& mask);

/// Per-frame pixel areas of one chamber.
struct AreaSeries {
  std::uint8_t chamber = chamber_label::kLV;
  std::vector<double> areas;
  std::optional<double> frame_rate;
};

/// Centered moving average; the window shrinks at the ends.
std::vector<double> smooth_series(std::span<const double> values, int window = 3);

/// (max - min) / max over the recorded areas. Throws EMPTY_SERIES when fewer
/// than two frames, ZERO_AREA when the chamber never appears.
double fractional_area_change(const AreaSeries& series);

struct CycleOptions {
  int smoothing_window = 3;
  /// A turning point must be followed by a retreat of this fraction of the
  /// smoothed series' range before it counts.
  double hysteresis = 0.25;
};

struct CardiacCycle {
  std::vector<int> systole_frames;   // area minima
  std::vector<int> diastole_frames;  // area maxima
};

/// Alternating minima/maxima of the smoothed series, endpoints excluded.
/// Throws SERIES_TOO_SHORT (< 6 frames) or NO_CYCLE.
CardiacCycle detect_cardiac_cycle(const AreaSeries& series, const CycleOptions& options = {});

inline constexpr int kMinCycleFrames = 6;

/// Masks available for one frame; any subset may be present.
struct FrameMasks {
  std::optional<LabelMask> axis;
  std::optional<LabelMask> ctr;
  std::optional<LabelMask> chambers;
};

struct MeasureConfig {
  double containment = kHeartContainment;
  CycleOptions cycle;
};

struct FrameMeasurement {
  int frame = 0;
  bool anatomy_valid = false;
  Measured<double> ctr;
  Measured<double> ca_degrees;
};

struct Exclusion {
  int frame = 0;
  std::string reason;
};

/// Chamber order used in reports.
inline constexpr std::array<std::uint8_t, 4> kChambers = {chamber_label::kLV, chamber_label::kRV, chamber_label::kLA,
                                                          chamber_label::kRA};

struct BiometricReport {
  std::string study_id;
  Measured<double> ctr;
  Measured<double> ca_degrees;
  std::array<Measured<double>, 4> fac;  // LV, RV, LA, RA
  Measured<CardiacCycle> cycle;
  int frames_total = 0;
  int frames_used = 0;
  std::vector<FrameMeasurement> frames;
  std::vector<Exclusion> exclusions;
  std::vector<AreaSeries> area_series;  // one per chamber, empty without chamber masks
};

/// CTR and CA are averaged over frames that pass validate_anatomy; FAC and the
/// cycle come from the chamber-mask sequence (ventricular LV+RV area for the
/// cycle). Throws NO_VALID_FRAMES when frames carry AXIS or CTR masks but
/// none of them passes.
BiometricReport measure_study(std::span<const FrameMasks> frames, const MeasureConfig& config = {});

std::string report_to_json(const BiometricReport& report);
/// `frame,area` rows.
std::string area_series_csv(const AreaSeries& series);

}  // namespace fetalscreen

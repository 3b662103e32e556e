#pragma once

// Label schemas, raster types, study manifests and study-level splitting.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fetalscreen/error.hpp"

namespace fetalscreen {

/// The five screening views. Ordinals are fixed: bitstring positions and
/// every per-view array in the system are indexed by them.
enum class ViewLabel : std::uint8_t { ThreeVT = 0, ThreeVV = 1, A5C = 2, A4C = 3, Abdo = 4 };

inline constexpr std::size_t kViewCount = 5;
inline constexpr std::array<ViewLabel, kViewCount> kAllViews = {
    ViewLabel::ThreeVT, ViewLabel::ThreeVV, ViewLabel::A5C, ViewLabel::A4C, ViewLabel::Abdo};

constexpr std::size_t view_index(ViewLabel v) { return static_cast<std::size_t>(v); }

/// "3vt", "3vv", "a5c", "a4c", "abdo".
std::string_view view_name(ViewLabel v);
/// Inverse of view_name; throws Error(InvalidArgument) on anything else.
ViewLabel parse_view(std::string_view name);

enum class LesionClass : std::uint8_t { Normal = 0, Tof = 1, Hlhs = 2 };

inline constexpr std::array<LesionClass, 3> kAllLesions = {LesionClass::Normal, LesionClass::Tof,
                                                           LesionClass::Hlhs};

std::string_view lesion_name(LesionClass c);  // "normal" | "tof" | "hlhs"
LesionClass parse_lesion(std::string_view name);

enum class MaskSchema : std::uint8_t { Axis, Cardiothoracic, Chambers };

inline constexpr std::array<MaskSchema, 3> kAllSchemas = {MaskSchema::Axis, MaskSchema::Cardiothoracic,
                                                          MaskSchema::Chambers};

/// File-format names: "AXIS", "CTR", "CHAMBERS".
std::string_view schema_name(MaskSchema s);
MaskSchema parse_schema(std::string_view name);

/// Highest valid label code for a schema (codes are dense from 0).
std::uint8_t schema_max_label(MaskSchema s);

/// Human-readable structure name for a code, e.g. "septum".
std::string_view label_name(MaskSchema s, std::uint8_t code);

namespace axis_label {
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kThorax = 1;
inline constexpr std::uint8_t kHeart = 2;
inline constexpr std::uint8_t kSpine = 3;
inline constexpr std::uint8_t kSeptum = 4;
}  // namespace axis_label

namespace ctr_label {
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kThorax = 1;
inline constexpr std::uint8_t kHeart = 2;
}  // namespace ctr_label

namespace chamber_label {
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kLV = 1;
inline constexpr std::uint8_t kRV = 2;
inline constexpr std::uint8_t kLA = 3;
inline constexpr std::uint8_t kRA = 4;
}  // namespace chamber_label

/// Single-channel raster of structure labels, row-major.
/// Every cell holds a code valid for the declared schema.
class LabelMask {
 public:
  /// All-background mask.
  LabelMask(int width, int height, MaskSchema schema);
  /// Validates dimensions and every code.
  LabelMask(int width, int height, MaskSchema schema, std::vector<std::uint8_t> labels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  MaskSchema schema() const noexcept { return schema_; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  std::uint8_t at(int x, int y) const { return labels_[index(x, y)]; }
  /// Throws Error(InvalidLabel) when the code is outside the schema.
  void set(int x, int y, std::uint8_t code);

  std::size_t count(std::uint8_t code) const;

  bool operator==(const LabelMask&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  MaskSchema schema_;
  std::vector<std::uint8_t> labels_;
};

/// Greyscale raster, intensities in [0, 1], row-major.
class GreyImage {
 public:
  GreyImage(int width, int height, float fill = 0.0f);
  /// Throws Error(InvalidArgument) on size mismatch or out-of-range values.
  GreyImage(int width, int height, std::vector<float> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const float> values() const noexcept { return values_; }

  float at(int x, int y) const { return values_[index(x, y)]; }
  /// Value is clamped into [0, 1].
  void set(int x, int y, float v);

  bool operator==(const GreyImage&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<float> values_;
};

/// Reads an `FSMASK <schema> <w> <h>\n` + payload file. The schema recorded in
/// the file must equal `schema`.
LabelMask load_mask(const std::filesystem::path& path, MaskSchema schema);
/// Reads a mask using whatever schema its header declares.
LabelMask load_mask(const std::filesystem::path& path);
void save_mask(const LabelMask& mask, const std::filesystem::path& path);

/// `FSIMG <w> <h>\n` + one byte per pixel (0..255 mapped to [0,1] by /255).
GreyImage load_image(const std::filesystem::path& path);
/// Quantizes to 8 bits (round to nearest).
void save_image(const GreyImage& image, const std::filesystem::path& path);

/// Whole-file text IO. Throw IO_FAILURE.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

struct FrameRecord {
  std::string frame_id;
  ViewLabel view = ViewLabel::ThreeVT;
  std::string image_path;
  /// Indexed by MaskSchema ordinal: axis, ctr, chambers.
  std::array<std::optional<std::string>, 3> mask_paths;

  const std::optional<std::string>& mask_path(MaskSchema s) const {
    return mask_paths[static_cast<std::size_t>(s)];
  }
};

struct StudyRecord {
  std::string study_id;
  LesionClass lesion = LesionClass::Normal;
  std::vector<FrameRecord> frames;
};

struct StudyManifest {
  std::vector<StudyRecord> studies;

  /// Throws Error(InvalidArgument) on duplicate study ids or duplicate
  /// frame ids within a study.
  void validate() const;
  const StudyRecord* find(std::string_view study_id) const;
  std::size_t frame_count() const;
};

/// JSON manifest. Relative paths are kept as written; use
/// resolve_manifest_path to locate files.
StudyManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const StudyManifest& manifest, const std::filesystem::path& path);
std::string manifest_to_json(const StudyManifest& manifest);
StudyManifest manifest_from_json(std::string_view text);

/// Paths in a manifest are relative to the manifest's directory unless absolute.
std::filesystem::path resolve_manifest_path(const std::filesystem::path& manifest_path,
                                            const std::string& entry);

struct DatasetSplit {
  std::set<std::string> train;
  std::set<std::string> test;
  std::uint64_t seed = 0;
  double target_ratio = 0.8;
  /// Train share of all frames.
  double achieved_ratio = 0.0;
};

/// Study-level, lesion-stratified, greedy split over seed-shuffled studies.
/// Each lesion class with >= 2 studies lands on both sides.
DatasetSplit split_by_study(const StudyManifest& manifest, double ratio, std::uint64_t seed);

/// Manifest restricted to the given study ids (order preserved).
StudyManifest subset(const StudyManifest& manifest, const std::set<std::string>& study_ids);

}  // namespace fetalscreen

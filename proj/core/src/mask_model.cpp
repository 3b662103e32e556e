#include "fetalscreen/mask_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "fetalscreen/random.hpp"
#include "json.hpp"

namespace fetalscreen {

namespace {

constexpr int kMaxDimension = 1 << 15;

struct RasterHeader {
  std::string magic;
  std::vector<std::string> fields;
};

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& header,
                std::span<const std::uint8_t> payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

// Splits the leading ASCII header line; returns the offset of the payload.
std::size_t parse_header(const std::vector<char>& bytes, RasterHeader& header, const std::string& what) {
  const auto newline = std::find(bytes.begin(), bytes.begin() + std::min<std::size_t>(bytes.size(), 128), '\n');
  if (newline == bytes.end() || *newline != '\n') throw Error(ErrorCode::MalformedFile, what + ": missing header line");
  std::istringstream line(std::string(bytes.begin(), newline));
  line >> header.magic;
  for (std::string tok; line >> tok;) header.fields.push_back(tok);
  return static_cast<std::size_t>(newline - bytes.begin()) + 1;
}

int parse_dimension(const std::string& token, const std::string& what) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw Error(ErrorCode::MalformedFile, what + ": bad dimension '" + token + "'");
  if (token.size() > 6) throw Error(ErrorCode::MalformedFile, what + ": dimension too large");
  const int value = std::stoi(token);
  if (value <= 0 || value > kMaxDimension) throw Error(ErrorCode::MalformedFile, what + ": dimension out of range");
  return value;
}

void check_dimensions(int width, int height) {
  if (width <= 0 || height <= 0 || width > kMaxDimension || height > kMaxDimension)
    throw Error(ErrorCode::InvalidArgument, "raster dimensions must be positive");
}

}  // namespace

std::string_view view_name(ViewLabel v) {
  switch (v) {
    case ViewLabel::ThreeVT: return "3vt";
    case ViewLabel::ThreeVV: return "3vv";
    case ViewLabel::A5C: return "a5c";
    case ViewLabel::A4C: return "a4c";
    case ViewLabel::Abdo: return "abdo";
  }
  return "?";
}

ViewLabel parse_view(std::string_view name) {
  for (auto v : kAllViews)
    if (view_name(v) == name) return v;
  throw Error(ErrorCode::InvalidArgument, "unknown view '" + std::string(name) + "'");
}

std::string_view lesion_name(LesionClass c) {
  switch (c) {
    case LesionClass::Normal: return "normal";
    case LesionClass::Tof: return "tof";
    case LesionClass::Hlhs: return "hlhs";
  }
  return "?";
}

LesionClass parse_lesion(std::string_view name) {
  for (auto c : kAllLesions)
    if (lesion_name(c) == name) return c;
  throw Error(ErrorCode::InvalidArgument, "unknown lesion '" + std::string(name) + "'");
}

std::string_view schema_name(MaskSchema s) {
  switch (s) {
    case MaskSchema::Axis: return "AXIS";
    case MaskSchema::Cardiothoracic: return "CTR";
    case MaskSchema::Chambers: return "CHAMBERS";
  }
  return "?";
}

MaskSchema parse_schema(std::string_view name) {
  for (auto s : kAllSchemas)
    if (schema_name(s) == name) return s;
  throw Error(ErrorCode::InvalidArgument, "unknown schema '" + std::string(name) + "'");
}

std::uint8_t schema_max_label(MaskSchema s) {
  switch (s) {
    case MaskSchema::Axis: return 4;
    case MaskSchema::Cardiothoracic: return 2;
    case MaskSchema::Chambers: return 4;
  }
  return 0;
}

std::string_view label_name(MaskSchema s, std::uint8_t code) {
  static constexpr std::array<std::string_view, 5> axis = {"background", "thorax", "heart", "spine", "septum"};
  static constexpr std::array<std::string_view, 3> ctr = {"background", "thorax", "heart"};
  static constexpr std::array<std::string_view, 5> chambers = {"background", "lv", "rv", "la", "ra"};
  if (code > schema_max_label(s)) return "invalid";
  switch (s) {
    case MaskSchema::Axis: return axis[code];
    case MaskSchema::Cardiothoracic: return ctr[code];
    case MaskSchema::Chambers: return chambers[code];
  }
  return "invalid";
}

// --- LabelMask ---------------------------------------------------------------

LabelMask::LabelMask(int width, int height, MaskSchema schema)
    : width_(width), height_(height), schema_(schema) {
  check_dimensions(width, height);
  labels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

LabelMask::LabelMask(int width, int height, MaskSchema schema, std::vector<std::uint8_t> labels)
    : width_(width), height_(height), schema_(schema), labels_(std::move(labels)) {
  check_dimensions(width, height);
  if (labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(ErrorCode::InvalidArgument, "label grid size does not match dimensions");
  const auto max_code = schema_max_label(schema);
  for (auto code : labels_)
    if (code > max_code)
      throw Error(ErrorCode::InvalidLabel, "code " + std::to_string(code) + " not valid for schema " +
                                               std::string(schema_name(schema)));
}

void LabelMask::set(int x, int y, std::uint8_t code) {
  if (code > schema_max_label(schema_))
    throw Error(ErrorCode::InvalidLabel, "code " + std::to_string(code) + " not valid for schema " +
                                             std::string(schema_name(schema_)));
  labels_[index(x, y)] = code;
}

std::size_t LabelMask::count(std::uint8_t code) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), code));
}

// --- GreyImage ---------------------------------------------------------------

GreyImage::GreyImage(int width, int height, float fill) : width_(width), height_(height) {
  check_dimensions(width, height);
  values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), std::clamp(fill, 0.0f, 1.0f));
}

GreyImage::GreyImage(int width, int height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_dimensions(width, height);
  if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(ErrorCode::InvalidArgument, "intensity grid size does not match dimensions");
  for (float v : values_)
    if (!(v >= 0.0f && v <= 1.0f)) throw Error(ErrorCode::InvalidArgument, "intensity outside [0,1]");
}

void GreyImage::set(int x, int y, float v) { values_[index(x, y)] = std::clamp(v, 0.0f, 1.0f); }

// --- raster files --------------------------------------------------------------

LabelMask load_mask(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string what = path.string();
  RasterHeader header;
  const auto offset = parse_header(bytes, header, what);
  if (header.magic != "FSMASK" || header.fields.size() != 3)
    throw Error(ErrorCode::MalformedFile, what + ": expected 'FSMASK <schema> <width> <height>'");
  MaskSchema schema;
  try {
    schema = parse_schema(header.fields[0]);
  } catch (const Error&) {
    throw Error(ErrorCode::MalformedFile, what + ": unknown schema '" + header.fields[0] + "'");
  }
  const int width = parse_dimension(header.fields[1], what);
  const int height = parse_dimension(header.fields[2], what);
  const auto expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - offset != expected)
    throw Error(ErrorCode::MalformedFile, what + ": payload has " + std::to_string(bytes.size() - offset) +
                                              " bytes, expected " + std::to_string(expected));
  std::vector<std::uint8_t> labels(expected);
  std::transform(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end(), labels.begin(),
                 [](char c) { return static_cast<std::uint8_t>(c); });
  return LabelMask(width, height, schema, std::move(labels));
}

LabelMask load_mask(const std::filesystem::path& path, MaskSchema schema) {
  auto mask = load_mask(path);
  if (mask.schema() != schema)
    throw Error(ErrorCode::MalformedFile, path.string() + ": file declares schema " +
                                              std::string(schema_name(mask.schema())) + ", expected " +
                                              std::string(schema_name(schema)));
  return mask;
}

void save_mask(const LabelMask& mask, const std::filesystem::path& path) {
  const std::string header = "FSMASK " + std::string(schema_name(mask.schema())) + " " +
                             std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n";
  write_file(path, header, mask.labels());
}

GreyImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string what = path.string();
  RasterHeader header;
  const auto offset = parse_header(bytes, header, what);
  if (header.magic != "FSIMG" || header.fields.size() != 2)
    throw Error(ErrorCode::MalformedFile, what + ": expected 'FSIMG <width> <height>'");
  const int width = parse_dimension(header.fields[0], what);
  const int height = parse_dimension(header.fields[1], what);
  const auto expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - offset != expected)
    throw Error(ErrorCode::MalformedFile, what + ": payload size mismatch");
  std::vector<float> values(expected);
  for (std::size_t i = 0; i < expected; ++i)
    values[i] = static_cast<float>(static_cast<std::uint8_t>(bytes[offset + i])) / 255.0f;
  return GreyImage(width, height, std::move(values));
}

void save_image(const GreyImage& image, const std::filesystem::path& path) {
  const std::string header = "FSIMG " + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n";
  std::vector<std::uint8_t> payload(image.values().size());
  std::transform(image.values().begin(), image.values().end(), payload.begin(),
                 [](float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); });
  write_file(path, header, payload);
}

// --- manifest ------------------------------------------------------------------

void StudyManifest::validate() const {
  std::set<std::string> ids;
  for (const auto& study : studies) {
    if (study.study_id.empty()) throw Error(ErrorCode::InvalidArgument, "empty study_id");
    if (!ids.insert(study.study_id).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate study_id '" + study.study_id + "'");
    std::set<std::string> frames;
    for (const auto& frame : study.frames)
      if (!frames.insert(frame.frame_id).second)
        throw Error(ErrorCode::InvalidArgument,
                    "duplicate frame_id '" + frame.frame_id + "' in study '" + study.study_id + "'");
  }
}

const StudyRecord* StudyManifest::find(std::string_view study_id) const {
  auto it = std::find_if(studies.begin(), studies.end(), [&](const auto& s) { return s.study_id == study_id; });
  return it == studies.end() ? nullptr : &*it;
}

std::size_t StudyManifest::frame_count() const {
  std::size_t n = 0;
  for (const auto& s : studies) n += s.frames.size();
  return n;
}

namespace {

constexpr std::array<const char*, 3> kMaskKeys = {"mask_axis", "mask_ctr", "mask_chambers"};

template <typename T>
T required(const nlohmann::json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key))
    throw Error(ErrorCode::MalformedFile, std::string("manifest entry missing '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedFile, std::string("manifest field '") + key + "' has the wrong type");
  }
}

}  // namespace

StudyManifest manifest_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedFile, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::MalformedFile, "manifest must be a JSON array of studies");

  StudyManifest manifest;
  for (const auto& s : doc) {
    StudyRecord study;
    study.study_id = required<std::string>(s, "study_id");
    try {
      study.lesion = parse_lesion(required<std::string>(s, "lesion"));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MalformedFile) throw;
      throw Error(ErrorCode::MalformedFile, e.detail());
    }
    const auto& frames = s.contains("frames") ? s.at("frames") : nlohmann::json();
    if (!frames.is_array()) throw Error(ErrorCode::MalformedFile, "study '" + study.study_id + "' lacks a frames array");
    for (const auto& f : frames) {
      FrameRecord frame;
      frame.frame_id = required<std::string>(f, "frame_id");
      try {
        frame.view = parse_view(required<std::string>(f, "view"));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedFile) throw;
        throw Error(ErrorCode::MalformedFile, e.detail());
      }
      frame.image_path = required<std::string>(f, "image");
      for (std::size_t k = 0; k < kMaskKeys.size(); ++k)
        if (f.contains(kMaskKeys[k])) frame.mask_paths[k] = required<std::string>(f, kMaskKeys[k]);
      study.frames.push_back(std::move(frame));
    }
    manifest.studies.push_back(std::move(study));
  }
  try {
    manifest.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedFile, e.detail());
  }
  return manifest;
}

std::string manifest_to_json(const StudyManifest& manifest) {
  auto doc = nlohmann::ordered_json::array();
  for (const auto& study : manifest.studies) {
    nlohmann::ordered_json s;
    s["study_id"] = study.study_id;
    s["lesion"] = lesion_name(study.lesion);
    auto frames = nlohmann::ordered_json::array();
    for (const auto& frame : study.frames) {
      nlohmann::ordered_json f;
      f["frame_id"] = frame.frame_id;
      f["view"] = view_name(frame.view);
      f["image"] = frame.image_path;
      for (std::size_t k = 0; k < kMaskKeys.size(); ++k)
        if (frame.mask_paths[k]) f[kMaskKeys[k]] = *frame.mask_paths[k];
      frames.push_back(std::move(f));
    }
    s["frames"] = std::move(frames);
    doc.push_back(std::move(s));
  }
  return doc.dump(2) + "\n";
}

StudyManifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return manifest_from_json(std::string_view(bytes.data(), bytes.size()));
}

void save_manifest(const StudyManifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  const auto text = manifest_to_json(manifest);
  write_file(path, text, {});
}

std::filesystem::path resolve_manifest_path(const std::filesystem::path& manifest_path, const std::string& entry) {
  std::filesystem::path p(entry);
  if (p.is_absolute()) return p;
  return manifest_path.parent_path() / p;
}

// --- splitting -------------------------------------------------------------------

DatasetSplit split_by_study(const StudyManifest& manifest, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorCode::InvalidArgument, "split ratio must be in (0,1)");
  if (manifest.studies.size() < 2)
    throw Error(ErrorCode::TooFewStudies, "need at least 2 studies, got " + std::to_string(manifest.studies.size()));
  manifest.validate();

  DatasetSplit split;
  split.seed = seed;
  split.target_ratio = ratio;

  std::size_t train_frames = 0;
  for (auto lesion : kAllLesions) {
    std::vector<const StudyRecord*> group;
    for (const auto& s : manifest.studies)
      if (s.lesion == lesion) group.push_back(&s);
    if (group.empty()) continue;

    // Shuffle a canonical (id-sorted) order so input ordering never matters.
    std::sort(group.begin(), group.end(), [](auto* a, auto* b) { return a->study_id < b->study_id; });
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(lesion)}));
    rng.shuffle(std::span(group));

    std::size_t total = 0;
    for (auto* s : group) total += s->frames.size();
    const double target = ratio * static_cast<double>(total);

    std::vector<const StudyRecord*> train, test;
    double assigned = 0.0;
    for (auto* s : group) {
      const double with = assigned + static_cast<double>(s->frames.size());
      if (std::abs(with - target) < std::abs(assigned - target)) {
        train.push_back(s);
        assigned = with;
      } else {
        test.push_back(s);
      }
    }
    if (group.size() >= 2) {
      if (test.empty()) {
        test.push_back(train.back());
        train.pop_back();
      } else if (train.empty()) {
        train.push_back(test.front());
        test.erase(test.begin());
      }
    }
    for (auto* s : train) {
      split.train.insert(s->study_id);
      train_frames += s->frames.size();
    }
    for (auto* s : test) split.test.insert(s->study_id);
  }
  const auto frames = manifest.frame_count();
  split.achieved_ratio = frames == 0 ? 0.0 : static_cast<double>(train_frames) / static_cast<double>(frames);
  return split;
}

StudyManifest subset(const StudyManifest& manifest, const std::set<std::string>& study_ids) {
  StudyManifest out;
  for (const auto& s : manifest.studies)
    if (study_ids.count(s.study_id)) out.studies.push_back(s);
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fetalscreen

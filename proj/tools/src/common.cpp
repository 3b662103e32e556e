#include <cstdio>
#include <sstream>

#include "commands.hpp"
#include "fetalscreen/parallel.hpp"
#include "fetalscreen/random.hpp"
#include "json.hpp"

namespace fetalscreen::cli {

using ordered_json = nlohmann::ordered_json;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

SplitFile make_split(const StudyManifest& manifest, double ratio, double calibration_ratio, std::uint64_t seed) {
  if (!(calibration_ratio > 0.0 && calibration_ratio < 1.0))
    throw Error(ErrorCode::InvalidArgument, "calibration ratio must lie in (0, 1)");
  const auto outer = split_by_study(manifest, ratio, seed);
  const auto inner = split_by_study(subset(manifest, outer.train), 1.0 - calibration_ratio, derive_seed(seed, {0xCA1B}));
  return {seed, ratio, calibration_ratio, outer.train, outer.test, inner.train, inner.test};
}

namespace {

ordered_json id_array(const std::set<std::string>& ids) {
  auto a = ordered_json::array();
  for (const auto& id : ids) a.push_back(id);
  return a;
}

std::set<std::string> id_set(const ordered_json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) throw Error(ErrorCode::MalformedFile, std::string("split lacks '") + key + "'");
  std::set<std::string> out;
  for (const auto& v : j[key]) out.insert(v.get<std::string>());
  return out;
}

}  // namespace

void save_split(const SplitFile& split, const fs::path& path) {
  ordered_json j;
  j["seed"] = split.seed;
  j["ratio"] = split.ratio;
  j["calibration_ratio"] = split.calibration_ratio;
  j["train"] = id_array(split.train);
  j["test"] = id_array(split.test);
  j["fit"] = id_array(split.fit);
  j["calibration"] = id_array(split.calibration);
  write_text_file(path, j.dump(2) + "\n");
}

SplitFile load_split(const fs::path& path) {
  try {
    const auto j = ordered_json::parse(read_text_file(path));
    SplitFile s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.ratio = j.at("ratio").get<double>();
    s.calibration_ratio = j.at("calibration_ratio").get<double>();
    s.train = id_set(j, "train");
    s.test = id_set(j, "test");
    s.fit = id_set(j, "fit");
    s.calibration = id_set(j, "calibration");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
  }
}

const std::set<std::string>* split_part(const SplitFile& split, const std::string& name) {
  if (name == "all") return nullptr;
  if (name == "train") return &split.train;
  if (name == "test") return &split.test;
  if (name == "fit") return &split.fit;
  if (name == "calibration") return &split.calibration;
  throw Error(ErrorCode::InvalidArgument, "unknown subset '" + name + "'");
}

StudyManifest restrict_to(const StudyManifest& manifest, const std::optional<SplitFile>& split,
                          const std::string& part) {
  if (part == "all") return manifest;
  if (!split) throw Error(ErrorCode::InvalidArgument, "subset '" + part + "' needs --split");
  return subset(manifest, *split_part(*split, part));
}

void save_model_index(const std::vector<ModelEntry>& entries, const fs::path& path) {
  auto a = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json j;
    j["name"] = e.name;
    j["task"] = e.task;
    j["view"] = e.view ? ordered_json(view_name(*e.view)) : ordered_json(nullptr);
    j["file"] = e.file;
    j["train_frames"] = e.train_frames;
    a.push_back(std::move(j));
  }
  write_text_file(path, ordered_json{{"models", a}}.dump(2) + "\n");
}

std::vector<ModelEntry> load_model_index(const fs::path& path) {
  try {
    const auto j = ordered_json::parse(read_text_file(path));
    std::vector<ModelEntry> out;
    for (const auto& m : j.at("models")) {
      ModelEntry e;
      e.name = m.at("name").get<std::string>();
      e.task = m.at("task").get<std::string>();
      if (!m.at("view").is_null()) e.view = parse_view(m.at("view").get<std::string>());
      e.file = m.at("file").get<std::string>();
      e.train_frames = m.at("train_frames").get<std::size_t>();
      out.push_back(std::move(e));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.detail());
    throw;
  }
}

std::vector<GreyImage> load_preprocessed(const fs::path& manifest_path, std::span<const FrameRef> frames,
                                         int threads) {
  std::vector<std::optional<GreyImage>> slots(frames.size());
  parallel_for(static_cast<int>(frames.size()), threads, [&](int i) {
    const auto& ref = frames[static_cast<std::size_t>(i)];
    slots[static_cast<std::size_t>(i)] = preprocess(load_image(resolve_manifest_path(manifest_path, ref.frame->image_path)));
  });
  std::vector<GreyImage> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_optional(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace fetalscreen::cli

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "fetalscreen/classifier.hpp"
#include "fetalscreen/diagnosis.hpp"
#include "fetalscreen/mask_model.hpp"

namespace fetalscreen::cli {

namespace fs = std::filesystem;

struct Context {
  std::uint64_t seed = 0;
  fs::path out;
  int threads = 1;
  std::ostream* out_stream = nullptr;
  std::ostream* err_stream = nullptr;

  std::ostream& out_s() const { return *out_stream; }
  std::ostream& err_s() const { return *err_stream; }
};

struct PhantomArgs {
  std::string kind = "views";
  int studies = 0;
  double noise = 0.0;
  // views
  int frames_per_view = 2;
  int cine_frames = 12;
  int cine_period = 8;
  double severity = 1.0;
  std::vector<double> mix = {0.72, 0.13, 0.15};
  bool no_masks = false;
  // biometric
  std::optional<int> frames;
  std::optional<double> predicted_jaccard;
  bool no_images = false;
  std::vector<double> ctr_range = {0.40, 0.70};
  std::vector<double> ca_range = {25.0, 70.0};
  std::vector<double> fac_range = {0.20, 0.60};
};

struct MeasureArgs {
  fs::path manifest;
  std::vector<std::string> schemas = {"axis", "ctr", "chambers"};
  double containment = 0.95;
};

struct SplitArgs {
  std::optional<fs::path> split;  // reuse instead of recomputing
  double ratio = 0.8;
  double calibration_ratio = 0.25;
};

struct TrainArgs {
  fs::path manifest;
  std::string task = "view";
  std::string arch = "linear";
  int hidden = 32;
  int epochs = 150;
  double lr = 5e-4;
  int batch = 32;
  double l2 = 1e-4;
  double momentum = 0.9;
  bool no_balance = false;
  bool augment = false;
  bool shuffle_labels = false;
  std::vector<std::string> views = {"3vt", "3vv", "a5c", "a4c", "abdo"};
  SplitArgs split;
};

struct PredictArgs {
  fs::path manifest;
  std::vector<fs::path> models;
  std::string route = "auto";
  std::optional<fs::path> split;
  std::string subset = "all";
};

struct EvaluateArgs {
  fs::path manifest;
  std::optional<fs::path> predictions;
  std::optional<fs::path> predicted_manifest;
  std::optional<fs::path> measurements;
  std::optional<fs::path> split;
  std::string subset = "all";
};

struct DiagnoseArgs {
  fs::path manifest;
  fs::path predictions;
  std::optional<fs::path> split;
  std::string subset = "auto";
  std::vector<std::string> tasks;
  std::vector<double> c_stats;
  double bit_threshold = kDefaultBitThreshold;
  double cutoff = kDefaultCStatCutoff;
  int score_threshold = kDefaultScoreThreshold;
};

struct ReportArgs {
  std::vector<fs::path> inputs;
};

int cmd_phantom(const PhantomArgs& args, const Context& ctx);
int cmd_measure(const MeasureArgs& args, const Context& ctx);
int cmd_train(const TrainArgs& args, const Context& ctx);
int cmd_predict(const PredictArgs& args, const Context& ctx);
int cmd_evaluate(const EvaluateArgs& args, const Context& ctx);
int cmd_diagnose(const DiagnoseArgs& args, const Context& ctx);
int cmd_report(const ReportArgs& args, const Context& ctx);

// --- shared helpers (common.cpp) ----------------------------------------------

void ensure_dir(const fs::path& dir);

/// Study-level split plus the calibration partition carved out of train.
struct SplitFile {
  std::uint64_t seed = 0;
  double ratio = 0.8;
  double calibration_ratio = 0.25;
  std::set<std::string> train, test, fit, calibration;
};

SplitFile make_split(const StudyManifest& manifest, double ratio, double calibration_ratio, std::uint64_t seed);
SplitFile load_split(const fs::path& path);
void save_split(const SplitFile& split, const fs::path& path);
/// "all", "train", "test", "fit" or "calibration". Throws INVALID_ARGUMENT.
const std::set<std::string>* split_part(const SplitFile& split, const std::string& name);
/// Manifest restricted to a named part; "all" returns it unchanged.
StudyManifest restrict_to(const StudyManifest& manifest, const std::optional<SplitFile>& split,
                          const std::string& part);

struct ModelEntry {
  std::string name;
  std::string task;  // "view" or a diagnostic task name
  std::optional<ViewLabel> view;
  std::string file;  // relative to the index
  std::size_t train_frames = 0;
};

void save_model_index(const std::vector<ModelEntry>& entries, const fs::path& path);
std::vector<ModelEntry> load_model_index(const fs::path& path);

/// Loads and preprocesses the images of (study, frame) pairs in parallel.
struct FrameRef {
  const StudyRecord* study = nullptr;
  const FrameRecord* frame = nullptr;
};
std::vector<GreyImage> load_preprocessed(const fs::path& manifest_path, std::span<const FrameRef> frames,
                                         int threads);

std::string fmt_double(double v);
std::string fmt_optional(const std::optional<double>& v);
std::vector<std::string> split_list(const std::string& s);

}  // namespace fetalscreen::cli

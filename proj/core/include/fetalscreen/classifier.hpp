#pragma once

// Reference image classifier: fixed preprocessing, affine augmentation and a
// softmax model (linear or one tanh hidden layer) trained by minibatch SGD.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fetalscreen/diagnosis.hpp"
#include "fetalscreen/mask_model.hpp"

namespace fetalscreen {

enum class Normalization { MinMax, None };

struct PreprocessConfig {
  int source_width = 400;
  int source_height = 300;
  int crop_width = 240;
  int crop_height = 180;
  std::optional<int> crop_x;  // default: centered
  std::optional<int> crop_y;
  int factor = 3;  // box-mean downsampling factor
  Normalization normalization = Normalization::MinMax;

  int output_width() const { return crop_width / factor; }
  int output_height() const { return crop_height / factor; }
  /// Throws INVALID_ARGUMENT.
  void validate() const;
};

/// Crop, box-mean downsample, then per-image min-max scaling (constant -> 0).
/// Throws DIMENSION_MISMATCH when the source size differs from the config.
GreyImage preprocess(const GreyImage& image, const PreprocessConfig& config = {});

struct AugmentationConfig {
  double rotation_range = 10.0;  // degrees
  double width_shift = 0.3;      // fraction of width
  double height_shift = 0.3;     // fraction of height
  bool horizontal_flip = true;
  bool vertical_flip = true;
  double shear = 0.01;  // degrees
  double zoom = 0.05;   // scale drawn from [1 - zoom, 1 + zoom] per axis
  std::uint64_t seed = 0;

  static AugmentationConfig identity();
  void validate() const;
};

struct AffineDraw {
  double rotation_deg = 0.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
  double shear_deg = 0.0;
  double zoom_x = 1.0;
  double zoom_y = 1.0;
  bool flip_h = false;
  bool flip_v = false;
};

AffineDraw draw_augmentation(const AugmentationConfig& config, int width, int height, std::uint64_t draw_seed);
/// Transform about the image center; bilinear sampling, zero outside the source.
GreyImage apply_affine(const GreyImage& image, const AffineDraw& draw);
GreyImage augment(const GreyImage& image, const AugmentationConfig& config, std::uint64_t draw_seed);

enum class Architecture { Linear, Hidden };
std::string_view architecture_name(Architecture a);
Architecture parse_architecture(std::string_view name);

/// Parameter layout. Linear: W[K x D], b[K]. Hidden: W1[H x D], b1[H], W2[K x H], b2[K].
struct ModelParams {
  Architecture arch = Architecture::Linear;
  int input_width = 80;
  int input_height = 60;
  int hidden = 0;
  std::vector<std::string> classes;
  std::vector<double> params;

  std::size_t input_size() const { return static_cast<std::size_t>(input_width) * static_cast<std::size_t>(input_height); }
  std::size_t class_count() const { return classes.size(); }
  std::size_t expected_param_count() const;
  /// Throws INVALID_ARGUMENT on inconsistent shapes or non-finite values.
  void validate() const;

  static ModelParams zeros(Architecture arch, int width, int height, int hidden, std::vector<std::string> classes);
  /// Small Gaussian weights (Xavier-style scale), zero biases.
  static ModelParams random(Architecture arch, int width, int height, int hidden, std::vector<std::string> classes,
                            std::uint64_t seed);
};

/// Softmax probabilities. Throws DIMENSION_MISMATCH.
std::vector<double> predict(const ModelParams& model, const GreyImage& image);
std::vector<double> predict(const ModelParams& model, std::span<const float> features);

struct Example {
  std::span<const float> features;
  int label = 0;
};

/// Mean cross-entropy over the batch plus 0.5 * l2 * sum of squared weights
/// (biases excluded). Fills `gradient` (resized) when non-null.
double loss_and_gradient(const ModelParams& model, std::span<const Example> batch, double l2,
                         std::vector<double>* gradient);

using GradientFn = std::function<double(const ModelParams&, std::span<const Example>, double, std::vector<double>*)>;

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
};

/// Central differences with `step` on `n_params` seeded parameter indices,
/// relative error |a - n| / max(|a|, |n|, 1e-8). `analytic` defaults to
/// loss_and_gradient and exists so faults can be injected.
GradientCheckResult gradient_check(const ModelParams& model, std::span<const Example> batch, double l2 = 0.0,
                                   std::size_t n_params = 128, std::uint64_t seed = 0, double step = 1e-5,
                                   const GradientFn& analytic = {});

struct TrainConfig {
  double learning_rate = 5e-4;  // raw pixel inputs have squared norms in the thousands
  int batch_size = 32;
  int epochs = 150;
  double l2 = 1e-4;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  bool class_balanced = true;
  /// Off by default: a linear model cannot absorb shifts of 30% of the frame.
  std::optional<AugmentationConfig> augmentation;
  int hidden = 32;  // used by Architecture::Hidden

  void validate() const;
};

/// Preprocessed images (all the same size) with class indices.
struct TrainingSet {
  std::vector<GreyImage> images;
  std::vector<int> labels;
  std::vector<std::string> classes;
};

struct TrainResult {
  ModelParams model;
  std::vector<double> loss_history;  // mean minibatch loss per epoch
};

/// An epoch draws as many samples as the set holds; with class balancing each
/// draw picks a class uniformly among those present, then a member uniformly.
/// Throws SINGLE_CLASS_DATA, DIMENSION_MISMATCH or INVALID_ARGUMENT.
TrainResult train(const TrainingSet& data, Architecture arch, const TrainConfig& config);

/// Binary `FSMODEL1` file, little-endian. Throws IO_FAILURE / MALFORMED_FILE.
void save_model(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_model(const ModelParams& model);
ModelParams deserialize_model(std::span<const std::uint8_t> bytes);

struct LesionPredictionRow {
  std::string study_id;
  std::string frame_id;
  ViewLabel view = ViewLabel::ThreeVT;
  DiagnosticTask task = DiagnosticTask::NormalVsEither;
  double p_abnormal = 0.0;
};

struct ViewPredictionRow {
  std::string study_id;
  std::string frame_id;
  ViewLabel view = ViewLabel::ThreeVT;  // the frame's recorded view
  std::array<double, kViewCount> probabilities{};
};

inline constexpr std::string_view kLesionCsvHeader = "study_id,frame_id,view,task,p_abnormal";
inline constexpr std::string_view kViewCsvHeader = "study_id,frame_id,view,p_3vt,p_3vv,p_a5c,p_a4c,p_abdo";

std::string lesion_predictions_csv(std::span<const LesionPredictionRow> rows);
std::string view_predictions_csv(std::span<const ViewPredictionRow> rows);
/// Throw MALFORMED_FILE or PROBABILITY_OUT_OF_RANGE.
std::vector<LesionPredictionRow> parse_lesion_predictions(std::string_view text);
std::vector<ViewPredictionRow> parse_view_predictions(std::string_view text);

/// Groups rows per (study, task) in order of first appearance.
std::vector<ViewPredictionSet> group_predictions(std::span<const LesionPredictionRow> rows);
/// Reads a lesion prediction CSV and groups it.
std::vector<ViewPredictionSet> import_predictions(const std::filesystem::path& path);

}  // namespace fetalscreen

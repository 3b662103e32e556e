#pragma once

// Study-level composite diagnosis from per-view abnormality probabilities.

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fetalscreen/evaluation.hpp"
#include "fetalscreen/mask_model.hpp"

namespace fetalscreen {

enum class DiagnosticTask { NormalVsTof, NormalVsHlhs, NormalVsEither };

inline constexpr std::array<DiagnosticTask, 3> kAllTasks = {DiagnosticTask::NormalVsTof, DiagnosticTask::NormalVsHlhs,
                                                            DiagnosticTask::NormalVsEither};

std::string_view task_name(DiagnosticTask t);  // "tof" | "hlhs" | "either"
DiagnosticTask parse_task(std::string_view name);
/// Whether a study of this lesion class takes part in the task.
bool task_includes(DiagnosticTask t, LesionClass lesion);
/// Whether it counts as disease-positive (only meaningful when included).
bool task_positive(DiagnosticTask t, LesionClass lesion);

using PerView = std::array<std::vector<double>, kViewCount>;

struct ViewPredictionSet {
  std::string study_id;
  DiagnosticTask task = DiagnosticTask::NormalVsEither;
  PerView probabilities;  // per-frame P(abnormal), indexed by view ordinal
};

struct StudyBitstring {
  std::array<int, kViewCount> bits{};
  std::array<std::optional<double>, kViewCount> means;
  std::array<bool, kViewCount> missing{};

  std::string str() const;  // e.g. "11100"
  std::size_t missing_count() const;
};

inline constexpr double kDefaultBitThreshold = 0.5;
inline constexpr double kDefaultCStatCutoff = 0.60;
inline constexpr int kDefaultScoreThreshold = 2;

/// Throws NO_PREDICTIONS when every view is empty, PROBABILITY_OUT_OF_RANGE
/// for values outside [0, 1].
StudyBitstring aggregate_views(const ViewPredictionSet& predictions, double bit_threshold = kDefaultBitThreshold);

/// Views whose C-statistic is strictly above `cutoff`, in ordinal order.
/// Undefined (nullopt or NaN) C-statistics are never selected. Throws EMPTY_SELECTION.
std::vector<ViewLabel> select_views(std::span<const std::optional<double>, kViewCount> c_stats,
                                    double cutoff = kDefaultCStatCutoff);
std::vector<ViewLabel> select_views(std::span<const double, kViewCount> c_stats, double cutoff = kDefaultCStatCutoff);

enum class Decision { Normal, Chd };
std::string_view decision_name(Decision d);

struct CompositeDecision {
  std::vector<ViewLabel> selected;
  int score = 0;
  int threshold = kDefaultScoreThreshold;
  Decision decision = Decision::Normal;
};

CompositeDecision composite_score(const StudyBitstring& bits, std::span<const ViewLabel> selected,
                                  int threshold = kDefaultScoreThreshold);

struct TaskConfig {
  double bit_threshold = kDefaultBitThreshold;
  double c_stat_cutoff = kDefaultCStatCutoff;
  int score_threshold = kDefaultScoreThreshold;
};

struct StudyDecision {
  std::string study_id;
  LesionClass lesion = LesionClass::Normal;
  StudyBitstring bits;
  CompositeDecision composite;
  bool low_confidence = false;  // every view missing
};

/// A study without any predictions is decided NORMAL with low_confidence set.
StudyDecision decide_study(const ViewPredictionSet& predictions, LesionClass lesion,
                           std::span<const ViewLabel> selected, const TaskConfig& config = {});

using ViewCStats = std::array<std::optional<double>, kViewCount>;

/// Frame-level C-statistic per view over studies included in the task.
/// A view lacking either class is left undefined.
ViewCStats view_c_statistics(std::span<const ViewPredictionSet> predictions,
                             const std::map<std::string, LesionClass>& lesions, DiagnosticTask task);

/// Either explicit C-statistics or predictions on a calibration partition.
struct CStatSource {
  std::optional<ViewCStats> values;
  std::vector<ViewPredictionSet> calibration;
  std::map<std::string, LesionClass> calibration_lesions;
};

struct TaskReport {
  DiagnosticTask task = DiagnosticTask::NormalVsEither;
  TaskConfig config;
  ViewCStats selection_c_stats;  // used for view selection
  ViewCStats test_c_stats;       // measured on the decided studies
  std::vector<ViewLabel> selected;
  std::vector<StudyDecision> decisions;  // manifest order
  BinaryDiagnosticRates rates;
};

/// Decides every study of `manifest` that the task includes. Throws
/// MISSING_PREDICTIONS (naming the studies) or EMPTY_SELECTION.
TaskReport run_task(const StudyManifest& manifest, std::span<const ViewPredictionSet> predictions,
                    DiagnosticTask task, const CStatSource& c_stats, const TaskConfig& config = {});

std::string task_report_to_json(const TaskReport& report);

}  // namespace fetalscreen

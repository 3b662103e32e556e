#pragma once

// Classification, ROC, overlap and rank statistics.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fetalscreen/mask_model.hpp"

namespace fetalscreen {

struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> counts;  // [actual][predicted]

  std::size_t size() const { return classes.size(); }
  std::size_t total() const;
  std::size_t at(std::size_t actual, std::size_t predicted) const { return counts.at(actual).at(predicted); }
  std::size_t index_of(std::string_view name) const;  // throws UNKNOWN_CLASS
};

/// Throws LENGTH_MISMATCH or UNKNOWN_CLASS.
ConfusionMatrix confusion_matrix(std::span<const std::string> labels, std::span<const std::string> predictions,
                                 std::span<const std::string> classes);
/// Integer class indices into `classes`.
ConfusionMatrix confusion_matrix(std::span<const int> labels, std::span<const int> predictions,
                                 std::vector<std::string> classes);

enum class Averaging { Macro, Weighted };

struct ClassScore {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct FScore {
  double value = 0.0;
  Averaging averaging = Averaging::Macro;
  std::vector<ClassScore> per_class;
};

/// Precision/recall/F use 0 whenever their denominator is 0. Throws EMPTY_MATRIX.
FScore f_score(const ConfusionMatrix& cm, Averaging averaging = Averaging::Macro);

struct Accuracies {
  double overall = 0.0;             // trace / total
  std::vector<double> per_class;    // recall of each class (0 without support)
  double average = 0.0;             // mean of per_class over classes with support
};

Accuracies accuracies(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf for the (0, 0) anchor
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// labels are 0/1 (1 = positive). Throws LENGTH_MISMATCH, INVALID_ARGUMENT or SINGLE_CLASS.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);
/// Midrank estimator of P(score+ > score-) + P(tie)/2.
double c_statistic(std::span<const double> scores, std::span<const int> labels);

/// `fpr,tpr,threshold` rows.
std::string roc_to_csv(const RocCurve& curve);

/// Per label code of the schema, background included; nullopt when the code
/// appears in neither mask. Throws SHAPE_MISMATCH or SCHEMA_MISMATCH.
std::map<std::uint8_t, std::optional<double>> jaccard_index(const LabelMask& predicted, const LabelMask& truth);

struct BinaryCounts {
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
};

/// Fields stay empty when their denominator is zero.
struct BinaryDiagnosticRates {
  BinaryCounts counts;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> accuracy;
  std::optional<double> ppv;
  std::optional<double> npv;

  std::vector<std::string> undefined_fields() const;
};

BinaryDiagnosticRates diagnostic_rates(const BinaryCounts& counts);
/// 2x2 matrix; `positive_class` names the disease class. Throws INVALID_ARGUMENT
/// for other shapes, UNKNOWN_CLASS for an unknown name.
BinaryDiagnosticRates diagnostic_rates(const ConfusionMatrix& cm, std::string_view positive_class);

enum class MwuMethod { Exact, NormalApproximation };
std::string_view mwu_method_name(MwuMethod m);

/// u_statistic counts pairs (a_i, b_j) with a_i > b_j plus half the ties, so
/// U / (n_a * n_b) with a = positive scores equals the C-statistic.
struct MwuResult {
  double u_statistic = 0.0;
  double p_two_sided = 1.0;
  MwuMethod method = MwuMethod::Exact;
  double variance = 0.0;  // tie-corrected null variance of U
  std::size_t n_a = 0, n_b = 0;
};

inline constexpr std::size_t kExactMwuMaxTotal = 12;

/// Exact null distribution when n_a + n_b <= 12 without ties, else the normal
/// approximation with continuity correction. Throws EMPTY_SAMPLE.
MwuResult mann_whitney_u(std::span<const double> a, std::span<const double> b);
/// Forces the normal approximation (used to cross-check the exact path).
MwuResult mann_whitney_u_normal(std::span<const double> a, std::span<const double> b);

std::string to_json(const ConfusionMatrix& cm);
std::string to_json(const FScore& f);
std::string to_json(const BinaryDiagnosticRates& r);
std::string to_json(const MwuResult& r);
std::string to_json(const RocCurve& c);

}  // namespace fetalscreen

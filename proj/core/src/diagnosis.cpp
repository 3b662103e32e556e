#include "fetalscreen/diagnosis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fetalscreen/error.hpp"
#include "json.hpp"

namespace fetalscreen {

using ordered_json = nlohmann::ordered_json;

std::string_view task_name(DiagnosticTask t) {
  switch (t) {
    case DiagnosticTask::NormalVsTof: return "tof";
    case DiagnosticTask::NormalVsHlhs: return "hlhs";
    case DiagnosticTask::NormalVsEither: return "either";
  }
  return "?";
}

DiagnosticTask parse_task(std::string_view name) {
  for (auto t : kAllTasks)
    if (task_name(t) == name) return t;
  throw Error(ErrorCode::InvalidArgument, "unknown task '" + std::string(name) + "'");
}

bool task_includes(DiagnosticTask t, LesionClass lesion) {
  switch (t) {
    case DiagnosticTask::NormalVsTof: return lesion != LesionClass::Hlhs;
    case DiagnosticTask::NormalVsHlhs: return lesion != LesionClass::Tof;
    case DiagnosticTask::NormalVsEither: return true;
  }
  return false;
}

bool task_positive(DiagnosticTask, LesionClass lesion) { return lesion != LesionClass::Normal; }

std::string StudyBitstring::str() const {
  std::string s;
  for (int b : bits) s.push_back(b ? '1' : '0');
  return s;
}

std::size_t StudyBitstring::missing_count() const { return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), true)); }

StudyBitstring aggregate_views(const ViewPredictionSet& predictions, double bit_threshold) {
  StudyBitstring out;
  bool any = false;
  for (std::size_t v = 0; v < kViewCount; ++v) {
    const auto& probs = predictions.probabilities[v];
    if (probs.empty()) {
      out.missing[v] = true;
      continue;
    }
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0 && p <= 1.0))
        throw Error(ErrorCode::ProbabilityOutOfRange, "probability outside [0, 1] in study " + predictions.study_id);
      sum += p;
    }
    const double mean = sum / static_cast<double>(probs.size());
    out.means[v] = mean;
    out.bits[v] = mean >= bit_threshold ? 1 : 0;
    any = true;
  }
  if (!any) throw Error(ErrorCode::NoPredictions, "study " + predictions.study_id + " has no view predictions");
  return out;
}

std::vector<ViewLabel> select_views(std::span<const std::optional<double>, kViewCount> c_stats, double cutoff) {
  std::vector<ViewLabel> out;
  for (std::size_t v = 0; v < kViewCount; ++v)
    if (c_stats[v] && *c_stats[v] > cutoff) out.push_back(kAllViews[v]);  // NaN compares false
  if (out.empty()) throw Error(ErrorCode::EmptySelection, "no view has a C-statistic above the cutoff");
  return out;
}

std::vector<ViewLabel> select_views(std::span<const double, kViewCount> c_stats, double cutoff) {
  std::array<std::optional<double>, kViewCount> wrapped;
  for (std::size_t v = 0; v < kViewCount; ++v) wrapped[v] = c_stats[v];
  return select_views(std::span<const std::optional<double>, kViewCount>(wrapped), cutoff);
}

std::string_view decision_name(Decision d) { return d == Decision::Chd ? "CHD" : "NORMAL"; }

CompositeDecision composite_score(const StudyBitstring& bits, std::span<const ViewLabel> selected, int threshold) {
  CompositeDecision out;
  out.selected.assign(selected.begin(), selected.end());
  out.threshold = threshold;
  for (auto v : selected) out.score += bits.bits[view_index(v)];
  out.decision = out.score >= threshold ? Decision::Chd : Decision::Normal;
  return out;
}

StudyDecision decide_study(const ViewPredictionSet& predictions, LesionClass lesion,
                           std::span<const ViewLabel> selected, const TaskConfig& config) {
  StudyDecision d;
  d.study_id = predictions.study_id;
  d.lesion = lesion;
  const bool empty = std::all_of(predictions.probabilities.begin(), predictions.probabilities.end(),
                                 [](const auto& p) { return p.empty(); });
  if (empty) {
    d.bits.missing.fill(true);
    d.low_confidence = true;
  } else {
    d.bits = aggregate_views(predictions, config.bit_threshold);
  }
  d.composite = composite_score(d.bits, selected, config.score_threshold);
  return d;
}

ViewCStats view_c_statistics(std::span<const ViewPredictionSet> predictions,
                             const std::map<std::string, LesionClass>& lesions, DiagnosticTask task) {
  ViewCStats out;
  for (std::size_t v = 0; v < kViewCount; ++v) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& p : predictions) {
      const auto it = lesions.find(p.study_id);
      if (it == lesions.end() || !task_includes(task, it->second)) continue;
      for (double s : p.probabilities[v]) {
        scores.push_back(s);
        labels.push_back(task_positive(task, it->second) ? 1 : 0);
      }
    }
    const auto pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || pos == static_cast<long>(labels.size())) continue;
    out[v] = c_statistic(scores, labels);
  }
  return out;
}

TaskReport run_task(const StudyManifest& manifest, std::span<const ViewPredictionSet> predictions,
                    DiagnosticTask task, const CStatSource& c_stats, const TaskConfig& config) {
  TaskReport report;
  report.task = task;
  report.config = config;
  report.selection_c_stats =
      c_stats.values ? *c_stats.values : view_c_statistics(c_stats.calibration, c_stats.calibration_lesions, task);
  report.selected = select_views(std::span<const std::optional<double>, kViewCount>(report.selection_c_stats),
                                 config.c_stat_cutoff);

  std::map<std::string, const ViewPredictionSet*> by_study;
  for (const auto& p : predictions) {
    if (p.task != task)
      throw Error(ErrorCode::InvalidArgument, "prediction for study " + p.study_id + " belongs to task " +
                                                  std::string(task_name(p.task)));
    by_study[p.study_id] = &p;
  }

  std::vector<std::string> missing;
  std::map<std::string, LesionClass> lesions;
  std::vector<ViewPredictionSet> decided;
  BinaryCounts counts;
  for (const auto& study : manifest.studies) {
    if (!task_includes(task, study.lesion)) continue;
    const auto it = by_study.find(study.study_id);
    if (it == by_study.end()) {
      missing.push_back(study.study_id);
      continue;
    }
    auto d = decide_study(*it->second, study.lesion, report.selected, config);
    const bool positive = task_positive(task, study.lesion);
    const bool called = d.composite.decision == Decision::Chd;
    if (positive) (called ? counts.tp : counts.fn) += 1;
    else (called ? counts.fp : counts.tn) += 1;
    report.decisions.push_back(std::move(d));
    lesions[study.study_id] = study.lesion;
    decided.push_back(*it->second);
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::MissingPredictions, "no predictions for studies: " + names);
  }
  report.rates = diagnostic_rates(counts);
  report.test_c_stats = view_c_statistics(decided, lesions, task);
  return report;
}

namespace {

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json c_stats_json(const ViewCStats& c) {
  ordered_json j = ordered_json::object();
  for (std::size_t v = 0; v < kViewCount; ++v) j[std::string(view_name(kAllViews[v]))] = opt(c[v]);
  return j;
}

}  // namespace

std::string task_report_to_json(const TaskReport& report) {
  ordered_json j;
  j["task"] = task_name(report.task);
  j["bit_threshold"] = report.config.bit_threshold;
  j["c_stat_cutoff"] = report.config.c_stat_cutoff;
  j["score_threshold"] = report.config.score_threshold;
  j["selection_c_stats"] = c_stats_json(report.selection_c_stats);
  j["test_c_stats"] = c_stats_json(report.test_c_stats);
  auto sel = ordered_json::array();
  for (auto v : report.selected) sel.push_back(view_name(v));
  j["selected_views"] = sel;
  j["rates"] = ordered_json::parse(to_json(report.rates));
  auto studies = ordered_json::array();
  for (const auto& d : report.decisions) {
    ordered_json s;
    s["study_id"] = d.study_id;
    s["lesion"] = lesion_name(d.lesion);
    s["bitstring"] = d.bits.str();
    auto means = ordered_json::object();
    auto missing = ordered_json::array();
    for (std::size_t v = 0; v < kViewCount; ++v) {
      means[std::string(view_name(kAllViews[v]))] = opt(d.bits.means[v]);
      if (d.bits.missing[v]) missing.push_back(view_name(kAllViews[v]));
    }
    s["view_means"] = means;
    s["missing_views"] = missing;
    s["score"] = d.composite.score;
    s["decision"] = decision_name(d.composite.decision);
    s["low_confidence"] = d.low_confidence;
    studies.push_back(s);
  }
  j["studies"] = studies;
  return j.dump(2) + "\n";
}

}  // namespace fetalscreen

#include <algorithm>
#include <cmath>
#include <map>

#include "commands.hpp"
#include "fetalscreen/evaluation.hpp"
#include "json.hpp"

namespace fetalscreen::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json embed(const std::string& text) { return ordered_json::parse(text); }

void check_study_sets(const StudyManifest& manifest, const std::set<std::string>& predicted) {
  std::vector<std::string> missing, extra;
  std::set<std::string> expected;
  for (const auto& s : manifest.studies) {
    expected.insert(s.study_id);
    if (!predicted.count(s.study_id)) missing.push_back(s.study_id);
  }
  for (const auto& id : predicted)
    if (!expected.count(id)) extra.push_back(id);
  if (missing.empty() && extra.empty()) return;
  std::string msg;
  auto list = [](const std::vector<std::string>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ", " : "") + ids[i];
    return s;
  };
  if (!missing.empty()) msg += "no predictions for studies: " + list(missing);
  if (!extra.empty()) msg += std::string(msg.empty() ? "" : "; ") + "predictions for studies outside the manifest: " + list(extra);
  throw Error(ErrorCode::MissingPredictions, msg);
}

const FrameRecord& find_frame(const StudyRecord& study, const std::string& frame_id) {
  for (const auto& f : study.frames)
    if (f.frame_id == frame_id) return f;
  throw Error(ErrorCode::MissingPredictions, "frame " + study.study_id + "/" + frame_id + " is not in the manifest");
}

ordered_json evaluate_views(const StudyManifest& manifest, std::span<const ViewPredictionRow> rows) {
  std::set<std::string> ids;
  for (const auto& r : rows) ids.insert(r.study_id);
  check_study_sets(manifest, ids);

  std::vector<std::string> classes, truth, predicted;
  for (auto v : kAllViews) classes.emplace_back(view_name(v));
  for (const auto& r : rows) {
    truth.emplace_back(view_name(find_frame(*manifest.find(r.study_id), r.frame_id).view));
    const auto best = std::max_element(r.probabilities.begin(), r.probabilities.end()) - r.probabilities.begin();
    predicted.push_back(classes[static_cast<std::size_t>(best)]);
  }
  const auto cm = confusion_matrix(truth, predicted, classes);
  const auto acc = accuracies(cm);
  ordered_json j;
  j["kind"] = "view";
  j["frames"] = rows.size();
  j["confusion_matrix"] = embed(to_json(cm));
  j["f_score_macro"] = embed(to_json(f_score(cm, Averaging::Macro)));
  j["f_score_weighted"] = embed(to_json(f_score(cm, Averaging::Weighted)));
  j["accuracy_overall"] = acc.overall;
  j["accuracy_average"] = acc.average;
  ordered_json per;
  for (std::size_t c = 0; c < classes.size(); ++c) per[classes[c]] = acc.per_class[c];
  j["accuracy_per_class"] = per;
  return j;
}

ordered_json evaluate_lesions(const StudyManifest& manifest, std::span<const LesionPredictionRow> rows,
                              const fs::path& out_dir) {
  std::set<std::string> ids;
  for (const auto& r : rows) ids.insert(r.study_id);

  ordered_json tasks;
  for (auto task : kAllTasks) {
    std::array<std::vector<double>, kViewCount> scores;
    std::array<std::vector<int>, kViewCount> labels;
    bool seen = false;
    for (const auto& r : rows) {
      if (r.task != task) continue;
      seen = true;
      const auto* study = manifest.find(r.study_id);
      if (!study || !task_includes(task, study->lesion)) continue;
      scores[view_index(r.view)].push_back(r.p_abnormal);
      labels[view_index(r.view)].push_back(task_positive(task, study->lesion) ? 1 : 0);
    }
    if (!seen) continue;
    // Every study that takes part in the task must carry predictions for it.
    StudyManifest included;
    std::set<std::string> task_ids;
    for (const auto& s : manifest.studies)
      if (task_includes(task, s.lesion)) included.studies.push_back(s);
    // Rows of known studies the task leaves out (TOF under hlhs) are ignored.
    for (const auto& r : rows)
      if (const auto* s = manifest.find(r.study_id); r.task == task && s && task_includes(task, s->lesion))
        task_ids.insert(r.study_id);
    for (const auto& id : ids)
      if (!manifest.find(id)) task_ids.insert(id);
    check_study_sets(included, task_ids);

    ordered_json views;
    for (auto v : kAllViews) {
      const auto vi = view_index(v);
      ordered_json vj;
      const auto positives = static_cast<std::size_t>(std::count(labels[vi].begin(), labels[vi].end(), 1));
      vj["frames"] = scores[vi].size();
      vj["positive_frames"] = positives;
      if (positives == 0 || positives == labels[vi].size()) {
        vj["c_statistic"] = nullptr;
        views[std::string(view_name(v))] = vj;
        continue;
      }
      const auto roc = roc_curve(scores[vi], labels[vi]);
      const std::string roc_file = "roc_" + std::string(task_name(task)) + "_" + std::string(view_name(v)) + ".csv";
      write_text_file(out_dir / roc_file, roc_to_csv(roc));
      std::vector<double> pos, neg;
      for (std::size_t i = 0; i < labels[vi].size(); ++i) (labels[vi][i] ? pos : neg).push_back(scores[vi][i]);
      vj["c_statistic"] = c_statistic(scores[vi], labels[vi]);
      vj["auc_trapezoid"] = roc.auc;
      vj["roc_csv"] = roc_file;
      vj["mann_whitney"] = embed(to_json(mann_whitney_u(pos, neg)));
      views[std::string(view_name(v))] = vj;
    }
    tasks[std::string(task_name(task))] = views;
  }
  if (tasks.empty()) throw Error(ErrorCode::NoPredictions, "prediction file holds no rows");
  ordered_json j;
  j["kind"] = "lesion";
  j["tasks"] = tasks;
  return j;
}

ordered_json evaluate_jaccard(const StudyManifest& manifest, const fs::path& manifest_path,
                              const fs::path& predicted_path, const fs::path& out_dir) {
  const auto predicted = load_manifest(predicted_path);
  std::map<std::pair<MaskSchema, std::uint8_t>, std::vector<double>> values;
  std::string table = "study_id,frame_id,schema,label,jaccard\n";
  for (const auto& s : manifest.studies) {
    const auto* ps = predicted.find(s.study_id);
    if (!ps) continue;
    for (const auto& f : s.frames) {
      const FrameRecord* pf = nullptr;
      for (const auto& cand : ps->frames)
        if (cand.frame_id == f.frame_id) pf = &cand;
      if (!pf) continue;
      for (auto schema : kAllSchemas) {
        if (!f.mask_path(schema) || !pf->mask_path(schema)) continue;
        const auto truth = load_mask(resolve_manifest_path(manifest_path, *f.mask_path(schema)), schema);
        const auto pred = load_mask(resolve_manifest_path(predicted_path, *pf->mask_path(schema)), schema);
        for (const auto& [label, jac] : jaccard_index(pred, truth)) {
          if (label == 0 || !jac) continue;
          values[{schema, label}].push_back(*jac);
          table += s.study_id + ',' + f.frame_id + ',' + std::string(schema_name(schema)) + ',' +
                   std::string(label_name(schema, label)) + ',' + fmt_double(*jac) + '\n';
        }
      }
    }
  }
  write_text_file(out_dir / "jaccard.csv", table);
  ordered_json j;
  for (auto& [key, v] : values) {
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    const std::size_t n = v.size();
    const double median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    j[std::string(schema_name(key.first))][std::string(label_name(key.first, key.second))] = {
        {"n", n}, {"mean", sum / static_cast<double>(n)}, {"median", median}, {"min", v.front()}, {"max", v.back()}};
  }
  return j;
}

ordered_json compare_measurements(const StudyManifest& manifest, const fs::path& summary_path) {
  const auto text = read_text_file(summary_path);
  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::vector<std::string> fields;
    std::size_t a = start;
    while (true) {
      const auto comma = text.find(',', a);
      if (comma == std::string::npos || comma > end) {
        fields.push_back(text.substr(a, end - a));
        break;
      }
      fields.push_back(text.substr(a, comma - a));
      a = comma + 1;
    }
    rows.push_back(std::move(fields));
    start = end + 1;
  }
  if (rows.empty() || rows.front().size() < 7 || rows.front()[0] != "study_id")
    throw Error(ErrorCode::MalformedFile, summary_path.string() + " is not a measurement summary");
  const auto& header = rows.front();

  ordered_json j;
  for (std::size_t col = 1; col < 7; ++col) {
    std::map<LesionClass, std::vector<double>> groups;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != header.size() || rows[r][col].empty()) continue;
      const auto* study = manifest.find(rows[r][0]);
      if (!study) continue;
      groups[study->lesion].push_back(std::stod(rows[r][col]));
    }
    ordered_json metric;
    for (auto lesion : {LesionClass::Tof, LesionClass::Hlhs}) {
      const auto& a = groups[LesionClass::Normal];
      const auto& b = groups[lesion];
      if (a.empty() || b.empty()) continue;
      metric["normal_vs_" + std::string(lesion_name(lesion))] = embed(to_json(mann_whitney_u(a, b)));
    }
    j[header[col]] = metric.empty() ? ordered_json::object() : metric;
  }
  return j;
}

}  // namespace

int cmd_evaluate(const EvaluateArgs& args, const Context& ctx) {
  if (!args.predictions && !args.predicted_manifest && !args.measurements)
    throw Error(ErrorCode::InvalidArgument, "give --predictions, --predicted-manifest or --measurements");
  const auto full = load_manifest(args.manifest);
  const std::optional<SplitFile> split = args.split ? std::optional(load_split(*args.split)) : std::nullopt;
  const auto manifest = restrict_to(full, split, args.subset);
  ensure_dir(ctx.out);

  ordered_json metrics;
  metrics["studies"] = manifest.studies.size();
  if (args.predictions) {
    const auto text = read_text_file(*args.predictions);
    const auto header = text.substr(0, text.find_first_of("\r\n"));
    // Rows of known studies outside the chosen subset are ignored, unknown studies are not.
    auto keep = [&](const auto& row) { return manifest.find(row.study_id) || !full.find(row.study_id); };
    if (header == kViewCsvHeader) {
      auto rows = parse_view_predictions(text);
      std::erase_if(rows, [&](const auto& r) { return !keep(r); });
      metrics["predictions"] = evaluate_views(manifest, rows);
    } else if (header == kLesionCsvHeader) {
      auto rows = parse_lesion_predictions(text);
      std::erase_if(rows, [&](const auto& r) { return !keep(r); });
      metrics["predictions"] = evaluate_lesions(manifest, rows, ctx.out);
    } else {
      throw Error(ErrorCode::MalformedFile, args.predictions->string() + " has an unknown header");
    }
  }
  if (args.predicted_manifest)
    metrics["jaccard"] = evaluate_jaccard(manifest, args.manifest, *args.predicted_manifest, ctx.out);
  if (args.measurements) metrics["mann_whitney"] = compare_measurements(manifest, *args.measurements);

  write_text_file(ctx.out / "metrics.json", metrics.dump(2) + "\n");
  ctx.out_s() << (ctx.out / "metrics.json").string() << '\n';
  if (metrics.contains("predictions") && metrics["predictions"]["kind"] == "view")
    ctx.err_s() << "view F-score (macro) " << metrics["predictions"]["f_score_macro"]["value"].get<double>() << '\n';
  return 0;
}

}  // namespace fetalscreen::cli

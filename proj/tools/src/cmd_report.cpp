#include <algorithm>

#include "commands.hpp"
#include "json.hpp"

namespace fetalscreen::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string cell(const ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return fmt_double(v.get<double>());
  if (v.is_number()) return std::to_string(v.get<long long>());
  return v.get<std::string>();
}

ordered_json parse_file(const fs::path& path) {
  try {
    return ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
  }
}

}  // namespace

int cmd_report(const ReportArgs& args, const Context& ctx) {
  std::vector<fs::path> diagnoses, metrics;
  for (const auto& dir : args.inputs) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::IoFailure, dir.string() + " is not a directory");
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      if (name.starts_with("diagnosis_") && name.ends_with(".json")) diagnoses.push_back(entry.path());
      if (name == "metrics.json") metrics.push_back(entry.path());
    }
  }
  std::sort(diagnoses.begin(), diagnoses.end());
  std::sort(metrics.begin(), metrics.end());
  if (diagnoses.empty() && metrics.empty())
    throw Error(ErrorCode::NoPredictions, "no diagnosis_*.json or metrics.json in the given directories");

  std::string rates = "task,tp,fn,tn,fp,sensitivity,specificity,accuracy,ppv,npv\n";
  std::string cstats = "task,view,selection_c,test_c,selected\n";
  std::string decisions = "task,study_id,lesion,bitstring,score,decision,low_confidence\n";
  ordered_json summary;
  summary["tasks"] = ordered_json::object();
  for (const auto& path : diagnoses) {
    const auto j = parse_file(path);
    const auto task = j.at("task").get<std::string>();
    const auto& r = j.at("rates");
    rates += task;
    for (const char* key : {"tp", "fn", "tn", "fp", "sensitivity", "specificity", "accuracy", "ppv", "npv"})
      rates += ',' + cell(r.at(key));
    rates += '\n';
    const auto& selected = j.at("selected_views");
    for (auto v : kAllViews) {
      const std::string name(view_name(v));
      const bool on = std::find(selected.begin(), selected.end(), name) != selected.end();
      cstats += task + ',' + name + ',' + cell(j.at("selection_c_stats").at(name)) + ',' +
                cell(j.at("test_c_stats").at(name)) + ',' + (on ? "true" : "false") + '\n';
    }
    for (const auto& s : j.at("studies"))
      decisions += task + ',' + cell(s.at("study_id")) + ',' + cell(s.at("lesion")) + ',' + cell(s.at("bitstring")) + ',' +
                   cell(s.at("score")) + ',' + cell(s.at("decision")) + ',' + cell(s.at("low_confidence")) + '\n';
    summary["tasks"][task] = {{"selected_views", selected},
                              {"sensitivity", r.at("sensitivity")},
                              {"specificity", r.at("specificity")}};
  }

  std::string fscores = "source,class,precision,recall,f1,support\n";
  for (const auto& path : metrics) {
    const auto j = parse_file(path);
    if (!j.contains("predictions") || j["predictions"].at("kind") != "view") continue;
    const auto& f = j["predictions"].at("f_score_macro");
    const auto source = path.parent_path().filename().string();
    for (const auto& c : f.at("per_class"))
      fscores += source + ',' + cell(c.at("class")) + ',' + cell(c.at("precision")) + ',' + cell(c.at("recall")) + ',' +
                 cell(c.at("f1")) + ',' + cell(c.at("support")) + '\n';
    fscores += source + ",macro,,," + cell(f.at("value")) + ",\n";
    summary["view_f_score"][source] = f.at("value");
  }

  ensure_dir(ctx.out);
  write_text_file(ctx.out / "rates.csv", rates);
  write_text_file(ctx.out / "view_c_statistics.csv", cstats);
  write_text_file(ctx.out / "decisions.csv", decisions);
  write_text_file(ctx.out / "view_f_scores.csv", fscores);
  write_text_file(ctx.out / "report.json", summary.dump(2) + "\n");
  for (const char* name : {"rates.csv", "view_c_statistics.csv", "decisions.csv", "view_f_scores.csv", "report.json"})
    ctx.out_s() << (ctx.out / name).string() << '\n';
  return 0;
}

}  // namespace fetalscreen::cli

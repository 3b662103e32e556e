#include "commands.hpp"

namespace fetalscreen::cli {

int cmd_diagnose(const DiagnoseArgs& args, const Context& ctx) {
  const auto full = load_manifest(args.manifest);
  const std::optional<SplitFile> split = args.split ? std::optional(load_split(*args.split)) : std::nullopt;
  const std::string part = args.subset == "auto" ? (split ? "test" : "all") : args.subset;
  const auto decided = restrict_to(full, split, part);
  const auto sets = import_predictions(args.predictions);

  std::optional<ViewCStats> explicit_c;
  if (!args.c_stats.empty()) {
    if (args.c_stats.size() != kViewCount) throw Error(ErrorCode::InvalidArgument, "--c-stats needs five values");
    explicit_c.emplace();
    for (std::size_t v = 0; v < kViewCount; ++v) (*explicit_c)[v] = args.c_stats[v];
  } else if (!split) {
    throw Error(ErrorCode::InvalidArgument, "give --split (calibration studies) or --c-stats");
  }

  std::vector<DiagnosticTask> tasks;
  if (!args.tasks.empty()) {
    for (const auto& t : args.tasks) tasks.push_back(parse_task(t));
  } else {
    for (auto t : kAllTasks)
      for (const auto& s : sets)
        if (s.task == t) {
          tasks.push_back(t);
          break;
        }
  }
  if (tasks.empty()) throw Error(ErrorCode::NoPredictions, "prediction file holds no rows");

  TaskConfig config;
  config.bit_threshold = args.bit_threshold;
  config.c_stat_cutoff = args.cutoff;
  config.score_threshold = args.score_threshold;

  ensure_dir(ctx.out);
  for (auto task : tasks) {
    CStatSource source;
    if (explicit_c) {
      source.values = explicit_c;
    } else {
      for (const auto& s : sets) {
        const auto* study = full.find(s.study_id);
        if (s.task != task || !study || !split->calibration.count(s.study_id)) continue;
        source.calibration.push_back(s);
        source.calibration_lesions[s.study_id] = study->lesion;
      }
    }
    std::vector<ViewPredictionSet> to_decide;
    for (const auto& s : sets)
      if (s.task == task && decided.find(s.study_id)) to_decide.push_back(s);

    const auto report = run_task(decided, to_decide, task, source, config);
    const auto path = ctx.out / ("diagnosis_" + std::string(task_name(task)) + ".json");
    write_text_file(path, task_report_to_json(report));
    ctx.out_s() << path.string() << '\n';

    std::string selected;
    for (auto v : report.selected) selected += (selected.empty() ? "" : ",") + std::string(view_name(v));
    auto pct = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string("undefined"); };
    ctx.err_s() << task_name(task) << ": views {" << selected << "} sensitivity " << pct(report.rates.sensitivity)
                << " specificity " << pct(report.rates.specificity) << '\n';
  }
  return 0;
}

}  // namespace fetalscreen::cli

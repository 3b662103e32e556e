#include <algorithm>
#include <map>

#include "commands.hpp"
#include "fetalscreen/parallel.hpp"

namespace fetalscreen::cli {

namespace {

struct FramePrediction {
  std::optional<std::array<double, kViewCount>> view_probs;
  ViewLabel routed = ViewLabel::ThreeVT;
  std::vector<std::pair<DiagnosticTask, double>> lesion;
};

}  // namespace

int cmd_predict(const PredictArgs& args, const Context& ctx) {
  const auto full = load_manifest(args.manifest);
  const std::optional<SplitFile> split = args.split ? std::optional(load_split(*args.split)) : std::nullopt;
  const auto manifest = restrict_to(full, split, args.subset);

  std::optional<ModelParams> view_model;
  std::map<std::pair<DiagnosticTask, ViewLabel>, ModelParams> lesion_models;
  for (const auto& dir : args.models) {
    for (const auto& entry : load_model_index(dir / "models.json")) {
      auto model = load_model(dir / entry.file);
      if (entry.task == "view") {
        if (view_model) throw Error(ErrorCode::InvalidArgument, "more than one view model given");
        if (model.class_count() != kViewCount) throw Error(ErrorCode::InvalidArgument, "view model must have five classes");
        view_model = std::move(model);
        continue;
      }
      if (!entry.view) throw Error(ErrorCode::MalformedFile, "lesion model '" + entry.name + "' names no view");
      if (model.class_count() != 2) throw Error(ErrorCode::InvalidArgument, "lesion model '" + entry.name + "' is not binary");
      const auto key = std::make_pair(parse_task(entry.task), *entry.view);
      if (!lesion_models.emplace(key, std::move(model)).second)
        throw Error(ErrorCode::InvalidArgument, "two models for " + entry.name);
    }
  }
  if (!view_model && lesion_models.empty()) throw Error(ErrorCode::InvalidArgument, "no models found");

  bool route_predicted = false;
  if (args.route == "predicted") {
    if (!view_model) throw Error(ErrorCode::InvalidArgument, "--route predicted needs a view model");
    route_predicted = true;
  } else if (args.route == "auto") {
    route_predicted = view_model.has_value();
  } else if (args.route != "recorded") {
    throw Error(ErrorCode::InvalidArgument, "--route must be auto, recorded or predicted");
  }

  std::vector<FrameRef> refs;
  for (const auto& s : manifest.studies)
    for (const auto& f : s.frames) refs.push_back({&s, &f});
  const auto images = load_preprocessed(args.manifest, refs, ctx.threads);

  std::vector<FramePrediction> preds(refs.size());
  parallel_for(static_cast<int>(refs.size()), ctx.threads, [&](int i) {
    auto& p = preds[static_cast<std::size_t>(i)];
    const auto& image = images[static_cast<std::size_t>(i)];
    p.routed = refs[static_cast<std::size_t>(i)].frame->view;
    if (view_model) {
      const auto probs = predict(*view_model, image);
      p.view_probs.emplace();
      std::copy(probs.begin(), probs.end(), p.view_probs->begin());
      if (route_predicted)
        p.routed = kAllViews[static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin())];
    }
    for (auto task : kAllTasks) {
      const auto it = lesion_models.find({task, p.routed});
      if (it != lesion_models.end()) p.lesion.emplace_back(task, predict(it->second, image)[1]);
    }
  });

  ensure_dir(ctx.out);
  if (view_model) {
    std::vector<ViewPredictionRow> rows;
    for (std::size_t i = 0; i < refs.size(); ++i)
      rows.push_back({refs[i].study->study_id, refs[i].frame->frame_id, refs[i].frame->view, *preds[i].view_probs});
    write_text_file(ctx.out / "view_predictions.csv", view_predictions_csv(rows));
    ctx.out_s() << (ctx.out / "view_predictions.csv").string() << '\n';
  }
  if (!lesion_models.empty()) {
    std::vector<LesionPredictionRow> rows;
    for (std::size_t i = 0; i < refs.size(); ++i)
      for (const auto& [task, p] : preds[i].lesion)
        rows.push_back({refs[i].study->study_id, refs[i].frame->frame_id, preds[i].routed, task, p});
    write_text_file(ctx.out / "lesion_predictions.csv", lesion_predictions_csv(rows));
    ctx.out_s() << (ctx.out / "lesion_predictions.csv").string() << '\n';
  }
  ctx.err_s() << "predicted " << refs.size() << " frames\n";
  return 0;
}

}  // namespace fetalscreen::cli

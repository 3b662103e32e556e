#include "commands.hpp"
#include "fetalscreen/random.hpp"

namespace fetalscreen::cli {

namespace {

struct Job {
  std::string name;
  std::string task;
  std::optional<ViewLabel> view;
  std::vector<std::string> classes;
  std::vector<FrameRef> frames;
  std::vector<int> labels;
};

std::string positive_class(DiagnosticTask task) {
  return task == DiagnosticTask::NormalVsEither ? "chd" : std::string(task_name(task));
}

std::string loss_csv(const std::vector<double>& history) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < history.size(); ++e) out += std::to_string(e + 1) + ',' + fmt_double(history[e]) + '\n';
  return out;
}

}  // namespace

int cmd_train(const TrainArgs& args, const Context& ctx) {
  const auto manifest = load_manifest(args.manifest);
  const auto split = args.split.split ? load_split(*args.split.split)
                                      : make_split(manifest, args.split.ratio, args.split.calibration_ratio, ctx.seed);
  const auto arch = parse_architecture(args.arch);

  std::vector<Job> jobs;
  if (args.task == "view") {
    Job job{"view", "view", std::nullopt, {}, {}, {}};
    for (auto v : kAllViews) job.classes.emplace_back(view_name(v));
    for (const auto& s : manifest.studies) {
      if (!split.train.count(s.study_id)) continue;
      for (const auto& f : s.frames) {
        job.frames.push_back({&s, &f});
        job.labels.push_back(static_cast<int>(view_index(f.view)));
      }
    }
    jobs.push_back(std::move(job));
  } else {
    const auto task = parse_task(args.task);
    for (const auto& vname : args.views) {
      const auto view = parse_view(vname);
      Job job{std::string(task_name(task)) + "_" + std::string(view_name(view)), std::string(task_name(task)), view,
              {"normal", positive_class(task)}, {}, {}};
      for (const auto& s : manifest.studies) {
        if (!split.fit.count(s.study_id) || !task_includes(task, s.lesion)) continue;
        for (const auto& f : s.frames) {
          if (f.view != view) continue;
          job.frames.push_back({&s, &f});
          job.labels.push_back(task_positive(task, s.lesion) ? 1 : 0);
        }
      }
      jobs.push_back(std::move(job));
    }
  }

  ensure_dir(ctx.out / "models");
  ensure_dir(ctx.out / "loss");
  save_split(split, ctx.out / "split.json");

  std::vector<ModelEntry> index;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto& job = jobs[j];
    TrainingSet data;
    data.images = load_preprocessed(args.manifest, job.frames, ctx.threads);
    data.labels = job.labels;
    data.classes = job.classes;
    const std::uint64_t stream = job.view ? view_index(*job.view) : 0x71E;
    if (args.shuffle_labels) {
      Rng rng(derive_seed(ctx.seed, {0x5F1, stream}));
      rng.shuffle(std::span<int>(data.labels));
    }

    TrainConfig config;
    config.learning_rate = args.lr;
    config.batch_size = args.batch;
    config.epochs = args.epochs;
    config.l2 = args.l2;
    config.momentum = args.momentum;
    config.class_balanced = !args.no_balance;
    config.hidden = args.hidden;
    config.seed = derive_seed(ctx.seed, {0x7A1, stream});
    if (args.augment) {
      AugmentationConfig aug;
      aug.seed = derive_seed(config.seed, {0xA06});
      config.augmentation = aug;
    }

    const auto result = train(data, arch, config);
    const std::string file = "models/" + job.name + ".fsmodel";
    save_model(result.model, ctx.out / file);
    write_text_file(ctx.out / "loss" / (job.name + ".csv"), loss_csv(result.loss_history));
    index.push_back({job.name, job.task, job.view, file, job.frames.size()});
    ctx.err_s() << "trained " << job.name << " on " << job.frames.size() << " frames, final loss "
                << result.loss_history.back() << '\n';
  }
  save_model_index(index, ctx.out / "models.json");
  ctx.out_s() << (ctx.out / "models.json").string() << '\n';
  return 0;
}

}  // namespace fetalscreen::cli

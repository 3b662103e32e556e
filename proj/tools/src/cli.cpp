#include "fetalscreen/cli.hpp"

#include <functional>

#include "CLI11.hpp"
#include "commands.hpp"
#include "json.hpp"

namespace fetalscreen::cli {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return kBadArguments;
    case ErrorCode::IoFailure:
    case ErrorCode::MalformedFile: return kIoFailure;
    default: return kValidationFailure;
  }
}

std::string_view version() { return FETALSCREEN_VERSION; }

namespace {

using ordered_json = nlohmann::ordered_json;

bool skipped(const CLI::Option* opt) {
  const auto& name = opt->get_single_name();
  return name == "help" || name == "config" || name == "version";
}

// Every option of the root and the chosen subcommand with the value it ended
// up with (flag, config file or default).
ordered_json resolved_config(const CLI::App& root, const CLI::App& sub) {
  ordered_json j;
  for (const CLI::App* app : {&root, &sub}) {
    for (const auto* opt : app->get_options()) {
      if (skipped(opt) || opt->get_single_name().empty()) continue;
      ordered_json value;
      const bool flag = opt->get_expected_max() == 0;
      const bool list = opt->get_expected_max() > 1;
      if (flag) {
        value = opt->count() > 0;
      } else if (opt->count() > 0) {
        const auto& results = opt->results();
        if (list) {
          value = ordered_json::array();
          for (const auto& r : results) value.push_back(r);
        } else {
          value = results.back();
        }
      } else {
        auto d = opt->get_default_str();
        if (d.empty()) {
          value = nullptr;
        } else if (list) {
          // Defaults of list options are captured as "[a,b,c]".
          if (d.front() == '[' && d.back() == ']') d = d.substr(1, d.size() - 2);
          value = ordered_json::array();
          for (const auto& item : split_list(d)) value.push_back(item);
        } else {
          value = d;
        }
      }
      j[opt->get_single_name()] = value;
    }
  }
  return j;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic fetal cardiac screening pipeline on synthetic or external data", "fetalscreen"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "INI/TOML file of option values; command-line flags win");
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx;
  ctx.out_stream = &out;
  ctx.err_stream = &err;
  std::string out_dir;
  app.add_option("--seed", ctx.seed, "Global seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", ctx.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::function<int()> action;

  PhantomArgs phantom;
  auto* ph = app.add_subcommand("phantom", "Generate a synthetic corpus");
  ph->add_option("--kind", phantom.kind, "views | biometric")->check(CLI::IsMember({"views", "biometric"}));
  ph->add_option("--studies", phantom.studies, "Number of studies")->required()->check(CLI::PositiveNumber);
  ph->add_option("--noise", phantom.noise, "Image speckle level in [0, 1]")->check(CLI::Range(0.0, 1.0));
  ph->add_option("--frames-per-view", phantom.frames_per_view, "Frames per non-A4C view (views)");
  ph->add_option("--cine-frames", phantom.cine_frames, "A4C frames per study (views)");
  ph->add_option("--cine-period", phantom.cine_period, "A4C cycle length in frames (views)");
  ph->add_option("--severity", phantom.severity, "Lesion distortion strength (views)");
  ph->add_option("--mix", phantom.mix, "normal,tof,hlhs fractions (views)")->delimiter(',')->expected(3);
  ph->add_flag("--no-masks", phantom.no_masks, "Skip A4C masks (views)");
  ph->add_option("--frames", phantom.frames, "Frames per study (biometric; default 3 cycles)");
  ph->add_option("--predicted-jaccard", phantom.predicted_jaccard, "Also write perturbed masks at this Jaccard")
      ->check(CLI::Range(0.0, 1.0));
  ph->add_flag("--no-images", phantom.no_images, "Masks only (biometric)");
  ph->add_option("--ctr-range", phantom.ctr_range, "lo,hi")->delimiter(',')->expected(2);
  ph->add_option("--ca-range", phantom.ca_range, "lo,hi in degrees")->delimiter(',')->expected(2);
  ph->add_option("--fac-range", phantom.fac_range, "lo,hi")->delimiter(',')->expected(2);
  ph->callback([&] { action = [&] { return cmd_phantom(phantom, ctx); }; });

  MeasureArgs measure;
  auto* me = app.add_subcommand("measure", "CTR, cardiac axis, FAC and cycle from masks");
  me->add_option("--manifest", measure.manifest, "Manifest with mask paths")->required();
  me->add_option("--schemas", measure.schemas, "Mask schemas to load")
      ->delimiter(',')
      ->check(CLI::IsMember({"axis", "ctr", "chambers"}));
  me->add_option("--containment", measure.containment, "Heart fraction required inside the thorax")
      ->check(CLI::Range(0.0, 1.0));
  me->callback([&] { action = [&] { return cmd_measure(measure, ctx); }; });

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "Train a view classifier or per-view lesion classifiers");
  tr->add_option("--manifest", train.manifest, "Training corpus manifest")->required();
  tr->add_option("--task", train.task, "view | tof | hlhs | either")
      ->check(CLI::IsMember({"view", "tof", "hlhs", "either"}));
  tr->add_option("--arch", train.arch, "linear | hidden")->check(CLI::IsMember({"linear", "hidden"}));
  tr->add_option("--hidden", train.hidden, "Hidden width")->check(CLI::PositiveNumber);
  tr->add_option("--epochs", train.epochs, "Epochs")->check(CLI::PositiveNumber);
  tr->add_option("--lr", train.lr, "Learning rate")->check(CLI::PositiveNumber);
  tr->add_option("--batch", train.batch, "Minibatch size")->check(CLI::PositiveNumber);
  tr->add_option("--l2", train.l2, "L2 penalty on weights")->check(CLI::NonNegativeNumber);
  tr->add_option("--momentum", train.momentum, "SGD momentum")->check(CLI::Range(0.0, 0.999));
  tr->add_flag("--no-balance", train.no_balance, "Sample uniformly instead of per class");
  tr->add_flag("--augment", train.augment, "Random affine augmentation");
  tr->add_flag("--shuffle-labels", train.shuffle_labels, "Chance control: permute training labels");
  tr->add_option("--views", train.views, "Views to train lesion models for")
      ->delimiter(',')
      ->check(CLI::IsMember({"3vt", "3vv", "a5c", "a4c", "abdo"}));
  tr->add_option("--split", train.split.split, "Reuse an existing split.json");
  tr->add_option("--split-ratio", train.split.ratio, "Train share of studies")->check(CLI::Range(0.0, 1.0));
  tr->add_option("--calibration-ratio", train.split.calibration_ratio, "Share of train held out for C-statistics")
      ->check(CLI::Range(0.0, 1.0));
  tr->callback([&] { action = [&] { return cmd_train(train, ctx); }; });

  PredictArgs predict_args;
  auto* pr = app.add_subcommand("predict", "Per-frame view and lesion probabilities");
  pr->add_option("--manifest", predict_args.manifest, "Corpus manifest")->required();
  pr->add_option("--models", predict_args.models, "Directories written by train")->required();
  pr->add_option("--route", predict_args.route, "Which view picks the lesion model: auto | recorded | predicted")
      ->check(CLI::IsMember({"auto", "recorded", "predicted"}));
  pr->add_option("--split", predict_args.split, "split.json for --subset");
  pr->add_option("--subset", predict_args.subset, "all | train | test | fit | calibration")
      ->check(CLI::IsMember({"all", "train", "test", "fit", "calibration"}));
  pr->callback([&] { action = [&] { return cmd_predict(predict_args, ctx); }; });

  EvaluateArgs evaluate;
  auto* ev = app.add_subcommand("evaluate", "F-scores, ROC, Jaccard and Mann-Whitney comparisons");
  ev->add_option("--manifest", evaluate.manifest, "Ground-truth manifest")->required();
  ev->add_option("--predictions", evaluate.predictions, "View or lesion prediction CSV");
  ev->add_option("--predicted-manifest", evaluate.predicted_manifest, "Manifest of predicted masks");
  ev->add_option("--measurements", evaluate.measurements, "summary.csv from measure");
  ev->add_option("--split", evaluate.split, "split.json for --subset");
  ev->add_option("--subset", evaluate.subset, "all | train | test | fit | calibration")
      ->check(CLI::IsMember({"all", "train", "test", "fit", "calibration"}));
  ev->callback([&] { action = [&] { return cmd_evaluate(evaluate, ctx); }; });

  DiagnoseArgs diagnose;
  auto* di = app.add_subcommand("diagnose", "Composite per-study decisions");
  di->add_option("--manifest", diagnose.manifest, "Corpus manifest with lesion labels")->required();
  di->add_option("--predictions", diagnose.predictions, "Lesion prediction CSV")->required();
  di->add_option("--split", diagnose.split, "split.json; its calibration part yields the C-statistics");
  di->add_option("--subset", diagnose.subset, "Studies to decide: auto | all | train | test | fit | calibration")
      ->check(CLI::IsMember({"auto", "all", "train", "test", "fit", "calibration"}));
  di->add_option("--tasks", diagnose.tasks, "tof,hlhs,either (default: those present)")
      ->delimiter(',')
      ->check(CLI::IsMember({"tof", "hlhs", "either"}));
  di->add_option("--c-stats", diagnose.c_stats, "Explicit per-view C-statistics 3vt,3vv,a5c,a4c,abdo")
      ->delimiter(',')
      ->expected(5);
  di->add_option("--bit-threshold", diagnose.bit_threshold, "Mean probability that sets a view bit")
      ->check(CLI::Range(0.0, 1.0));
  di->add_option("--cutoff", diagnose.cutoff, "Views need a C-statistic above this")->check(CLI::Range(0.0, 1.0));
  di->add_option("--score-threshold", diagnose.score_threshold, "Abnormal selected views needed for CHD")
      ->check(CLI::NonNegativeNumber);
  di->callback([&] { action = [&] { return cmd_diagnose(diagnose, ctx); }; });

  ReportArgs report;
  auto* re = app.add_subcommand("report", "Plot-ready CSV tables from evaluate and diagnose outputs");
  re->add_option("--in", report.inputs, "Directories to collect")->required();
  re->callback([&] { action = [&] { return cmd_report(report, ctx); }; });

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kBadArguments;
  }

  if (out_dir.empty()) {
    err << "error: --out is required\n" << app.get_subcommands().front()->help();
    return kBadArguments;
  }
  ctx.out = out_dir;

  try {
    const int code = action();
    if (code != kOk) return code;
    ordered_json run;
    run["tool"] = "fetalscreen";
    run["version"] = version();
    run["command"] = app.get_subcommands().front()->get_name();
    run["config"] = resolved_config(app, *app.get_subcommands().front());
    write_text_file(ctx.out / "run.json", run.dump(2) + "\n");
    return kOk;
  } catch (const Error& e) {
    err << "error: " << error_code_name(e.code()) << ": " << e.detail() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
}

}  // namespace fetalscreen::cli

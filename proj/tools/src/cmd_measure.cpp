#include <algorithm>
#include <cctype>

#include "commands.hpp"
#include "fetalscreen/biometrics.hpp"
#include "fetalscreen/parallel.hpp"

namespace fetalscreen::cli {

namespace {

struct StudyOutcome {
  std::string status = "ok";
  std::optional<BiometricReport> report;
};

StudyOutcome measure_one(const StudyRecord& study, const fs::path& manifest_path, const std::vector<MaskSchema>& schemas,
                         const MeasureConfig& config) {
  std::vector<FrameMasks> frames;
  try {
    for (const auto& f : study.frames) {
      FrameMasks fm;
      bool any = false;
      for (auto schema : schemas) {
        const auto& rel = f.mask_path(schema);
        if (!rel) continue;
        auto mask = load_mask(resolve_manifest_path(manifest_path, *rel), schema);
        any = true;
        switch (schema) {
          case MaskSchema::Axis: fm.axis = std::move(mask); break;
          case MaskSchema::Cardiothoracic: fm.ctr = std::move(mask); break;
          case MaskSchema::Chambers: fm.chambers = std::move(mask); break;
        }
      }
      if (any) frames.push_back(std::move(fm));
    }
    if (frames.empty()) return {"no masks", std::nullopt};
    auto report = measure_study(frames, config);
    report.study_id = study.study_id;
    return {"ok", std::move(report)};
  } catch (const Error& e) {
    return {"error: " + std::string(error_code_name(e.code())) + ": " + e.detail(), std::nullopt};
  }
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int cmd_measure(const MeasureArgs& args, const Context& ctx) {
  std::vector<MaskSchema> schemas;
  for (auto name : args.schemas) {
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
    schemas.push_back(parse_schema(name));
  }
  MeasureConfig config;
  config.containment = args.containment;
  const auto manifest = load_manifest(args.manifest);

  std::vector<StudyOutcome> outcomes(manifest.studies.size());
  parallel_for(static_cast<int>(manifest.studies.size()), ctx.threads, [&](int i) {
    outcomes[static_cast<std::size_t>(i)] =
        measure_one(manifest.studies[static_cast<std::size_t>(i)], args.manifest, schemas, config);
  });

  ensure_dir(ctx.out / "reports");
  ensure_dir(ctx.out / "areas");
  std::string summary = "study_id,ctr,ca,fac_lv,fac_rv,fac_la,fac_ra,status\n";
  std::size_t ok = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& id = manifest.studies[i].study_id;
    const auto& o = outcomes[i];
    summary += id;
    if (o.report) {
      ++ok;
      const auto& r = *o.report;
      summary += ',' + fmt_optional(r.ctr.value) + ',' + fmt_optional(r.ca_degrees.value);
      for (const auto& f : r.fac) summary += ',' + fmt_optional(f.value);
      write_text_file(ctx.out / "reports" / (id + ".json"), report_to_json(r));
      for (const auto& series : r.area_series)
        write_text_file(ctx.out / "areas" / (id + "_" + std::string(label_name(MaskSchema::Chambers, series.chamber)) + ".csv"),
                        area_series_csv(series));
    } else {
      summary += ",,,,,,";
    }
    summary += ',' + csv_safe(o.status) + '\n';
    if (o.status != "ok") ctx.err_s() << id << ": " << o.status << '\n';
  }
  write_text_file(ctx.out / "summary.csv", summary);
  ctx.out_s() << (ctx.out / "summary.csv").string() << '\n';
  ctx.err_s() << "measured " << ok << " of " << outcomes.size() << " studies\n";
  return 0;
}

}  // namespace fetalscreen::cli

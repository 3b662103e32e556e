#include "commands.hpp"
#include "fetalscreen/view_dataset.hpp"

namespace fetalscreen::cli {

namespace {

std::pair<double, double> range_of(const std::vector<double>& v, const char* name) {
  if (v.size() != 2 || !(v[0] <= v[1]))
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " needs two values lo <= hi");
  return {v[0], v[1]};
}

}  // namespace

int cmd_phantom(const PhantomArgs& args, const Context& ctx) {
  if (args.studies < 1) throw Error(ErrorCode::InvalidArgument, "--studies must be at least 1");
  ensure_dir(ctx.out);

  if (args.kind == "views") {
    ViewMotifParams motifs;
    motifs.frames_per_view = args.frames_per_view;
    motifs.cine_frames = args.cine_frames;
    motifs.cine_period = args.cine_period;
    motifs.noise_level = args.noise;
    motifs.lesion_severity = args.severity;
    motifs.write_masks = !args.no_masks;
    if (args.mix.size() != 3) throw Error(ErrorCode::InvalidArgument, "--mix needs three fractions");
    const LesionMix mix{args.mix[0], args.mix[1], args.mix[2]};
    const auto manifest = generate_view_dataset(args.studies, motifs, mix, ctx.seed, ctx.out, ctx.threads);
    ctx.out_s() << (ctx.out / "manifest.json").string() << '\n';
    ctx.err_s() << "wrote " << manifest.studies.size() << " studies, " << manifest.frame_count() << " frames\n";
    return 0;
  }
  if (args.kind == "biometric") {
    BiometricCorpusOptions options;
    options.ranges.noise_level = args.noise;
    std::tie(options.ranges.ctr_lo, options.ranges.ctr_hi) = range_of(args.ctr_range, "--ctr-range");
    std::tie(options.ranges.ca_lo, options.ranges.ca_hi) = range_of(args.ca_range, "--ca-range");
    std::tie(options.ranges.fac_lo, options.ranges.fac_hi) = range_of(args.fac_range, "--fac-range");
    options.n_frames = args.frames;
    options.write_images = !args.no_images;
    options.predicted_jaccard = args.predicted_jaccard;
    options.threads = ctx.threads;
    const auto manifest = generate_biometric_corpus(args.studies, ctx.seed, ctx.out, options);
    ctx.out_s() << (ctx.out / "manifest.json").string() << '\n';
    if (args.predicted_jaccard) ctx.out_s() << (ctx.out / "predicted_manifest.json").string() << '\n';
    ctx.err_s() << "wrote " << manifest.studies.size() << " biometric studies\n";
    return 0;
  }
  throw Error(ErrorCode::InvalidArgument, "--kind must be 'views' or 'biometric'");
}

}  // namespace fetalscreen::cli

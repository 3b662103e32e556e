#pragma once

// Synthetic screening corpora: five-view studies with lesion analogs, and
// biometric phantom series with exact masks.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fetalscreen/mask_model.hpp"
#include "fetalscreen/phantom.hpp"

namespace fetalscreen {

struct ViewMotifParams {
  int frames_per_view = 2;  // every view except A4C
  int cine_frames = 12;     // A4C frames per study
  int cine_period = 8;
  double noise_level = 0.0;
  double jitter_shift_px = 4.0;
  double jitter_rotation_deg = 6.0;
  double jitter_scale = 0.06;
  double frame_shift_px = 1.5;  // extra per-frame wobble
  double frame_rotation_deg = 2.0;
  double anatomy_variation = 0.08;  // relative size spread of normal structures
  double lesion_severity = 1.0;     // 0 renders lesion studies like normal ones
  bool write_masks = true;          // A4C masks in generate_view_dataset

  void validate() const;
  int frames_for(ViewLabel view) const { return view == ViewLabel::A4C ? cine_frames : frames_per_view; }
};

struct LesionMix {
  double normal = 0.72;
  double tof = 0.13;
  double hlhs = 0.15;

  void validate() const;
};

/// Largest-remainder apportionment of n studies (normal, tof, hlhs).
std::array<int, 3> apportion_lesions(int n, const LesionMix& mix);

struct StudyJitter {
  double dx = 0.0, dy = 0.0, rotation_deg = 0.0, scale = 1.0;
};

struct ViewStudyPlan {
  std::string study_id;
  LesionClass lesion = LesionClass::Normal;
  std::uint64_t seed = 0;
  StudyJitter jitter;
  std::array<double, 6> anatomy{};  // per-study size multipliers for normal variation
  PhantomParams a4c;
};

/// Deterministic plan for n studies; lesion labels are apportioned and then
/// shuffled. Throws INVALID_ARGUMENT (n < 2).
std::vector<ViewStudyPlan> plan_view_dataset(int n_studies, const ViewMotifParams& motifs, const LesionMix& mix,
                                             std::uint64_t seed);

/// 400x300 frame of the given view (frame < motifs.frames_for(view)).
GreyImage render_view_frame(const ViewStudyPlan& plan, const ViewMotifParams& motifs, ViewLabel view, int frame);

/// Writes `<out>/<study>/<view>_<k>.fsimg`, A4C masks, `truth.json` per study and
/// `<out>/manifest.json`. Throws IO_FAILURE.
StudyManifest generate_view_dataset(int n_studies, const ViewMotifParams& motifs, const LesionMix& mix,
                                    std::uint64_t seed, const std::filesystem::path& out_dir, int threads = 1);

struct PhantomDrawRanges {
  double ctr_lo = 0.40, ctr_hi = 0.70;
  double ca_lo = 25.0, ca_hi = 70.0;
  double fac_lo = 0.20, fac_hi = 0.60;
  double area_lo = 600.0, area_hi = 1000.0;
  int period_lo = 20, period_hi = 30;  // even periods only
  int cycles = 3;                      // n_frames = cycles * period
  double noise_level = 0.0;
};

/// Seeded phantom parameters; the same seed always gives the same draw.
PhantomParams draw_phantom_params(std::uint64_t seed, const PhantomDrawRanges& ranges = {});

struct BiometricCorpusOptions {
  PhantomDrawRanges ranges;
  std::optional<int> n_frames;  // overrides cycles * period
  bool write_images = true;
  /// When set, also writes perturbed masks and `predicted_manifest.json`.
  std::optional<double> predicted_jaccard;
  int threads = 1;
};

/// Biometric phantom studies (all frames A4C) with exact masks and truth.
/// Returns the manifest written to `<out>/manifest.json`.
StudyManifest generate_biometric_corpus(int n_studies, std::uint64_t seed, const std::filesystem::path& out_dir,
                                        const BiometricCorpusOptions& options = {});

/// Study id formatting shared by the generators, e.g. "S0007".
std::string study_id_for(int index, int n_studies);

}  // namespace fetalscreen

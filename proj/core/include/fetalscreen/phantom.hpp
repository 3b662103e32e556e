#pragma once

// Parametric four-chamber phantom: thorax, heart, spine and septum for the
// axis/CTR masks plus four pulsating chambers for the chamber masks.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fetalscreen/biometrics.hpp"
#include "fetalscreen/geometry.hpp"
#include "fetalscreen/mask_model.hpp"

namespace fetalscreen {

struct PhantomParams {
  double target_ctr = 0.52;
  double target_ca = 45.0;                                          // degrees
  std::array<double, 4> chamber_base_areas = {900, 850, 700, 650};  // LV, RV, LA, RA (px^2)
  std::array<double, 4> fac_targets = {0.45, 0.40, 0.35, 0.35};
  int period = 20;
  int n_frames = 60;
  double noise_level = 0.0;  // image speckle only; masks stay exact
  std::uint64_t seed = 0;

  int width = 400;
  int height = 300;
  double scale = 1.0;  // multiplies every body length
  double body_rotation_deg = 0.0;
  double offset_x = 0.0;  // body center relative to the raster center
  double offset_y = 0.0;
  bool render_images = true;

  /// Throws INVALID_ARGUMENT.
  void validate() const;
};

/// Raised-cosine area schedule: base at t = k*period, base*(1-fac) half a period later.
double chamber_area(double base, double fac, int period, double t);

struct PhantomTruth {
  double ctr = 0.0;
  double ca_degrees = 0.0;
  std::array<double, 4> chamber_base_areas{};
  std::array<double, 4> fac{};
  int period = 0;
  int n_frames = 0;
  /// Interior extrema at least a quarter period from either end of the series.
  std::vector<int> systole_frames;
  std::vector<int> diastole_frames;
  std::string motif = "a4c";

  double area(std::size_t chamber, double t) const;
};

struct PhantomStudy {
  std::vector<GreyImage> images;  // empty when render_images is false
  std::vector<FrameMasks> masks;  // axis, ctr and chambers on every frame
  PhantomTruth truth;
};

/// Throws INVALID_ARGUMENT or INFEASIBLE_GEOMETRY.
PhantomStudy generate_phantom_study(const PhantomParams& params);

/// One cine frame (t in [0, n_frames)); the study is deterministic per frame.
GreyImage render_phantom_frame(const PhantomParams& params, int frame);

PhantomTruth phantom_truth(const PhantomParams& params);
std::string truth_to_json(const PhantomTruth& truth);

}  // namespace fetalscreen

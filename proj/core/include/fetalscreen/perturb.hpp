#pragma once

#include <cstdint>

#include "fetalscreen/mask_model.hpp"

namespace fetalscreen {

struct PerturbOptions {
  double tolerance = 0.03;  // aim band around the target
  double accept = 0.05;     // final band; TARGET_UNREACHABLE outside it
  int max_rounds = 40;
};

/// Seeded boundary erosion/dilation per structure until every non-background
/// label present in `mask` has Jaccard (against `mask`) near `target_jaccard`.
/// Moves never split or create components. Target 1 returns a copy.
LabelMask perturb_mask(const LabelMask& mask, double target_jaccard, std::uint64_t seed,
                       const PerturbOptions& options = {});

}  // namespace fetalscreen

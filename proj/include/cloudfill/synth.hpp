#pragma once

#include "cloudfill/mask_ops.hpp"
#include "cloudfill/stack.hpp"

#include <cstdint>
#include <vector>

namespace cloudfill {

enum class CloudModel { RandomBlobs, StoredLibrary };

struct SynthSpec {
  std::uint64_t seed = 0;
  int rank = 3;
  int T = 24;
  int H = 64;
  int W = 64;
  int optical = 4;
  int sar = 2;
  double noise_sigma = 0.0;
  CloudModel cloud_model = CloudModel::RandomBlobs;
  double target_cloud_ratio = 0.5;
  /// 2-D day masks to draw from when cloud_model is StoredLibrary.
  std::vector<CloudMask> library;
};

/// A planted instance. `planted` is the exact rank-limited product U V^T in
/// double precision; `truth` is its float scene with all-clear masks and
/// `observed` adds noise, clamps to band ranges and applies the optical cloud
/// mask (SAR is fully observed).
struct SynthScene {
  Scene truth;
  Scene observed;
  CloudMask mask;
  RowMatrix planted;
  RowMatrix U;
  RowMatrix V;
};

/// Throws InfeasibleSpec for inconsistent dimensions, ranks or ratios.
void validate(const SynthSpec& spec);

SynthScene synth_scene(const SynthSpec& spec);

/// Union of seeded random ellipses per day, grown until each day is within
/// about 2% of the target ratio. target_ratio must be in [0, 0.99].
CloudMask synth_cloud_blobs(std::uint64_t seed, int H, int W, int T, double target_ratio);

}  // namespace cloudfill

#pragma once

#include <cstdint>
#include <vector>

namespace cloudfill {

/// Binary cloud mask over T x H x W (T == 1 for a single image); 1 = clear,
/// 0 = cloud or missing.
struct CloudMask {
  int T = 1;
  int H = 0;
  int W = 0;
  std::vector<std::uint8_t> grid;

  static CloudMask filled(int T, int H, int W, std::uint8_t value);

  std::size_t size() const noexcept { return grid.size(); }
  std::size_t slice_size() const noexcept { return static_cast<std::size_t>(H) * W; }
  std::uint8_t& at(int t, int h, int w) { return grid[(static_cast<std::size_t>(t) * H + h) * W + w]; }
  std::uint8_t at(int t, int h, int w) const { return grid[(static_cast<std::size_t>(t) * H + h) * W + w]; }
  bool same_shape(const CloudMask& o) const noexcept { return T == o.T && H == o.H && W == o.W; }

  /// Day t as a standalone 2-D mask.
  CloudMask day(int t) const;

  friend bool operator==(const CloudMask&, const CloudMask&) = default;
};

struct SyntheticHoldout {
  CloudMask original;
  CloudMask synthetic;
  CloudMask combined;  // original AND synthetic (union of clouds)
  CloudMask holdout;   // clear in original, cloudy in combined
};

SyntheticHoldout synthesize_holdout(const CloudMask& original, const CloudMask& sampled);

enum class Connectivity { Four, Eight };

/// Flips cloud regions smaller than min_size to clear, then clear regions
/// smaller than min_size to cloud, on the result of the first pass. Each day
/// slice is processed independently. A region covering its whole slice is left
/// alone since there is nothing to merge it into.
CloudMask filter_small_components(const CloudMask& mask, int min_size = 400,
                                  Connectivity connectivity = Connectivity::Four);

/// Fraction of cloudy (0) entries.
double cloud_ratio(const CloudMask& mask);

/// Builds a T-day mask by drawing day masks uniformly (with replacement) from
/// the library with a seeded generator. All library masks must be 2-D and
/// share H x W.
CloudMask sample_library_mask(const std::vector<CloudMask>& library, int T, int H, int W, std::uint64_t seed);

}  // namespace cloudfill

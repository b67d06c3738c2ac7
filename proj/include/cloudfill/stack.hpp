#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cloudfill {

/// Observation matrices are row-major so that the (C*T) x (H*W) matrix shares
/// its memory layout with the [t][c][h][w] scene tensor.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Modality { Optical, SAR, Index };

std::string_view to_string(Modality m) noexcept;
Modality modality_from_string(std::string_view s);

struct ValueRange {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  double clamp(double v) const noexcept { return v < lo ? lo : (v > hi ? hi : v); }
  friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

/// Optical reflectance lives in [0,1]; SAR backscatter and normalized-difference
/// indices live in [-1,1].
ValueRange default_range(Modality m) noexcept;

struct BandSpec {
  std::string name;
  Modality modality = Modality::Optical;
  ValueRange valid_range;

  friend bool operator==(const BandSpec&, const BandSpec&) = default;
};

BandSpec optical_band(std::string name);
BandSpec sar_band(std::string name);

/// Sentinel-2 style names for the first optical bands ("B2-Blue", "B4-Red",
/// "B8-NIR", ...) followed by SAR polarisations ("VV", "VH", ...).
std::vector<BandSpec> default_band_specs(int optical, int sar);

/// Aligned multi-modal image stack. Data is stored [t][c][h][w]; one clear mask
/// per modality present, stored [t][h][w] with 1 = observed.
struct Scene {
  std::vector<BandSpec> bands;
  int T = 0;
  int H = 0;
  int W = 0;
  std::vector<float> data;
  std::map<Modality, std::vector<std::uint8_t>> clear_mask;
  std::vector<std::string> dates;

  int channels() const noexcept { return static_cast<int>(bands.size()); }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(H) * W; }
  int count(Modality m) const noexcept;

  std::size_t offset(int t, int c, int h, int w) const noexcept {
    return ((static_cast<std::size_t>(t) * channels() + c) * H + h) * W + w;
  }
  std::size_t mask_offset(int t, int h, int w) const noexcept {
    return (static_cast<std::size_t>(t) * H + h) * W + w;
  }
  float& at(int t, int c, int h, int w) { return data[offset(t, c, h, w)]; }
  float at(int t, int c, int h, int w) const { return data[offset(t, c, h, w)]; }

  const std::vector<std::uint8_t>& mask(Modality m) const;
  std::vector<std::uint8_t>& mask(Modality m);
  bool observed(int t, int c, int h, int w) const {
    return mask(bands[c].modality)[mask_offset(t, h, w)] != 0;
  }

  /// Throws Error(InvariantViolation) describing the first violated invariant.
  void validate() const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Allocates a zero-filled scene with all-clear masks for every modality used.
Scene make_scene(std::vector<BandSpec> bands, int T, int H, int W);

/// Y in R^{(C*T) x (H*W)}, row = t*C + c, col = h*W + w.
struct ObservationMatrix {
  RowMatrix Y;
  RowMatrix M;
  int T = 0;
  int channels = 0;
  std::vector<Modality> channel_modality;
  std::vector<ValueRange> channel_range;

  Index row(int t, int c) const noexcept { return static_cast<Index>(t) * channels + c; }
};

/// (C*T, H*W) for the scene's dimensions; no data is touched.
std::pair<Index, Index> observation_shape(const Scene& scene) noexcept;

ObservationMatrix matricize(const Scene& scene);

/// Inverse of matricize on the data tensor; masks and metadata come from the
/// template.
Scene dematricize(const ObservationMatrix& mat, const Scene& templ);

}  // namespace cloudfill

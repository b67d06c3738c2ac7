#include "cloudfill/stack.hpp"

#include "cloudfill/errors.hpp"

#include <cmath>
#include <set>

namespace cloudfill {

std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::Optical: return "optical";
    case Modality::SAR: return "sar";
    case Modality::Index: return "index";
  }
  return "unknown";
}

Modality modality_from_string(std::string_view s) {
  if (s == "optical") return Modality::Optical;
  if (s == "sar") return Modality::SAR;
  if (s == "index") return Modality::Index;
  throw Error(ErrorCode::InvariantViolation, "unknown modality '" + std::string(s) + "'");
}

ValueRange default_range(Modality m) noexcept {
  if (m == Modality::Optical) return {0.0, 1.0};
  return {-1.0, 1.0};
}

BandSpec optical_band(std::string name) {
  return {std::move(name), Modality::Optical, default_range(Modality::Optical)};
}

BandSpec sar_band(std::string name) {
  return {std::move(name), Modality::SAR, default_range(Modality::SAR)};
}

std::vector<BandSpec> default_band_specs(int optical, int sar) {
  static const char* kOptical[] = {"B2-Blue", "B3-Green", "B4-Red",  "B8-NIR", "B11-SWIR1", "B12-SWIR2",
                                   "B5-RE1",  "B6-RE2",   "B7-RE3",  "B8A-NIR2", "B1-Aerosol", "B9-Vapour"};
  static const char* kSar[] = {"VV", "VH"};
  std::vector<BandSpec> out;
  for (int c = 0; c < optical; ++c) {
    out.push_back(optical_band(c < 12 ? kOptical[c] : "O" + std::to_string(c + 1)));
  }
  for (int c = 0; c < sar; ++c) {
    out.push_back(sar_band(c < 2 ? kSar[c] : "S" + std::to_string(c + 1)));
  }
  return out;
}

int Scene::count(Modality m) const noexcept {
  int n = 0;
  for (const auto& b : bands) n += b.modality == m ? 1 : 0;
  return n;
}

const std::vector<std::uint8_t>& Scene::mask(Modality m) const {
  auto it = clear_mask.find(m);
  if (it == clear_mask.end()) {
    throw Error(ErrorCode::InvariantViolation, "scene has no " + std::string(to_string(m)) + " mask");
  }
  return it->second;
}

std::vector<std::uint8_t>& Scene::mask(Modality m) {
  auto it = clear_mask.find(m);
  if (it == clear_mask.end()) {
    throw Error(ErrorCode::InvariantViolation, "scene has no " + std::string(to_string(m)) + " mask");
  }
  return it->second;
}

void Scene::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvariantViolation, msg); };
  if (T < 1 || H < 1 || W < 1) fail("dimensions must be positive");
  if (bands.empty()) fail("scene has no bands");

  std::set<std::string> names;
  for (const auto& b : bands) {
    if (!names.insert(b.name).second) fail("duplicate band name '" + b.name + "'");
    if (!(b.valid_range == default_range(b.modality))) {
      fail("band '" + b.name + "' has a valid range inconsistent with its modality");
    }
  }
  if (data.size() != static_cast<std::size_t>(T) * channels() * pixels()) fail("data size does not match dimensions");

  const std::size_t mask_size = static_cast<std::size_t>(T) * pixels();
  for (const auto& [m, grid] : clear_mask) {
    if (count(m) == 0) fail("mask for absent modality " + std::string(to_string(m)));
    if (grid.size() != mask_size) fail("mask size does not match dimensions");
    for (auto v : grid) {
      if (v > 1) fail("mask values must be 0 or 1");
    }
  }
  for (const auto& b : bands) {
    if (!clear_mask.contains(b.modality)) fail("missing mask for modality " + std::string(to_string(b.modality)));
  }
  if (!dates.empty() && dates.size() != static_cast<std::size_t>(T)) fail("date count must equal T");

  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < channels(); ++c) {
      const auto& grid = mask(bands[c].modality);
      const auto& range = bands[c].valid_range;
      for (int h = 0; h < H; ++h) {
        for (int w = 0; w < W; ++w) {
          const float v = at(t, c, h, w);
          if (std::isnan(v)) fail("NaN value in band '" + bands[c].name + "'");
          if (grid[mask_offset(t, h, w)] != 0) {
            if (!range.contains(v)) {
              fail("value " + std::to_string(v) + " outside valid range of band '" + bands[c].name + "'");
            }
          } else if (v != 0.0f) {
            fail("masked entry of band '" + bands[c].name + "' is not zero");
          }
        }
      }
    }
  }
}

Scene make_scene(std::vector<BandSpec> bands, int T, int H, int W) {
  Scene s;
  s.bands = std::move(bands);
  s.T = T;
  s.H = H;
  s.W = W;
  s.data.assign(static_cast<std::size_t>(T) * s.channels() * H * W, 0.0f);
  for (const auto& b : s.bands) {
    s.clear_mask.try_emplace(b.modality, static_cast<std::size_t>(T) * H * W, std::uint8_t{1});
  }
  return s;
}

std::pair<Index, Index> observation_shape(const Scene& scene) noexcept {
  return {static_cast<Index>(scene.T) * scene.channels(), static_cast<Index>(scene.pixels())};
}

ObservationMatrix matricize(const Scene& scene) {
  const int C = scene.channels();
  const auto cols = observation_shape(scene).second;
  ObservationMatrix out;
  out.T = scene.T;
  out.channels = C;
  for (const auto& b : scene.bands) {
    out.channel_modality.push_back(b.modality);
    out.channel_range.push_back(b.valid_range);
  }
  out.Y.resize(static_cast<Index>(scene.T) * C, cols);
  out.M.resize(out.Y.rows(), cols);

  // Row-major Y has the TCHW layout, so the data copy is a flat cast.
  std::copy(scene.data.begin(), scene.data.end(), out.Y.data());
  for (int t = 0; t < scene.T; ++t) {
    for (int c = 0; c < C; ++c) {
      const auto& grid = scene.mask(scene.bands[c].modality);
      const std::uint8_t* src = grid.data() + static_cast<std::size_t>(t) * scene.pixels();
      double* dst = out.M.row(out.row(t, c)).data();
      for (Index j = 0; j < cols; ++j) dst[j] = src[j];
    }
  }
  return out;
}

Scene dematricize(const ObservationMatrix& mat, const Scene& templ) {
  const auto rows = static_cast<Index>(templ.T) * templ.channels();
  if (mat.Y.rows() != rows || mat.Y.cols() != static_cast<Index>(templ.pixels())) {
    throw Error(ErrorCode::ShapeMismatch, "matrix is " + std::to_string(mat.Y.rows()) + "x" +
                                              std::to_string(mat.Y.cols()) + ", template expects " +
                                              std::to_string(rows) + "x" + std::to_string(templ.pixels()));
  }
  Scene out;
  out.bands = templ.bands;
  out.T = templ.T;
  out.H = templ.H;
  out.W = templ.W;
  out.clear_mask = templ.clear_mask;
  out.dates = templ.dates;
  out.data.resize(static_cast<std::size_t>(mat.Y.size()));
  const double* src = mat.Y.data();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = static_cast<float>(src[i]);
  return out;
}

}  // namespace cloudfill

#include "cloudfill/synth.hpp"

#include "cloudfill/errors.hpp"
#include "cloudfill/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace cloudfill {

namespace {

// Independent streams for factors, noise and clouds so that changing one knob
// (say the cloud ratio) leaves the planted scene untouched.
constexpr std::uint64_t kFactorStream = 0x243F6A8885A308D3ULL;
constexpr std::uint64_t kNoiseStream = 0x13198A2E03707344ULL;
constexpr std::uint64_t kCloudStream = 0xA4093822299F31D0ULL;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + stream;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Abundance maps: each land type is a few Gaussian bumps over a small floor;
// rows are normalized so every pixel is a convex mixture of land types.
RowMatrix abundance_maps(Rng& rng, int rank, int H, int W) {
  const Index pixels = static_cast<Index>(H) * W;
  RowMatrix V(pixels, rank);
  const double extent = std::max(H, W);
  for (int k = 0; k < rank; ++k) {
    double ch[3], cw[3], inv_var[3];
    for (int b = 0; b < 3; ++b) {
      ch[b] = rng.uniform(0.0, H);
      cw[b] = rng.uniform(0.0, W);
      const double s = rng.uniform(0.1, 0.3) * extent;
      inv_var[b] = 1.0 / (2.0 * s * s);
    }
    for (int h = 0; h < H; ++h) {
      for (int w = 0; w < W; ++w) {
        double a = 0.05;
        for (int b = 0; b < 3; ++b) {
          const double dh = h + 0.5 - ch[b];
          const double dw = w + 0.5 - cw[b];
          a += std::exp(-(dh * dh + dw * dw) * inv_var[b]);
        }
        V(static_cast<Index>(h) * W + w, k) = a;
      }
    }
  }
  for (Index p = 0; p < pixels; ++p) V.row(p) /= V.row(p).sum();
  return V;
}

// Temporal signatures: a base level plus the running sum of AR(1)-smoothed
// increments, scaled to a modest seasonal amplitude and kept inside the band
// range. Rows are time-major (t*C + c).
RowMatrix signatures(Rng& rng, int rank, int T, int optical, int sar) {
  const int C = optical + sar;
  RowMatrix U(static_cast<Index>(T) * C, rank);
  std::vector<double> level(T);
  for (int k = 0; k < rank; ++k) {
    for (int c = 0; c < C; ++c) {
      const bool is_optical = c < optical;
      const double base = is_optical ? rng.uniform(0.15, 0.85) : rng.uniform(-0.7, 0.7);
      double velocity = 0.0;
      double running = 0.0;
      double peak = 0.0;
      for (int t = 0; t < T; ++t) {
        velocity = 0.8 * velocity + 0.2 * rng.normal();
        running += velocity;
        level[t] = running;
        peak = std::max(peak, std::abs(running));
      }
      const double amplitude = rng.uniform(0.03, 0.12);
      const double lo = is_optical ? 0.05 : -0.9;
      const double hi = is_optical ? 0.95 : 0.9;
      for (int t = 0; t < T; ++t) {
        const double v = base + (peak > 0.0 ? amplitude * level[t] / peak : 0.0);
        U(static_cast<Index>(t) * C + c, k) = std::clamp(v, lo, hi);
      }
    }
  }
  return U;
}

void fill_ellipse(CloudMask& mask, int t, double ch, double cw, double a, double b, double angle,
                  std::size_t& cloudy) {
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  const double reach = std::max(a, b);
  const int h0 = std::max(0, static_cast<int>(std::floor(ch - reach)));
  const int h1 = std::min(mask.H - 1, static_cast<int>(std::ceil(ch + reach)));
  const int w0 = std::max(0, static_cast<int>(std::floor(cw - reach)));
  const int w1 = std::min(mask.W - 1, static_cast<int>(std::ceil(cw + reach)));
  for (int h = h0; h <= h1; ++h) {
    for (int w = w0; w <= w1; ++w) {
      const double dh = h + 0.5 - ch;
      const double dw = w + 0.5 - cw;
      const double u = (dw * ca + dh * sa) / a;
      const double v = (-dw * sa + dh * ca) / b;
      if (u * u + v * v <= 1.0 && mask.at(t, h, w) != 0) {
        mask.at(t, h, w) = 0;
        ++cloudy;
      }
    }
  }
}

}  // namespace

void validate(const SynthSpec& spec) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InfeasibleSpec, msg); };
  if (spec.T < 2 || spec.H < 1 || spec.W < 1) fail("need T >= 2 and positive H, W");
  if (spec.optical < 1 || spec.sar < 0) fail("need at least one optical band and a nonnegative SAR count");
  const long full = static_cast<long>(spec.optical + spec.sar) * spec.T;
  if (spec.rank < 1 || spec.rank > full || spec.rank > static_cast<long>(spec.H) * spec.W) {
    fail("rank " + std::to_string(spec.rank) + " is not in [1, min((C1+C2)T, HW)]");
  }
  if (!(spec.noise_sigma >= 0.0)) fail("noise_sigma must be nonnegative");
  if (!(spec.target_cloud_ratio >= 0.0 && spec.target_cloud_ratio <= 0.99)) fail("cloud ratio must lie in [0, 0.99]");
  if (spec.cloud_model == CloudModel::StoredLibrary && spec.library.empty()) fail("mask library is empty");
}

CloudMask synth_cloud_blobs(std::uint64_t seed, int H, int W, int T, double target_ratio) {
  if (!(target_ratio >= 0.0 && target_ratio <= 0.99)) {
    throw Error(ErrorCode::InfeasibleSpec, "cloud ratio must lie in [0, 0.99]");
  }
  CloudMask mask = CloudMask::filled(T, H, W, 1);
  Rng rng(seed);
  const auto slice = static_cast<double>(H) * W;
  const auto target = static_cast<std::size_t>(std::llround(target_ratio * slice));
  const auto slack = static_cast<std::size_t>(std::floor(0.02 * slice));
  for (int t = 0; t < T; ++t) {
    std::size_t cloudy = 0;
    for (int attempt = 0; attempt < 100000 && cloudy + slack < target; ++attempt) {
      const double deficit = static_cast<double>(target - cloudy);
      const double area = std::max(1.0, deficit * rng.uniform(0.25, 1.0));
      const double aspect = rng.uniform(0.5, 2.0);
      const double a = std::sqrt(area * aspect / std::numbers::pi);
      const double b = std::sqrt(area / (aspect * std::numbers::pi));
      const double ch = rng.uniform(0.0, H);
      const double cw = rng.uniform(0.0, W);
      const double angle = rng.uniform(0.0, std::numbers::pi);
      fill_ellipse(mask, t, ch, cw, a, b, angle, cloudy);
      if (area <= 1.0) {
        // Sub-pixel ellipses can miss every pixel centre; take the centre pixel.
        const int h = std::min(H - 1, static_cast<int>(ch));
        const int w = std::min(W - 1, static_cast<int>(cw));
        if (mask.at(t, h, w) != 0) {
          mask.at(t, h, w) = 0;
          ++cloudy;
        }
      }
    }
  }
  return mask;
}

SynthScene synth_scene(const SynthSpec& spec) {
  validate(spec);
  const int C = spec.optical + spec.sar;
  Rng factors(stream_seed(spec.seed, kFactorStream));
  SynthScene out;
  out.V = abundance_maps(factors, spec.rank, spec.H, spec.W);
  out.U = signatures(factors, spec.rank, spec.T, spec.optical, spec.sar);
  out.planted = out.U * out.V.transpose();

  const auto bands = default_band_specs(spec.optical, spec.sar);
  out.truth = make_scene(bands, spec.T, spec.H, spec.W);
  for (Index i = 0; i < out.planted.size(); ++i) {
    out.truth.data[static_cast<std::size_t>(i)] = static_cast<float>(out.planted.data()[i]);
  }
  for (int t = 0; t < spec.T; ++t) {
    for (int c = 0; c < C; ++c) {
      const ValueRange range = bands[c].valid_range;
      for (int h = 0; h < spec.H; ++h) {
        for (int w = 0; w < spec.W; ++w) {
          float& v = out.truth.at(t, c, h, w);
          v = static_cast<float>(range.clamp(v));
        }
      }
    }
  }

  const std::uint64_t cloud_seed = stream_seed(spec.seed, kCloudStream);
  out.mask = spec.cloud_model == CloudModel::StoredLibrary
                 ? sample_library_mask(spec.library, spec.T, spec.H, spec.W, cloud_seed)
                 : synth_cloud_blobs(cloud_seed, spec.H, spec.W, spec.T, spec.target_cloud_ratio);

  out.observed = out.truth;
  out.observed.mask(Modality::Optical) = out.mask.grid;
  Rng noise(stream_seed(spec.seed, kNoiseStream));
  for (int t = 0; t < spec.T; ++t) {
    for (int c = 0; c < C; ++c) {
      const ValueRange range = bands[c].valid_range;
      for (int h = 0; h < spec.H; ++h) {
        for (int w = 0; w < spec.W; ++w) {
          float& v = out.observed.at(t, c, h, w);
          const double jitter = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise.normal() : 0.0;
          v = out.observed.observed(t, c, h, w) ? static_cast<float>(range.clamp(v + jitter)) : 0.0f;
        }
      }
    }
  }
  return out;
}

}  // namespace cloudfill

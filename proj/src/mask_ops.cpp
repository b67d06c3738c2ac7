#include "cloudfill/mask_ops.hpp"

#include "cloudfill/errors.hpp"
#include "cloudfill/random.hpp"

#include <string>

namespace cloudfill {

CloudMask CloudMask::filled(int T, int H, int W, std::uint8_t value) {
  CloudMask m;
  m.T = T;
  m.H = H;
  m.W = W;
  m.grid.assign(static_cast<std::size_t>(T) * H * W, value);
  return m;
}

CloudMask CloudMask::day(int t) const {
  CloudMask out;
  out.T = 1;
  out.H = H;
  out.W = W;
  const auto first = grid.begin() + static_cast<std::ptrdiff_t>(t * slice_size());
  out.grid.assign(first, first + static_cast<std::ptrdiff_t>(slice_size()));
  return out;
}

SyntheticHoldout synthesize_holdout(const CloudMask& original, const CloudMask& sampled) {
  if (!original.same_shape(sampled)) {
    throw Error(ErrorCode::ShapeMismatch, "sampled mask shape differs from the original mask");
  }
  SyntheticHoldout out{original, sampled, original, original};
  for (std::size_t i = 0; i < original.size(); ++i) {
    const bool clear = original.grid[i] != 0;
    const bool still_clear = clear && sampled.grid[i] != 0;
    out.combined.grid[i] = still_clear ? 1 : 0;
    out.holdout.grid[i] = (clear && !still_clear) ? 1 : 0;
  }
  return out;
}

namespace {

// Flips every component of `value` smaller than min_size within one H x W slice.
void flip_small(std::uint8_t* slice, int H, int W, std::uint8_t value, int min_size, Connectivity conn,
                std::vector<int>& label, std::vector<int>& stack, std::vector<int>& members) {
  const int n = H * W;
  std::fill(label.begin(), label.begin() + n, -1);
  int next_label = 0;
  for (int seed = 0; seed < n; ++seed) {
    if (slice[seed] != value || label[seed] >= 0) continue;
    members.clear();
    stack.clear();
    stack.push_back(seed);
    label[seed] = next_label;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      members.push_back(p);
      const int ph = p / W;
      const int pw = p % W;
      for (int dh = -1; dh <= 1; ++dh) {
        for (int dw = -1; dw <= 1; ++dw) {
          if (dh == 0 && dw == 0) continue;
          if (conn == Connectivity::Four && dh != 0 && dw != 0) continue;
          const int qh = ph + dh;
          const int qw = pw + dw;
          if (qh < 0 || qh >= H || qw < 0 || qw >= W) continue;
          const int q = qh * W + qw;
          if (slice[q] == value && label[q] < 0) {
            label[q] = next_label;
            stack.push_back(q);
          }
        }
      }
    }
    ++next_label;
    const auto area = static_cast<int>(members.size());
    if (area < min_size && area < n) {
      for (int p : members) slice[p] = value == 0 ? 1 : 0;
    }
  }
}

}  // namespace

CloudMask filter_small_components(const CloudMask& mask, int min_size, Connectivity connectivity) {
  CloudMask out = mask;
  const int n = mask.H * mask.W;
  std::vector<int> label(static_cast<std::size_t>(n));
  std::vector<int> stack;
  std::vector<int> members;
  for (int t = 0; t < mask.T; ++t) {
    std::uint8_t* slice = out.grid.data() + static_cast<std::size_t>(t) * n;
    flip_small(slice, mask.H, mask.W, 0, min_size, connectivity, label, stack, members);
    flip_small(slice, mask.H, mask.W, 1, min_size, connectivity, label, stack, members);
  }
  return out;
}

double cloud_ratio(const CloudMask& mask) {
  if (mask.grid.empty()) throw Error(ErrorCode::InvalidDimension, "cloud_ratio of an empty mask");
  std::size_t cloudy = 0;
  for (auto v : mask.grid) cloudy += v == 0 ? 1 : 0;
  return static_cast<double>(cloudy) / static_cast<double>(mask.grid.size());
}

CloudMask sample_library_mask(const std::vector<CloudMask>& library, int T, int H, int W, std::uint64_t seed) {
  if (library.empty()) throw Error(ErrorCode::InvalidConfig, "mask library is empty");
  for (const auto& m : library) {
    if (m.T != 1 || m.H != H || m.W != W) {
      throw Error(ErrorCode::ShapeMismatch, "library mask is " + std::to_string(m.H) + "x" + std::to_string(m.W) +
                                                ", scene is " + std::to_string(H) + "x" + std::to_string(W));
    }
  }
  Rng rng(seed);
  CloudMask out = CloudMask::filled(T, H, W, 1);
  for (int t = 0; t < T; ++t) {
    const auto& pick = library[rng.index(library.size())];
    std::copy(pick.grid.begin(), pick.grid.end(), out.grid.begin() + static_cast<std::ptrdiff_t>(t * out.slice_size()));
  }
  return out;
}

}  // namespace cloudfill

#include "cloudfill/metrics.hpp"

#include "cloudfill/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cloudfill {

namespace {

void check_sizes(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> selector) {
  if (pred.size() != truth.size() || pred.size() != selector.size()) {
    throw Error(ErrorCode::ShapeMismatch, "prediction, truth and selector sizes differ");
  }
}

// Gathers the optical values of a scene at selected (t, h, w) into a flat list.
void gather_optical(const Scene& scene, const CloudMask& selector, int band, std::vector<double>& out) {
  for (int t = 0; t < scene.T; ++t) {
    for (int h = 0; h < scene.H; ++h) {
      for (int w = 0; w < scene.W; ++w) {
        if (selector.at(t, h, w) != 0) out.push_back(scene.at(t, band, h, w));
      }
    }
  }
}

void check_scenes(const Scene& pred, const Scene& truth, const CloudMask& selector) {
  if (pred.T != truth.T || pred.H != truth.H || pred.W != truth.W || pred.bands != truth.bands) {
    throw Error(ErrorCode::ShapeMismatch, "prediction and truth scenes differ in shape or bands");
  }
  if (selector.T != pred.T || selector.H != pred.H || selector.W != pred.W) {
    throw Error(ErrorCode::ShapeMismatch, "selector shape differs from the scenes");
  }
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> selector) {
  check_sizes(pred, truth, selector);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (selector[i] == 0) continue;
    const double d = pred[i] - truth[i];
    total += d * d;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptySelector, "no selected pixels");
  return total / static_cast<double>(n);
}

double psnr(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> selector,
            double peak) {
  const double err = mse(pred, truth, selector);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / err);
}

double mae(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> selector) {
  check_sizes(pred, truth, selector);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (selector[i] == 0) continue;
    total += std::abs(pred[i] - truth[i]);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptySelector, "no selected pixels");
  return total / static_cast<double>(n);
}

double r_squared(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> selector) {
  check_sizes(pred, truth, selector);
  std::size_t n = 0;
  double mean_p = 0.0;
  double mean_t = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (selector[i] == 0) continue;
    ++n;
    mean_p += pred[i];
    mean_t += truth[i];
  }
  if (n == 0) throw Error(ErrorCode::EmptySelector, "no selected pixels");
  if (n < 2) throw Error(ErrorCode::DegenerateVariance, "need at least two selected pixels");
  mean_p /= static_cast<double>(n);
  mean_t /= static_cast<double>(n);
  double cov = 0.0;
  double var_p = 0.0;
  double var_t = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (selector[i] == 0) continue;
    const double dp = pred[i] - mean_p;
    const double dt = truth[i] - mean_t;
    cov += dp * dt;
    var_p += dp * dp;
    var_t += dt * dt;
  }
  if (var_p == 0.0 || var_t == 0.0) throw Error(ErrorCode::DegenerateVariance, "constant prediction or truth");
  const double r = cov / std::sqrt(var_p * var_t);
  return std::min(1.0, r * r);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::EmptySelector, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> ratio_bin_edges(int bins, double low, double high) {
  if (bins < 1 || !(high > low)) throw Error(ErrorCode::InvalidConfig, "invalid bin specification");
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) edges[k] = low + (high - low) * k / bins;
  edges.back() = high;
  return edges;
}

std::vector<BinStats> bin_entry_errors(std::span<const EntryError> entries, std::span<const double> edges) {
  if (edges.size() < 2) throw Error(ErrorCode::InvalidConfig, "need at least two bin edges");
  const std::size_t bins = edges.size() - 1;
  std::vector<std::vector<double>> members(bins);
  for (const auto& e : entries) {
    if (e.cloud_ratio < edges.front() || e.cloud_ratio > edges.back()) continue;
    std::size_t k = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), e.cloud_ratio) -
                                             edges.begin());
    k = std::min(k == 0 ? 0 : k - 1, bins - 1);
    members[k].push_back(e.mae);
  }
  std::vector<BinStats> out(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out[k].low = edges[k];
    out[k].high = edges[k + 1];
    out[k].n = members[k].size();
    if (!members[k].empty()) {
      out[k].median = quantile(members[k], 0.5);
      out[k].q25 = quantile(members[k], 0.25);
      out[k].q75 = quantile(members[k], 0.75);
    }
  }
  return out;
}

std::vector<BinStats> binned_mae_by_cloud_ratio(std::span<const MetricEntry> entries, std::span<const double> edges) {
  std::vector<EntryError> errors;
  errors.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.cloud_ratio < edges.front() || e.cloud_ratio > edges.back()) continue;
    errors.push_back({e.cloud_ratio, mae(e.pred, e.truth, e.selector)});
  }
  return bin_entry_errors(errors, edges);
}

std::vector<double> normalized_difference(std::span<const double> a, std::span<const double> b, double eps) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "index bands differ in size");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double sum = a[i] + b[i];
    out[i] = std::abs(sum) < eps ? 0.0 : (a[i] - b[i]) / sum;
  }
  return out;
}

IndexPreset index_preset(IndexType type) {
  switch (type) {
    case IndexType::NDVI: return {"NDVI", "B8", "B4"};
    case IndexType::NDWI: return {"NDWI", "B8", "B11"};
    case IndexType::NBR: return {"NBR", "B8", "B12"};
  }
  throw Error(ErrorCode::InvalidConfig, "unknown index type");
}

IndexType index_type_from_string(const std::string& s) {
  if (s == "ndvi") return IndexType::NDVI;
  if (s == "ndwi") return IndexType::NDWI;
  if (s == "nbr") return IndexType::NBR;
  throw Error(ErrorCode::InvalidConfig, "unknown index type '" + s + "'");
}

std::optional<int> find_band(const std::vector<BandSpec>& bands, const std::string& id) {
  for (std::size_t c = 0; c < bands.size(); ++c) {
    const std::string& name = bands[c].name;
    if (name == id) return static_cast<int>(c);
    if (name.size() > id.size() && name.compare(0, id.size(), id) == 0 &&
        (name[id.size()] == '-' || name[id.size()] == '_')) {
      return static_cast<int>(c);
    }
  }
  return std::nullopt;
}

std::string to_string(SubsetKind kind) { return kind == SubsetKind::Syn ? "syn" : "all"; }

EvalSubset syn_subset(const CloudMask& holdout) { return {SubsetKind::Syn, holdout}; }

EvalSubset all_subset(const CloudMask& holdout, const CloudMask& combined) {
  if (!holdout.same_shape(combined)) throw Error(ErrorCode::ShapeMismatch, "holdout and mask shapes differ");
  EvalSubset out{SubsetKind::All, holdout};
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    out.selector.grid[i] = (holdout.grid[i] != 0 || combined.grid[i] != 0) ? 1 : 0;
  }
  return out;
}

void evaluate_subset(const Scene& pred, const Scene& truth, const EvalSubset& subset, const std::string& method,
                     EvalReport& report) {
  check_scenes(pred, truth, subset.selector);
  if (std::none_of(subset.selector.grid.begin(), subset.selector.grid.end(), [](auto v) { return v != 0; })) return;

  const std::string subset_name = to_string(subset.kind);
  std::vector<double> all_pred;
  std::vector<double> all_truth;
  std::vector<std::pair<std::string, double>> per_band;
  for (int c = 0; c < pred.channels(); ++c) {
    if (pred.bands[c].modality != Modality::Optical) continue;
    std::vector<double> p;
    std::vector<double> t;
    gather_optical(pred, subset.selector, c, p);
    gather_optical(truth, subset.selector, c, t);
    const std::vector<std::uint8_t> every(p.size(), 1);
    per_band.emplace_back(pred.bands[c].name, psnr(p, t, every));
    all_pred.insert(all_pred.end(), p.begin(), p.end());
    all_truth.insert(all_truth.end(), t.begin(), t.end());
  }
  if (all_pred.empty()) return;

  const std::vector<std::uint8_t> every(all_pred.size(), 1);
  double r2 = std::numeric_limits<double>::quiet_NaN();
  try {
    r2 = r_squared(all_pred, all_truth, every);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateVariance) throw;
  }
  report.metrics.push_back({method, subset_name, "psnr", "ALL", psnr(all_pred, all_truth, every)});
  report.metrics.push_back({method, subset_name, "mae", "ALL", mae(all_pred, all_truth, every)});
  report.metrics.push_back({method, subset_name, "r2_pearson_sq", "ALL", r2});
  for (const auto& [name, value] : per_band) report.metrics.push_back({method, subset_name, "psnr", name, value});
}

double scene_mae(const Scene& pred, const Scene& truth, const CloudMask& selector) {
  check_scenes(pred, truth, selector);
  std::vector<double> p;
  std::vector<double> t;
  for (int c = 0; c < pred.channels(); ++c) {
    if (pred.bands[c].modality != Modality::Optical) continue;
    gather_optical(pred, selector, c, p);
    gather_optical(truth, selector, c, t);
  }
  const std::vector<std::uint8_t> every(p.size(), 1);
  return mae(p, t, every);
}

}  // namespace cloudfill

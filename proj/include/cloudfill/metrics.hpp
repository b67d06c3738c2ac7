#pragma once

#include "cloudfill/mask_ops.hpp"
#include "cloudfill/stack.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cloudfill {

/// Mean squared error over selected entries (selector != 0).
double mse(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> selector);

/// 10 log10(peak^2 / MSE); +infinity when MSE is 0. Throws EmptySelector.
double psnr(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> selector,
            double peak = 1.0);

double mae(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> selector);

/// Squared Pearson correlation over selected entries. Throws
/// DegenerateVariance when fewer than two entries are selected or either
/// side is constant.
double r_squared(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> selector);

/// Quantile with linear interpolation between order statistics
/// (position p*(n-1) in the sorted sample).
double quantile(std::vector<double> values, double p);

struct BinStats {
  double low = 0.0;
  double high = 0.0;
  std::size_t n = 0;
  std::optional<double> median;
  std::optional<double> q25;
  std::optional<double> q75;
};

/// Equal-width cloud-ratio bin edges; default eight bins over [0.3, 0.95].
std::vector<double> ratio_bin_edges(int bins = 8, double low = 0.3, double high = 0.95);

struct EntryError {
  double cloud_ratio = 0.0;
  double mae = 0.0;
};

/// Per-bin median and quartiles of entry-level MAE. Entries outside
/// [edges.front(), edges.back()] are dropped; the last bin is closed.
std::vector<BinStats> bin_entry_errors(std::span<const EntryError> entries, std::span<const double> edges);

struct MetricEntry {
  std::span<const double> pred;
  std::span<const double> truth;
  std::span<const std::uint8_t> selector;
  double cloud_ratio = 0.0;
};

std::vector<BinStats> binned_mae_by_cloud_ratio(std::span<const MetricEntry> entries, std::span<const double> edges);

/// (A - B) / (A + B) elementwise, 0 where |A + B| < eps.
std::vector<double> normalized_difference(std::span<const double> a, std::span<const double> b, double eps = 1e-8);

enum class IndexType { NDVI, NDWI, NBR };

struct IndexPreset {
  std::string name;
  std::string band_a;  // Sentinel-2 band id, e.g. "B8"
  std::string band_b;
};

IndexPreset index_preset(IndexType type);
IndexType index_type_from_string(const std::string& s);

/// Position of the band whose name is `id` or starts with `id` followed by
/// '-' or '_' ("B8" matches "B8-NIR" but not "B8A-NIR2").
std::optional<int> find_band(const std::vector<BandSpec>& bands, const std::string& id);

enum class SubsetKind { Syn, All };

std::string to_string(SubsetKind kind);

/// Evaluation pixels over T x H x W. Syn holds the synthetic holdout; All
/// adds the pixels still clear after the synthetic clouds.
struct EvalSubset {
  SubsetKind kind = SubsetKind::Syn;
  CloudMask selector;
};

EvalSubset syn_subset(const CloudMask& holdout);
EvalSubset all_subset(const CloudMask& holdout, const CloudMask& combined);

struct MetricRow {
  std::string method;
  std::string subset;
  std::string metric;
  std::string band;  // band name or "ALL"
  double value = 0.0;
};

struct BinRow {
  std::string method;
  BinStats stats;
};

struct EvalReport {
  std::vector<MetricRow> metrics;
  std::vector<BinRow> binned;
};

/// Appends psnr, mae and r2_pearson_sq over all optical bands jointly, then
/// per-band psnr rows, for one subset. Nothing is appended for an empty
/// selector. A degenerate r2 is reported as NaN.
void evaluate_subset(const Scene& pred, const Scene& truth, const EvalSubset& subset, const std::string& method,
                     EvalReport& report);

/// Mean absolute error of the optical bands over the selected pixels.
double scene_mae(const Scene& pred, const Scene& truth, const CloudMask& selector);

}  // namespace cloudfill

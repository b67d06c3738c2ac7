#pragma once

#include "cloudfill/mask_ops.hpp"
#include "cloudfill/metrics.hpp"
#include "cloudfill/stack.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace cloudfill {

/// On-disk stack container, format_version 1:
///
///   meta.json         dims {T, C, H, W}, bands [{name, modality, valid_range}],
///                     layout "TCHW", encoding "f32le", optional dates
///   data.bin          little-endian float32, C order [T][C][H][W]
///   mask_<mod>.bin    one byte per [T][H][W] cell, 0 or 1, per modality
///
/// Extra files (holdout.bin, run_manifest.json) may sit alongside.
inline constexpr int kFormatVersion = 1;

/// Throws RejectedValue for NaN data, InvariantViolation for any other
/// scene invariant, IoError when the directory cannot be written.
void write_stack(const Scene& scene, const std::filesystem::path& dir);

/// Throws IoError (missing files), CorruptContainer (malformed meta or size
/// mismatch), UnsupportedVersion (version, layout or encoding) and
/// InvariantViolation (values breaking scene invariants).
Scene read_stack(const std::filesystem::path& dir);

/// Raw T x H x W byte mask ({0,1}) such as holdout.bin.
void write_mask_file(const CloudMask& mask, const std::filesystem::path& file);
CloudMask read_mask_file(const std::filesystem::path& file, int T, int H, int W);

/// Every subdirectory (in name order) is a container; each day of its
/// optical mask becomes one 2-D library entry.
std::vector<CloudMask> load_mask_library(const std::filesystem::path& dir);

/// metrics.csv: method,subset,metric,band,value
/// binned.csv:  method,bin_low,bin_high,median_mae,q25,q75,n
/// Values use six significant digits; infinite PSNR is written as "inf".
void write_report_csv(std::span<const EvalReport> reports, const std::filesystem::path& dir);

/// "%.6g" with "inf", "-inf" and "nan" spelled out.
std::string format_value(double v);

}  // namespace cloudfill

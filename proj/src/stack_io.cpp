#include "cloudfill/stack_io.hpp"

#include "cloudfill/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace cloudfill {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string mask_file_name(Modality m) { return "mask_" + std::string(to_string(m)) + ".bin"; }

std::vector<char> read_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& file, const char* bytes, std::size_t size) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + file.string());
  out.write(bytes, static_cast<std::streamsize>(size));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + file.string());
}

void write_text(const fs::path& file, const std::string& text) { write_bytes(file, text.data(), text.size()); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::IoError, "cannot create directory " + dir.string());
}

std::vector<char> encode_f32le(const std::vector<float>& values) {
  std::vector<char> out(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &values[i], 4);
    for (int b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  return out;
}

std::vector<float> decode_f32le(const std::vector<char>& bytes) {
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
    std::memcpy(&out[i], &bits, 4);
  }
  return out;
}

json meta_json(const Scene& s) {
  json bands = json::array();
  for (const auto& b : s.bands) {
    bands.push_back({{"name", b.name},
                     {"modality", std::string(to_string(b.modality))},
                     {"valid_range", {b.valid_range.lo, b.valid_range.hi}}});
  }
  json meta = {{"format_version", kFormatVersion},
               {"layout", "TCHW"},
               {"encoding", "f32le"},
               {"dims", {{"T", s.T}, {"C", s.channels()}, {"H", s.H}, {"W", s.W}}},
               {"bands", bands}};
  if (!s.dates.empty()) meta["dates"] = s.dates;
  return meta;
}

}  // namespace

void write_stack(const Scene& scene, const fs::path& dir) {
  for (float v : scene.data) {
    if (std::isnan(v)) throw Error(ErrorCode::RejectedValue, "NaN values cannot be stored; use the masks");
  }
  scene.validate();
  ensure_dir(dir);
  write_text(dir / "meta.json", meta_json(scene).dump(2) + "\n");
  const auto bytes = encode_f32le(scene.data);
  write_bytes(dir / "data.bin", bytes.data(), bytes.size());
  for (const auto& [modality, grid] : scene.clear_mask) {
    write_bytes(dir / mask_file_name(modality), reinterpret_cast<const char*>(grid.data()), grid.size());
  }
}

Scene read_stack(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  const auto meta_bytes = read_bytes(dir / "meta.json");
  json meta;
  try {
    meta = json::parse(meta_bytes.begin(), meta_bytes.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptContainer, "meta.json: " + std::string(e.what()));
  }

  Scene s;
  try {
    if (meta.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::UnsupportedVersion, "format_version " + meta.at("format_version").dump());
    }
    if (meta.at("layout").get<std::string>() != "TCHW") {
      throw Error(ErrorCode::UnsupportedVersion, "layout " + meta.at("layout").get<std::string>());
    }
    if (meta.at("encoding").get<std::string>() != "f32le") {
      throw Error(ErrorCode::UnsupportedVersion, "encoding " + meta.at("encoding").get<std::string>());
    }
    const auto& dims = meta.at("dims");
    s.T = dims.at("T").get<int>();
    s.H = dims.at("H").get<int>();
    s.W = dims.at("W").get<int>();
    const int C = dims.at("C").get<int>();
    for (const auto& b : meta.at("bands")) {
      const auto& range = b.at("valid_range");
      if (!range.is_array() || range.size() != 2) throw Error(ErrorCode::CorruptContainer, "bad valid_range");
      s.bands.push_back({b.at("name").get<std::string>(),
                         modality_from_string(b.at("modality").get<std::string>()),
                         {range[0].get<double>(), range[1].get<double>()}});
    }
    if (s.channels() != C) throw Error(ErrorCode::CorruptContainer, "band list length differs from dims.C");
    if (meta.contains("dates")) s.dates = meta.at("dates").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptContainer, "meta.json: " + std::string(e.what()));
  }
  if (s.T < 1 || s.H < 1 || s.W < 1 || s.bands.empty()) {
    throw Error(ErrorCode::CorruptContainer, "meta.json declares empty dimensions");
  }

  const std::size_t cells = static_cast<std::size_t>(s.T) * s.H * s.W;
  const auto data_bytes = read_bytes(dir / "data.bin");
  if (data_bytes.size() != cells * s.channels() * 4) {
    throw Error(ErrorCode::CorruptContainer, "data.bin has " + std::to_string(data_bytes.size()) + " bytes, expected " +
                                                 std::to_string(cells * s.channels() * 4));
  }
  s.data = decode_f32le(data_bytes);
  for (const auto& b : s.bands) {
    if (s.clear_mask.contains(b.modality)) continue;
    const fs::path file = dir / mask_file_name(b.modality);
    if (!fs::exists(file)) throw Error(ErrorCode::CorruptContainer, "missing " + file.filename().string());
    const auto bytes = read_bytes(file);
    if (bytes.size() != cells) throw Error(ErrorCode::CorruptContainer, file.filename().string() + " has wrong size");
    s.clear_mask[b.modality] = std::vector<std::uint8_t>(bytes.begin(), bytes.end());
  }
  s.validate();
  return s;
}

void write_mask_file(const CloudMask& mask, const fs::path& file) {
  for (auto v : mask.grid) {
    if (v > 1) throw Error(ErrorCode::InvariantViolation, "mask values must be 0 or 1");
  }
  if (file.has_parent_path()) ensure_dir(file.parent_path());
  write_bytes(file, reinterpret_cast<const char*>(mask.grid.data()), mask.grid.size());
}

CloudMask read_mask_file(const fs::path& file, int T, int H, int W) {
  const auto bytes = read_bytes(file);
  CloudMask mask = CloudMask::filled(T, H, W, 0);
  if (bytes.size() != mask.size()) {
    throw Error(ErrorCode::CorruptContainer, file.filename().string() + " has " + std::to_string(bytes.size()) +
                                                 " bytes, expected " + std::to_string(mask.size()));
  }
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const auto v = static_cast<std::uint8_t>(bytes[i]);
    if (v > 1) throw Error(ErrorCode::InvariantViolation, file.filename().string() + " holds a non-binary value");
    mask.grid[i] = v;
  }
  return mask;
}

std::vector<CloudMask> load_mask_library(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) entries.push_back(e.path());
  }
  std::sort(entries.begin(), entries.end());
  std::vector<CloudMask> out;
  for (const auto& entry : entries) {
    const Scene s = read_stack(entry);
    CloudMask m;
    m.T = s.T;
    m.H = s.H;
    m.W = s.W;
    m.grid = s.mask(Modality::Optical);
    for (int t = 0; t < m.T; ++t) out.push_back(m.day(t));
  }
  if (out.empty()) throw Error(ErrorCode::IoError, "mask library " + dir.string() + " has no entries");
  return out;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_report_csv(std::span<const EvalReport> reports, const fs::path& dir) {
  ensure_dir(dir);
  std::string metrics = "method,subset,metric,band,value\n";
  std::string binned = "method,bin_low,bin_high,median_mae,q25,q75,n\n";
  auto optional_cell = [](const std::optional<double>& v) { return v ? format_value(*v) : std::string(); };
  for (const auto& report : reports) {
    for (const auto& row : report.metrics) {
      metrics += row.method + "," + row.subset + "," + row.metric + "," + row.band + "," + format_value(row.value) + "\n";
    }
    for (const auto& row : report.binned) {
      const auto& b = row.stats;
      binned += row.method + "," + format_value(b.low) + "," + format_value(b.high) + "," + optional_cell(b.median) +
                "," + optional_cell(b.q25) + "," + optional_cell(b.q75) + "," + std::to_string(b.n) + "\n";
    }
  }
  write_text(dir / "metrics.csv", metrics);
  write_text(dir / "binned.csv", binned);
}

}  // namespace cloudfill

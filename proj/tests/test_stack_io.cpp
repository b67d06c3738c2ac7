#include <doctest.h>

#include "cloudfill/errors.hpp"
#include "cloudfill/stack_io.hpp"
#include "cloudfill/synth.hpp"
#include "test_util.hpp"

#include <json.hpp>

using namespace cloudfill;
using namespace cloudfill::testing;

namespace {

ErrorCode read_error(const fs::path& dir) {
  try {
    (void)read_stack(dir);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("read_stack accepted a bad container");
  return ErrorCode::IoError;
}

void rewrite_meta(const fs::path& dir, const std::function<void(nlohmann::json&)>& edit) {
  std::ifstream in(dir / "meta.json");
  nlohmann::json meta = nlohmann::json::parse(in);
  in.close();
  edit(meta);
  std::ofstream(dir / "meta.json") << meta.dump();
}

Scene sample_scene(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.T = 4;
  spec.H = 6;
  spec.W = 5;
  spec.optical = 3;
  spec.sar = 2;
  spec.noise_sigma = 0.05;
  spec.target_cloud_ratio = 0.4;
  return synth_scene(spec).observed;
}

}  // namespace

TEST_CASE("write then read is exact") {
  TempDir tmp("io");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Scene s = sample_scene(seed);
    if (seed == 2) s.dates = {"2021-01-01", "2021-01-13", "2021-01-25", "2021-02-06"};
    const auto dir = tmp / ("s" + std::to_string(seed));
    write_stack(s, dir);
    CHECK(read_stack(dir) == s);
  }
}

TEST_CASE("data file layout") {
  TempDir tmp("io");
  Scene s = make_scene({optical_band("B4-Red")}, 1, 1, 1);
  s.data[0] = 0.25f;
  write_stack(s, tmp.path());
  const auto bytes = file_bytes(tmp / "data.bin");
  REQUIRE(bytes.size() == 4);
  // 0.25f = 0x3E800000, little-endian.
  CHECK(static_cast<unsigned char>(bytes[0]) == 0x00);
  CHECK(static_cast<unsigned char>(bytes[1]) == 0x00);
  CHECK(static_cast<unsigned char>(bytes[2]) == 0x80);
  CHECK(static_cast<unsigned char>(bytes[3]) == 0x3E);
  CHECK(file_bytes(tmp / "mask_optical.bin").size() == 1);
  CHECK(!fs::exists(tmp / "mask_sar.bin"));
}

TEST_CASE("NaN data is rejected") {
  TempDir tmp("io");
  Scene s = sample_scene(1);
  s.data[7] = std::numeric_limits<float>::quiet_NaN();
  try {
    write_stack(s, tmp / "nan");
    FAIL("expected RejectedValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RejectedValue);
  }
  CHECK(!fs::exists(tmp / "nan" / "data.bin"));
}

TEST_CASE("invalid scenes are not written") {
  TempDir tmp("io");
  Scene s = sample_scene(1);
  s.data[0] = 3.0f;
  try {
    write_stack(s, tmp / "bad");
    FAIL("expected InvariantViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvariantViolation);
  }
}

TEST_CASE("corrupted containers") {
  TempDir tmp("io");
  const Scene s = sample_scene(3);
  auto fresh = [&](const std::string& name) {
    const auto dir = tmp / name;
    write_stack(s, dir);
    return dir;
  };

  SUBCASE("truncated data") {
    const auto dir = fresh("trunc");
    fs::resize_file(dir / "data.bin", fs::file_size(dir / "data.bin") - 3);
    CHECK(read_error(dir) == ErrorCode::CorruptContainer);
  }
  SUBCASE("unknown layout") {
    const auto dir = fresh("layout");
    rewrite_meta(dir, [](auto& m) { m["layout"] = "CTHW"; });
    CHECK(read_error(dir) == ErrorCode::UnsupportedVersion);
  }
  SUBCASE("future version") {
    const auto dir = fresh("version");
    rewrite_meta(dir, [](auto& m) { m["format_version"] = 2; });
    CHECK(read_error(dir) == ErrorCode::UnsupportedVersion);
  }
  SUBCASE("other encoding") {
    const auto dir = fresh("enc");
    rewrite_meta(dir, [](auto& m) { m["encoding"] = "f64be"; });
    CHECK(read_error(dir) == ErrorCode::UnsupportedVersion);
  }
  SUBCASE("malformed json") {
    const auto dir = fresh("json");
    std::ofstream(dir / "meta.json") << "{\"format_version\": 1,";
    CHECK(read_error(dir) == ErrorCode::CorruptContainer);
  }
  SUBCASE("missing key") {
    const auto dir = fresh("key");
    rewrite_meta(dir, [](auto& m) { m.erase("dims"); });
    CHECK(read_error(dir) == ErrorCode::CorruptContainer);
  }
  SUBCASE("band count disagrees with dims") {
    const auto dir = fresh("bands");
    rewrite_meta(dir, [](auto& m) { m["dims"]["C"] = 4; });
    CHECK(read_error(dir) == ErrorCode::CorruptContainer);
  }
  SUBCASE("missing mask file") {
    const auto dir = fresh("nomask");
    fs::remove(dir / "mask_sar.bin");
    CHECK(read_error(dir) == ErrorCode::CorruptContainer);
  }
  SUBCASE("missing data file") {
    const auto dir = fresh("nodata");
    fs::remove(dir / "data.bin");
    CHECK(read_error(dir) == ErrorCode::IoError);
  }
  SUBCASE("out of range value") {
    const auto dir = fresh("range");
    // Find a clear optical cell and overwrite it with 2.0f.
    std::size_t cell = 0;
    while (s.data[cell] == 0.0f || s.bands[(cell / (s.pixels())) % s.channels()].modality != Modality::Optical) ++cell;
    std::fstream f(dir / "data.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(cell * 4));
    const unsigned char two[4] = {0x00, 0x00, 0x00, 0x40};
    f.write(reinterpret_cast<const char*>(two), 4);
    f.close();
    CHECK(read_error(dir) == ErrorCode::InvariantViolation);
  }
  SUBCASE("non-binary mask") {
    const auto dir = fresh("mask");
    std::fstream f(dir / "mask_optical.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.put(static_cast<char>(7));
    f.close();
    CHECK(read_error(dir) == ErrorCode::InvariantViolation);
  }
  SUBCASE("not a directory") { CHECK(read_error(tmp / "absent") == ErrorCode::IoError); }
}

TEST_CASE("mask files") {
  TempDir tmp("io");
  CloudMask m = CloudMask::filled(2, 3, 4, 1);
  m.at(1, 2, 3) = 0;
  write_mask_file(m, tmp / "holdout.bin");
  CHECK(read_mask_file(tmp / "holdout.bin", 2, 3, 4) == m);
  CHECK_THROWS_AS(read_mask_file(tmp / "holdout.bin", 2, 3, 5), Error);
}

TEST_CASE("mask library directory") {
  TempDir tmp("io");
  for (int k = 0; k < 2; ++k) {
    Scene s = make_scene({optical_band("clear")}, 2, 3, 3);
    s.mask(Modality::Optical)[static_cast<std::size_t>(k)] = 0;
    write_stack(s, tmp / ("m" + std::to_string(k)));
  }
  const auto lib = load_mask_library(tmp.path());
  REQUIRE(lib.size() == 4);
  CHECK(lib[0].grid[0] == 0);
  CHECK(lib[2].grid[1] == 0);
  CHECK(lib[1].T == 1);
}

TEST_CASE("report serialization") {
  TempDir tmp("csv");
  auto read_lines = [](const fs::path& file) {
    std::ifstream in(file);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
  };

  SUBCASE("one metric row") {
    EvalReport r;
    r.metrics.push_back({"mc", "syn", "psnr", "ALL", 31.25});
    write_report_csv(std::span<const EvalReport>(&r, 1), tmp.path());
    const auto lines = read_lines(tmp / "metrics.csv");
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "method,subset,metric,band,value");
    CHECK(lines[1] == "mc,syn,psnr,ALL,31.25");
  }
  SUBCASE("infinite psnr") {
    EvalReport r;
    r.metrics.push_back({"linear", "all", "psnr", "B2-Blue", std::numeric_limits<double>::infinity()});
    write_report_csv(std::span<const EvalReport>(&r, 1), tmp.path());
    CHECK(read_lines(tmp / "metrics.csv")[1] == "linear,all,psnr,B2-Blue,inf");
  }
  SUBCASE("empty bins") {
    EvalReport r;
    BinStats empty;
    empty.low = 0.3;
    empty.high = 0.38125;
    BinStats full;
    full.low = 0.38125;
    full.high = 0.4625;
    full.n = 3;
    full.median = 0.02;
    full.q25 = 0.015;
    full.q75 = 0.025;
    r.binned = {{"damped", empty}, {"damped", full}};
    write_report_csv(std::span<const EvalReport>(&r, 1), tmp.path());
    const auto lines = read_lines(tmp / "binned.csv");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "method,bin_low,bin_high,median_mae,q25,q75,n");
    CHECK(lines[1] == "damped,0.3,0.38125,,,,0");
    CHECK(lines[2] == "damped,0.38125,0.4625,0.02,0.015,0.025,3");
  }
  CHECK(format_value(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_value(std::nan("")) == "nan");
  CHECK(format_value(1.0 / 3.0) == "0.333333");
}

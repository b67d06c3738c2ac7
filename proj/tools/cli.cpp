#include "cli.hpp"

#include "cloudfill/completion.hpp"
#include "cloudfill/damped.hpp"
#include "cloudfill/errors.hpp"
#include "cloudfill/mask_ops.hpp"
#include "cloudfill/metrics.hpp"
#include "cloudfill/stack.hpp"
#include "cloudfill/stack_io.hpp"
#include "cloudfill/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace cloudfill::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kManifestFile = "run_manifest.json";
constexpr const char* kHoldoutFile = "holdout.bin";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reproducibility record written next to every output.
struct RunManifest {
  std::string command;
  json config = json::object();
  json inputs = json::object();
  json outputs = json::object();
  std::optional<std::uint64_t> seed;
  double wall_clock_seconds = 0.0;
  std::optional<SolverTrace> trace;

  json to_json() const {
    json j = {{"command", command}, {"config", config}, {"inputs", inputs}, {"outputs", outputs}};
    j["seed"] = seed ? json(*seed) : json(nullptr);
    j["wall_clock_seconds"] = wall_clock_seconds;
    if (trace) {
      j["trace"] = {{"iterations", trace->iterations},
                    {"final_objective", trace->objective_values.empty() ? 0.0 : trace->objective_values.back()},
                    {"converged", trace->converged},
                    {"degenerate", trace->degenerate},
                    {"unanchored_series", trace->unanchored_series}};
    }
    return j;
  }
};

void write_manifest(const RunManifest& manifest, const fs::path& dir) {
  std::ofstream out(dir / kManifestFile, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / kManifestFile).string());
  out << manifest.to_json().dump(2) << "\n";
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

CloudMask optical_mask(const Scene& s) {
  if (s.count(Modality::Optical) == 0) throw UsageError("scene has no optical band");
  CloudMask m;
  m.T = s.T;
  m.H = s.H;
  m.W = s.W;
  m.grid = s.mask(Modality::Optical);
  return m;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructOptions {
  std::string input;
  std::string output;
  std::string method = "damped";
  double alpha = 0.0;
  int rank = 35;
  int max_iters = 0;
  double rel_tol = 1e-6;
  bool optical_only = true;
  bool alpha_given = false;
  bool max_iters_given = false;
};

// Runs the per-series interpolation on the rows selected by optical_only.
SolveResult linear_fill(const ObservationMatrix& obs, bool optical_only) {
  SolveResult out;
  out.X = (obs.M.array() * obs.Y.array()).matrix();
  std::vector<int> chosen;
  for (int c = 0; c < obs.channels; ++c) {
    if (!optical_only || obs.channel_modality[c] == Modality::Optical) chosen.push_back(c);
  }
  const auto C = static_cast<int>(chosen.size());
  RowMatrix Y(static_cast<Index>(obs.T) * C, obs.Y.cols());
  RowMatrix M(Y.rows(), Y.cols());
  for (int t = 0; t < obs.T; ++t) {
    for (int k = 0; k < C; ++k) {
      Y.row(static_cast<Index>(t) * C + k) = obs.Y.row(obs.row(t, chosen[k]));
      M.row(static_cast<Index>(t) * C + k) = obs.M.row(obs.row(t, chosen[k]));
    }
  }
  const InterpResult interp = linear_interp_oracle(Y, M, obs.T);
  for (int t = 0; t < obs.T; ++t) {
    for (int k = 0; k < C; ++k) out.X.row(obs.row(t, chosen[k])) = interp.X.row(static_cast<Index>(t) * C + k);
  }
  out.trace.converged = true;
  out.trace.unanchored_series = interp.empty_series;
  out.trace.degenerate = interp.empty_series > 0;
  return out;
}

int cmd_reconstruct(const ReconstructOptions& opt) {
  Stopwatch clock;
  if (opt.method != "linear" && opt.method != "damped" && opt.method != "mc") {
    throw UsageError("unknown method '" + opt.method + "'");
  }
  const bool mc = opt.method == "mc";
  const double alpha = opt.alpha_given ? opt.alpha : (mc ? 3.0 : 0.5);
  const int max_iters = opt.max_iters_given ? opt.max_iters : (mc ? 200 : 500);
  if (!(alpha >= 0.0)) throw UsageError("--alpha must be nonnegative");
  if (opt.rank < 1) throw UsageError("--rank must be at least 1");
  if (max_iters < 1) throw UsageError("--max-iters must be at least 1");
  if (!(opt.rel_tol > 0.0)) throw UsageError("--rel-tol must be positive");

  const Scene input = read_stack(opt.input);
  if (input.T < 2) throw UsageError("reconstruction needs at least two days");
  const ObservationMatrix obs = matricize(input);

  RunManifest manifest;
  manifest.command = "reconstruct";
  manifest.inputs["input"] = opt.input;
  manifest.outputs["output"] = opt.output;
  manifest.config = {{"method", opt.method}, {"max_iters", max_iters}, {"rel_tol", opt.rel_tol}};

  SolveResult solved;
  bool passthrough_other = false;
  if (opt.method == "linear") {
    solved = linear_fill(obs, opt.optical_only);
    manifest.config["optical_only"] = opt.optical_only;
    passthrough_other = opt.optical_only;
  } else if (opt.method == "damped") {
    DampedConfig cfg;
    cfg.alpha = alpha;
    cfg.max_iters = max_iters;
    cfg.rel_tol = opt.rel_tol;
    cfg.optical_only = opt.optical_only;
    solved = damped_interpolate(obs, cfg);
    manifest.config["alpha"] = alpha;
    manifest.config["optical_only"] = opt.optical_only;
    passthrough_other = opt.optical_only;
  } else {
    if (opt.rank > obs.Y.rows() || opt.rank > obs.Y.cols()) {
      throw UsageError("--rank " + std::to_string(opt.rank) + " exceeds the full rank " +
                       std::to_string(std::min(obs.Y.rows(), obs.Y.cols())));
    }
    MCConfig cfg;
    cfg.rank = opt.rank;
    cfg.alpha = alpha;
    cfg.max_iters = max_iters;
    cfg.rel_tol = opt.rel_tol;
    CompletionResult done = matrix_complete(obs, cfg);
    solved.X = std::move(done.X);
    solved.trace = std::move(done.trace);
    manifest.config["alpha"] = alpha;
    manifest.config["rank"] = opt.rank;
  }

  // Reconstructed modalities become fully observed except pixels whose series
  // had no observation at all; passed-through modalities keep their masks.
  Scene templ = input;
  for (auto& [modality, grid] : templ.clear_mask) {
    if (passthrough_other && modality != Modality::Optical) continue;
    std::fill(grid.begin(), grid.end(), std::uint8_t{1});
  }
  if (!mc) {
    const auto& original = input.mask(Modality::Optical);
    auto& grid = templ.mask(Modality::Optical);
    for (std::size_t p = 0; p < input.pixels(); ++p) {
      bool seen = false;
      for (int t = 0; t < input.T && !seen; ++t) seen = original[t * input.pixels() + p] != 0;
      if (!seen) {
        for (int t = 0; t < input.T; ++t) grid[t * input.pixels() + p] = 0;
      }
    }
  }
  for (int t = 0; t < obs.T; ++t) {
    for (int c = 0; c < obs.channels; ++c) {
      const ValueRange range = obs.channel_range[c];
      auto row = solved.X.row(obs.row(t, c));
      row = row.cwiseMax(range.lo).cwiseMin(range.hi);
    }
  }
  Scene output = dematricize(ObservationMatrix{solved.X, obs.M, obs.T, obs.channels, obs.channel_modality,
                                               obs.channel_range},
                             templ);
  for (int t = 0; t < output.T; ++t) {
    for (int c = 0; c < output.channels(); ++c) {
      for (int h = 0; h < output.H; ++h) {
        for (int w = 0; w < output.W; ++w) {
          if (!output.observed(t, c, h, w)) output.at(t, c, h, w) = 0.0f;
        }
      }
    }
  }

  write_stack(output, opt.output);
  manifest.trace = solved.trace;
  manifest.wall_clock_seconds = clock.seconds();
  write_manifest(manifest, opt.output);
  return kOk;
}

// ----------------------------------------------------------------- cloudsynth

struct CloudsynthOptions {
  std::string input;
  std::string masklib;
  bool blobs = false;
  double target_ratio = 0.5;
  std::uint64_t seed = 0;
  std::string output;
};

int cmd_cloudsynth(const CloudsynthOptions& opt) {
  Stopwatch clock;
  if (opt.blobs == !opt.masklib.empty()) throw UsageError("pass exactly one of --masklib or --blobs");
  if (!(opt.target_ratio >= 0.0 && opt.target_ratio <= 0.99)) throw UsageError("--target-ratio must lie in [0, 0.99]");

  Scene scene = read_stack(opt.input);
  const CloudMask original = optical_mask(scene);
  CloudMask sampled;
  if (opt.blobs) {
    sampled = synth_cloud_blobs(opt.seed, scene.H, scene.W, scene.T, opt.target_ratio);
  } else {
    const auto library = load_mask_library(opt.masklib);
    try {
      sampled = sample_library_mask(library, scene.T, scene.H, scene.W, opt.seed);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const SyntheticHoldout split = synthesize_holdout(original, sampled);

  scene.mask(Modality::Optical) = split.combined.grid;
  for (int t = 0; t < scene.T; ++t) {
    for (int c = 0; c < scene.channels(); ++c) {
      if (scene.bands[c].modality != Modality::Optical) continue;
      for (int h = 0; h < scene.H; ++h) {
        for (int w = 0; w < scene.W; ++w) {
          if (split.combined.at(t, h, w) == 0) scene.at(t, c, h, w) = 0.0f;
        }
      }
    }
  }
  write_stack(scene, opt.output);
  write_mask_file(split.holdout, fs::path(opt.output) / kHoldoutFile);

  std::size_t held = 0;
  for (auto v : split.holdout.grid) held += v;
  RunManifest manifest;
  manifest.command = "cloudsynth";
  manifest.seed = opt.seed;
  manifest.inputs = {{"input", opt.input}, {"masklib", opt.masklib}};
  manifest.outputs = {{"output", opt.output}, {"holdout", kHoldoutFile}};
  manifest.config = {{"source", opt.blobs ? "blobs" : "masklib"},
                     {"target_ratio", opt.target_ratio},
                     {"original_cloud_ratio", cloud_ratio(original)},
                     {"combined_cloud_ratio", cloud_ratio(split.combined)},
                     {"holdout_pixels", held}};
  manifest.wall_clock_seconds = clock.seconds();
  write_manifest(manifest, opt.output);
  return kOk;
}

// ------------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string pred;
  std::string truth;
  std::string holdout;
  std::string manifest;
  std::string out_dir;
};

struct EvalEntry {
  std::string pred;
  std::string truth;
  std::string holdout;
  std::string method;
  std::string name;
  std::optional<double> cloud_ratio;
};

std::string method_of(const std::string& pred_dir) {
  std::ifstream in(fs::path(pred_dir) / kManifestFile);
  if (!in) return "pred";
  try {
    const json j = json::parse(in);
    return j.at("config").at("method").get<std::string>();
  } catch (const json::exception&) {
    return "pred";
  }
}

struct LoadedEntry {
  Scene pred;
  Scene truth;
  CloudMask holdout;
  CloudMask combined;
};

LoadedEntry load_entry(const EvalEntry& e) {
  LoadedEntry out{read_stack(e.pred), read_stack(e.truth), {}, {}};
  const Scene masked = read_stack(e.holdout);
  if (out.pred.T != out.truth.T || out.pred.H != out.truth.H || out.pred.W != out.truth.W ||
      out.pred.bands != out.truth.bands) {
    throw UsageError("prediction and truth containers differ in shape or bands");
  }
  if (masked.T != out.pred.T || masked.H != out.pred.H || masked.W != out.pred.W) {
    throw UsageError("holdout container shape differs from the prediction");
  }
  out.combined = optical_mask(masked);
  out.holdout = read_mask_file(fs::path(e.holdout) / kHoldoutFile, masked.T, masked.H, masked.W);
  for (std::size_t i = 0; i < out.holdout.size(); ++i) {
    if (out.holdout.grid[i] != 0 && out.combined.grid[i] != 0) {
      throw UsageError("holdout pixels must be cloudy in the holdout container's mask");
    }
  }
  return out;
}

std::vector<EvalEntry> read_eval_manifest(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot open manifest " + file);
  std::vector<EvalEntry> entries;
  try {
    const json j = json::parse(in);
    const json& list = j.is_array() ? j : j.at("entries");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const json& item = list[k];
      EvalEntry e;
      e.pred = item.at("pred").get<std::string>();
      e.truth = item.at("truth").get<std::string>();
      e.holdout = item.at("holdout").get<std::string>();
      e.method = item.contains("method") ? item.at("method").get<std::string>() : method_of(e.pred);
      e.name = item.contains("name") ? item.at("name").get<std::string>() : e.method + "/" + std::to_string(k);
      if (item.contains("cloud_ratio")) e.cloud_ratio = item.at("cloud_ratio").get<double>();
      entries.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw UsageError("malformed manifest: " + std::string(ex.what()));
  }
  if (entries.empty()) throw UsageError("manifest lists no entries");
  return entries;
}

int cmd_evaluate(const EvaluateOptions& opt) {
  Stopwatch clock;
  const bool single = !opt.pred.empty() || !opt.truth.empty() || !opt.holdout.empty();
  if (single == !opt.manifest.empty()) {
    throw UsageError("pass either --pred/--truth/--holdout or --manifest");
  }
  std::vector<EvalEntry> entries;
  if (single) {
    if (opt.pred.empty() || opt.truth.empty() || opt.holdout.empty()) {
      throw UsageError("--pred, --truth and --holdout are required together");
    }
    const std::string method = method_of(opt.pred);
    entries.push_back({opt.pred, opt.truth, opt.holdout, method, method, std::nullopt});
  } else {
    entries = read_eval_manifest(opt.manifest);
  }

  std::vector<EvalReport> reports;
  std::map<std::string, std::vector<EntryError>> errors_by_method;
  std::vector<std::string> method_order;
  json entry_log = json::array();
  for (const auto& e : entries) {
    const LoadedEntry loaded = load_entry(e);
    EvalReport report;
    evaluate_subset(loaded.pred, loaded.truth, syn_subset(loaded.holdout), e.name, report);
    evaluate_subset(loaded.pred, loaded.truth, all_subset(loaded.holdout, loaded.combined), e.name, report);
    reports.push_back(std::move(report));

    const double ratio = e.cloud_ratio.value_or(cloud_ratio(loaded.combined));
    json logged = {{"pred", e.pred}, {"truth", e.truth}, {"holdout", e.holdout}, {"cloud_ratio", ratio}};
    const bool has_syn = std::any_of(loaded.holdout.grid.begin(), loaded.holdout.grid.end(), [](auto v) { return v != 0; });
    if (has_syn) {
      if (!errors_by_method.contains(e.method)) method_order.push_back(e.method);
      errors_by_method[e.method].push_back({ratio, scene_mae(loaded.pred, loaded.truth, loaded.holdout)});
    }
    entry_log.push_back(logged);
  }

  if (!single) {
    EvalReport binned;
    const auto edges = ratio_bin_edges();
    for (const auto& method : method_order) {
      for (const auto& stats : bin_entry_errors(errors_by_method[method], edges)) binned.binned.push_back({method, stats});
    }
    reports.push_back(std::move(binned));
  }
  write_report_csv(reports, opt.out_dir);

  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.inputs = {{"entries", entry_log}};
  if (!single) manifest.inputs["manifest"] = opt.manifest;
  manifest.outputs = {{"metrics", "metrics.csv"}, {"binned", "binned.csv"}};
  manifest.config = {{"bins", ratio_bin_edges()}, {"peak", 1.0}};
  manifest.wall_clock_seconds = clock.seconds();
  write_manifest(manifest, opt.out_dir);
  return kOk;
}

// ---------------------------------------------------------------------- index

struct IndexOptions {
  std::string input;
  std::string type;
  int day = 0;
  std::string output;
};

int cmd_index(const IndexOptions& opt) {
  Stopwatch clock;
  IndexType type;
  try {
    type = index_type_from_string(opt.type);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const IndexPreset preset = index_preset(type);
  const Scene scene = read_stack(opt.input);
  const auto a = find_band(scene.bands, preset.band_a);
  if (!a) throw UsageError(preset.name + " needs band " + preset.band_a + ", which the scene lacks");
  const auto b = find_band(scene.bands, preset.band_b);
  if (!b) throw UsageError(preset.name + " needs band " + preset.band_b + ", which the scene lacks");
  if (opt.day < 0 || opt.day >= scene.T) {
    throw UsageError("--day " + std::to_string(opt.day) + " outside [0, " + std::to_string(scene.T - 1) + "]");
  }

  const std::size_t n = scene.pixels();
  std::vector<double> va(n);
  std::vector<double> vb(n);
  std::vector<std::uint8_t> clear(n);
  for (int h = 0; h < scene.H; ++h) {
    for (int w = 0; w < scene.W; ++w) {
      const std::size_t p = static_cast<std::size_t>(h) * scene.W + w;
      va[p] = scene.at(opt.day, *a, h, w);
      vb[p] = scene.at(opt.day, *b, h, w);
      clear[p] = scene.observed(opt.day, *a, h, w) && scene.observed(opt.day, *b, h, w) ? 1 : 0;
    }
  }
  const std::vector<double> index = normalized_difference(va, vb);

  Scene out = make_scene({{preset.name, Modality::Index, default_range(Modality::Index)}}, 1, scene.H, scene.W);
  out.mask(Modality::Index) = clear;
  for (std::size_t p = 0; p < n; ++p) out.data[p] = clear[p] ? static_cast<float>(index[p]) : 0.0f;
  if (!scene.dates.empty()) out.dates = {scene.dates[opt.day]};
  write_stack(out, opt.output);

  RunManifest manifest;
  manifest.command = "index";
  manifest.inputs = {{"input", opt.input}};
  manifest.outputs = {{"output", opt.output}};
  manifest.config = {{"type", opt.type}, {"day", opt.day}, {"band_a", scene.bands[*a].name},
                     {"band_b", scene.bands[*b].name}};
  manifest.wall_clock_seconds = clock.seconds();
  write_manifest(manifest, opt.output);
  return kOk;
}

// ------------------------------------------------------------------- simulate

struct SimulateOptions {
  std::uint64_t seed = 0;
  int rank = 3;
  std::string dims = "24,4,2,64,64";
  double noise = 0.01;
  double target_ratio = 0.5;
  std::string out_dir;
};

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--dims expects T,C1,C2,H,W integers, got '" + text + "'");
    }
  }
  if (out.size() != 5) throw UsageError("--dims expects five values T,C1,C2,H,W");
  return out;
}

int cmd_simulate(const SimulateOptions& opt) {
  Stopwatch clock;
  const auto dims = parse_dims(opt.dims);
  SynthSpec spec;
  spec.seed = opt.seed;
  spec.rank = opt.rank;
  spec.T = dims[0];
  spec.optical = dims[1];
  spec.sar = dims[2];
  spec.H = dims[3];
  spec.W = dims[4];
  spec.noise_sigma = opt.noise;
  spec.target_cloud_ratio = opt.target_ratio;
  try {
    validate(spec);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const SynthScene synth = synth_scene(spec);

  const fs::path root(opt.out_dir);
  write_stack(synth.truth, root / "truth");
  write_stack(synth.observed, root / "observed");
  // The mask container doubles as a mask-library entry: its optical mask is
  // the cloud mask and its single band is 1 where clear.
  Scene mask_scene = make_scene({optical_band("clear")}, spec.T, spec.H, spec.W);
  mask_scene.mask(Modality::Optical) = synth.mask.grid;
  for (std::size_t i = 0; i < synth.mask.size(); ++i) mask_scene.data[i] = synth.mask.grid[i];
  write_stack(mask_scene, root / "mask");

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.seed = opt.seed;
  manifest.outputs = {{"truth", "truth"}, {"observed", "observed"}, {"mask", "mask"}};
  manifest.config = {{"rank", opt.rank}, {"dims", dims}, {"noise", opt.noise}, {"target_ratio", opt.target_ratio},
                     {"achieved_cloud_ratio", cloud_ratio(synth.mask)}};
  manifest.wall_clock_seconds = clock.seconds();
  write_manifest(manifest, root);
  return kOk;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::SingularGram:
      case ErrorCode::NoValidPositions:
        return kSolverFailure;
      default:
        return kUsage;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Cloud gap filling for optical + SAR image stacks"};
  app.require_subcommand(1);

  ReconstructOptions rec;
  auto* reconstruct = app.add_subcommand("reconstruct", "Fill cloudy pixels of a stack container");
  reconstruct->add_option("--input", rec.input, "Input container")->required();
  reconstruct->add_option("--output", rec.output, "Output container")->required();
  reconstruct->add_option("--method", rec.method, "linear | damped | mc")->capture_default_str();
  auto* alpha_opt = reconstruct->add_option("--alpha", rec.alpha, "Damping coefficient (0.5 damped, 3 mc)");
  reconstruct->add_option("--rank", rec.rank, "Matrix completion rank")->capture_default_str();
  auto* iters_opt = reconstruct->add_option("--max-iters", rec.max_iters, "Iteration cap (500 damped, 200 mc)");
  reconstruct->add_option("--rel-tol", rec.rel_tol, "Relative objective tolerance")->capture_default_str();
  reconstruct->add_option("--optical-only", rec.optical_only, "Solve only optical rows (linear, damped)")
      ->capture_default_str();

  CloudsynthOptions syn;
  auto* cloudsynth = app.add_subcommand("cloudsynth", "Add synthetic clouds and record the holdout");
  cloudsynth->add_option("--input", syn.input, "Input container")->required();
  auto* lib_opt = cloudsynth->add_option("--masklib", syn.masklib, "Directory of mask containers");
  auto* blob_opt = cloudsynth->add_flag("--blobs", syn.blobs, "Draw random ellipse clouds");
  lib_opt->excludes(blob_opt);
  cloudsynth->add_option("--target-ratio", syn.target_ratio, "Cloud ratio for --blobs")->capture_default_str();
  cloudsynth->add_option("--seed", syn.seed, "Random seed")->capture_default_str();
  cloudsynth->add_option("--output", syn.output, "Output container")->required();

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions on syn/all pixel subsets");
  evaluate->add_option("--pred", ev.pred, "Predicted container");
  evaluate->add_option("--truth", ev.truth, "Ground-truth container");
  evaluate->add_option("--holdout", ev.holdout, "Container written by cloudsynth");
  evaluate->add_option("--manifest", ev.manifest, "JSON list of {pred, truth, holdout[, method, name, cloud_ratio]}");
  evaluate->add_option("--out-dir", ev.out_dir, "Directory for metrics.csv and binned.csv")->required();

  IndexOptions ix;
  auto* index = app.add_subcommand("index", "Normalized-difference index for one day");
  index->add_option("--input", ix.input, "Input container")->required();
  index->add_option("--type", ix.type, "ndvi | ndwi | nbr")->required();
  index->add_option("--day", ix.day, "Day index")->capture_default_str();
  index->add_option("--output", ix.output, "Output container")->required();

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Write a planted synthetic scene");
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--rank", sim.rank, "Planted rank")->capture_default_str();
  simulate->add_option("--dims", sim.dims, "T,C1,C2,H,W")->capture_default_str();
  simulate->add_option("--noise", sim.noise, "Noise standard deviation")->capture_default_str();
  simulate->add_option("--target-ratio", sim.target_ratio, "Cloud ratio")->capture_default_str();
  simulate->add_option("--out-dir", sim.out_dir, "Output directory")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  rec.alpha_given = alpha_opt->count() > 0;
  rec.max_iters_given = iters_opt->count() > 0;

  if (reconstruct->parsed()) return guarded([&] { return cmd_reconstruct(rec); });
  if (cloudsynth->parsed()) return guarded([&] { return cmd_cloudsynth(syn); });
  if (evaluate->parsed()) return guarded([&] { return cmd_evaluate(ev); });
  if (index->parsed()) return guarded([&] { return cmd_index(ix); });
  if (simulate->parsed()) return guarded([&] { return cmd_simulate(sim); });
  return kUsage;
}

}  // namespace cloudfill::cli

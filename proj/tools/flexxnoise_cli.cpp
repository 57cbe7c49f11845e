// flexxnoise — render / inject / fit / validate / bench / presets.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error,
// 3 internal error. Every failure prints one line to stderr.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flexxnoise/calibration.hpp"
#include "flexxnoise/frame_io.hpp"
#include "flexxnoise/inject.hpp"
#include "flexxnoise/noise_model.hpp"
#include "flexxnoise/scene.hpp"
#include "flexxnoise/validation.hpp"

namespace fs = std::filesystem;
using namespace flexxnoise;

namespace {

PlanarScene make_scene(double distance, double angle, double extent,
                       const std::string& background) {
  PlanarScene scene;
  scene.plane_distance_m = distance;
  scene.incidence_angle_deg = angle;
  scene.plane_extent_m = extent;
  if (background != "invalid") {
    try {
      std::size_t pos = 0;
      scene.background_depth_m = std::stod(background, &pos);
      if (pos != background.size()) throw std::invalid_argument(background);
    } catch (const std::exception&) {
      throw DomainError("--background must be a depth in meters or 'invalid'");
    }
  }
  validate(scene);
  return scene;
}

NoiseModelCoefficients resolve_coefficients(const std::string& mode,
                                            const std::string& coeffs_path) {
  if (!mode.empty() && !coeffs_path.empty()) {
    throw DomainError("--mode and --coeffs are mutually exclusive");
  }
  if (!mode.empty()) {
    if (auto preset = find_preset(mode)) return preset->coefficients;
    std::string known;
    for (const ModePreset& p : mode_presets()) {
      known += (known.empty() ? "" : ", ") + p.mode_id;
    }
    throw DataError("no fitted coefficients for mode '" + mode +
                    "'; bundled: " + known);
  }
  if (!coeffs_path.empty()) return load_coefficients(coeffs_path);
  throw DomainError("one of --mode or --coeffs is required");
}

/// Dataset-directory scan: every regular file with a sidecar is a stack;
/// filenames are cosmetic, the sidecar is authoritative. Sorted for
/// determinism.
struct DatasetEntry {
  std::string path;
  FrameStack stack;
  std::optional<PlanarScene> scene;

  /// Stacks rendered over a finite background contain the depth step the
  /// lateral model is measured on; pure-plane stacks feed the axial side.
  bool is_edge_stack() const {
    return scene.has_value() && scene->background_depth_m.has_value();
  }
};

std::vector<DatasetEntry> load_dataset(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string p = entry.path().string();
    if (p.size() >= std::string(kSidecarSuffix).size() &&
        p.ends_with(kSidecarSuffix)) {
      continue;
    }
    if (!fs::exists(p + kSidecarSuffix)) continue;
    paths.push_back(p);
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) {
    throw DataError("no stacks with " + std::string(kSidecarSuffix) +
                    " sidecars in " + dir);
  }
  std::vector<DatasetEntry> entries;
  entries.reserve(paths.size());
  for (const std::string& p : paths) {
    DatasetEntry e;
    e.path = p;
    e.stack = read_stack(p);
    e.scene = read_stack_scene(p);
    entries.push_back(std::move(e));
  }
  return entries;
}

int run_render(double distance, double angle, const std::string& mode,
               int frames, const std::string& out, double extent,
               const std::string& background) {
  if (frames < 1) throw DomainError("--frames must be >= 1");
  const PlanarScene scene = make_scene(distance, angle, extent, background);
  const CameraIntrinsics k = default_intrinsics();
  const DepthFrame frame = render_scene(scene, k);

  FrameStack stack;
  stack.condition = {mode, distance, angle, k};
  stack.frames.assign(frames, frame);
  write_stack(stack, out, scene);
  std::cout << "wrote " << frames << " clean frame(s) to " << out << "\n";
  return 0;
}

int run_inject(const std::string& in, const std::string& out,
               const std::string& mode, const std::string& coeffs_path,
               std::uint64_t seed, const std::string& lateral, bool no_axial,
               const std::string& angle_source, double theta_fallback_deg) {
  InjectionConfig config;
  config.coefficients = resolve_coefficients(mode, coeffs_path);
  config.seed = seed;
  config.axial_enabled = !no_axial;
  config.theta_fallback_rad = deg_to_rad(theta_fallback_deg);
  if (lateral == "iso") {
    config.lateral_mode = LateralMode::kIsotropic;
  } else if (lateral == "x") {
    config.lateral_mode = LateralMode::kXOnly;
  } else {
    config.lateral_mode = LateralMode::kOff;
  }
  config.angle_source = angle_source == "analytic"
                            ? AngleSource::kAnalytic
                            : AngleSource::kEstimatedNormals;
  if (config.is_noop()) {
    std::cerr << "warning: configuration injects no noise; output equals input\n";
  }

  FrameStack stack = read_stack(in);
  const std::optional<PlanarScene> scene = read_stack_scene(in);
  if (config.angle_source == AngleSource::kAnalytic && !scene) {
    throw DataError("--angle-source analytic needs a stack with scene metadata");
  }
  const PlanarScene* scene_ptr = scene ? &*scene : nullptr;
  for (std::size_t i = 0; i < stack.frames.size(); ++i) {
    stack.frames[i] = inject(stack.frames[i], stack.condition.intrinsics,
                             config, i, scene_ptr);
  }
  write_stack(stack, out, scene);
  std::cout << "injected " << stack.frames.size() << " frame(s) to " << out
            << "\n";
  return 0;
}

int run_fit(const std::string& dataset, const std::string& out) {
  const std::vector<DatasetEntry> entries = load_dataset(dataset);

  std::map<std::string, ModeFitReport> modes;
  for (const DatasetEntry& e : entries) {
    ModeFitReport& mode = modes[e.stack.condition.mode_id];
    mode.mode_id = e.stack.condition.mode_id;
    if (e.is_edge_stack()) {
      const PixelRect band =
          edge_search_band(*e.scene, e.stack.condition.intrinsics);
      mode.lateral_samples.push_back(extract_edge_sample(e.stack, band));
    } else {
      mode.axial_samples.push_back(analyze_axial_stack(e.stack).sample);
    }
  }

  FitReport report;
  for (auto& [id, mode] : modes) {
    try {
      mode.axial_fit = fit_axial_model(mode.axial_samples);
    } catch (const Error& err) {
      mode.skipped.push_back("axial fit: " + std::string(err.what()));
    }
    if (!mode.lateral_samples.empty()) {
      mode.sigma_x_px = fit_lateral_sigma(mode.lateral_samples);
    } else {
      mode.skipped.push_back("lateral fit: no edge stacks in the dataset");
    }
    report.modes.push_back(std::move(mode));
  }

  write_text_atomic(out, fit_report_to_json(report));
  for (const ModeFitReport& mode : report.modes) {
    std::cout << mode.mode_id << ":";
    if (mode.axial_fit) {
      const NoiseModelCoefficients& c = mode.axial_fit->coefficients;
      std::printf(" n=%.1f a=%.6f b=%.6f c=%.6f d=%.6f", c.n, c.a, c.b, c.c,
                  c.d);
    }
    if (mode.sigma_x_px) std::printf(" sigma_x=%.3f px", *mode.sigma_x_px);
    for (const std::string& s : mode.skipped) std::cout << " [" << s << "]";
    std::cout << "\n";
  }
  std::cout << "wrote fit report to " << out << "\n";
  return 0;
}

int run_validate(const std::string& dataset, const std::string& coeffs_path,
                 const std::string& out, const std::string& format) {
  const NoiseModelCoefficients coeffs = load_coefficients(coeffs_path);
  const std::vector<DatasetEntry> entries = load_dataset(dataset);

  KlReport report;
  for (const DatasetEntry& e : entries) {
    KlEntry entry;
    entry.condition = e.stack.condition;
    if (e.is_edge_stack()) {
      const PixelRect band =
          edge_search_band(*e.scene, e.stack.condition.intrinsics);
      const EdgeObservation obs = extract_edge(e.stack, band);
      entry.lateral_nats = lateral_kl(obs.residuals(), coeffs.sigma_x);
      entry.lateral_count = static_cast<long>(obs.columns.size());
    } else {
      const AxialAnalysis analysis = analyze_axial_stack(e.stack);
      const AxialKlResult r =
          axial_kl(e.stack, analysis.roi, analysis.plane, coeffs);
      entry.axial_nats = r.mean_nats;
      entry.axial_pixel_count = r.pixel_count;
      entry.axial_skipped = r.skipped;
    }
    report.entries.push_back(std::move(entry));
  }

  const ReportFormat fmt =
      format == "text" ? ReportFormat::kText : ReportFormat::kJson;
  const std::string rendered = emit_report(report, fmt);
  if (out.empty()) {
    std::cout << rendered;
  } else {
    write_text_atomic(out, rendered);
    std::cout << "wrote validation report to " << out << "\n";
  }
  return 0;
}

int run_bench(int frames, const std::string& mode, double budget_ms) {
  if (frames < 1) throw DomainError("--frames must be >= 1");
  InjectionConfig config;
  config.coefficients = resolve_coefficients(mode, "");
  config.seed = 1;  // fixed: bench results are reproducible
  const BenchResult r = run_injection_bench(config, frames);
  std::printf("injection latency over %d frames (%s, axial + isotropic lateral)\n",
              r.frames, mode.c_str());
  std::printf("p50 %.3f ms   p99 %.3f ms   mean %.3f ms\n", r.p50_ms, r.p99_ms,
              r.mean_ms);
  if (budget_ms > 0.0 && r.p50_ms > budget_ms) {
    throw DataError("p50 " + std::to_string(r.p50_ms) +
                    " ms exceeds the budget of " + std::to_string(budget_ms) +
                    " ms");
  }
  return 0;
}

int run_presets(bool as_json, const std::string& export_dir) {
  const std::vector<ModePreset>& presets = mode_presets();
  if (as_json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ModePreset& p : presets) {
      arr.push_back(nlohmann::json::parse(coefficients_to_json(p.coefficients)));
    }
    std::cout << arr.dump(2) << "\n";
  } else {
    for (const ModePreset& p : presets) {
      std::printf(
          "%-14s %2.0f fps  %.1f-%.1f m  a=%.6f b=%.6f c=%.6f d=%.6f n=%.1f "
          "sigma_x=%.3f\n",
          p.mode_id.c_str(), p.frame_rate_hz, p.range_min_m, p.range_max_m,
          p.coefficients.a, p.coefficients.b, p.coefficients.c,
          p.coefficients.d, p.coefficients.n, p.coefficients.sigma_x);
    }
  }
  if (!export_dir.empty()) {
    fs::create_directories(export_dir);
    for (const ModePreset& p : presets) {
      save_coefficients(p.coefficients,
                        (fs::path(export_dir) / (p.mode_id + ".json")).string());
    }
    std::cout << "exported " << presets.size() << " coefficient files to "
              << export_dir << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-camera noise toolkit: evaluate, inject, re-fit and "
               "validate the axial/lateral Gaussian noise model"};
  app.require_subcommand(1);

  // render
  double r_distance = 1.0, r_angle = 0.0, r_extent = 0.5;
  std::string r_mode, r_out, r_background = "invalid";
  int r_frames = 1;
  CLI::App* render =
      app.add_subcommand("render", "Render a clean synthetic planar-target stack");
  render->add_option("--distance", r_distance, "Plane distance on the optical axis (m)")
      ->required();
  render->add_option("--angle", r_angle, "Incidence angle (deg)")->required();
  render->add_option("--mode", r_mode, "Operating mode id (checks its distance range)")
      ->required();
  render->add_option("--frames", r_frames, "Number of identical clean frames")->capture_default_str();
  render->add_option("--out", r_out, "Output stack path")->required();
  render->add_option("--extent", r_extent, "Target half-extent (m)")->capture_default_str();
  render->add_option("--background", r_background,
                     "Background depth (m) or 'invalid'")->capture_default_str();

  // inject
  std::string i_in, i_out, i_mode, i_coeffs, i_lateral = "iso",
                                             i_angle_source = "normals";
  std::uint64_t i_seed = 0;
  bool i_no_axial = false;
  double i_theta_fallback = 0.0;
  CLI::App* inject_cmd =
      app.add_subcommand("inject", "Add modeled sensor noise to a stack");
  inject_cmd->add_option("--in", i_in, "Input stack path")->required();
  inject_cmd->add_option("--out", i_out, "Output stack path")->required();
  inject_cmd->add_option("--mode", i_mode, "Bundled fitted mode id");
  inject_cmd->add_option("--coeffs", i_coeffs, "Coefficient JSON file");
  inject_cmd->add_option("--seed", i_seed, "Noise seed")->capture_default_str();
  inject_cmd->add_option("--lateral", i_lateral, "Lateral noise: iso, x or off")->capture_default_str()
      ->check(CLI::IsMember({"iso", "x", "off"}));
  inject_cmd->add_flag("--no-axial", i_no_axial, "Disable axial noise");
  inject_cmd
      ->add_option("--angle-source", i_angle_source,
                   "Incidence angles: normals (estimated) or analytic")->capture_default_str()
      ->check(CLI::IsMember({"normals", "analytic"}));
  inject_cmd->add_option("--theta-fallback", i_theta_fallback,
                         "Incidence (deg) where no estimate exists")->capture_default_str();

  // fit
  std::string f_dataset, f_out;
  CLI::App* fit = app.add_subcommand(
      "fit", "Fit noise-model coefficients from a dataset of stacks");
  fit->add_option("--dataset", f_dataset, "Directory of stacks with sidecars")
      ->required()
      ->check(CLI::ExistingDirectory);
  fit->add_option("--out", f_out, "Fit report JSON path")->required();

  // validate
  std::string v_dataset, v_coeffs, v_out, v_format = "json";
  CLI::App* validate_cmd = app.add_subcommand(
      "validate", "KL divergence of a coefficient set against a dataset");
  validate_cmd->add_option("--dataset", v_dataset, "Directory of stacks with sidecars")
      ->required()
      ->check(CLI::ExistingDirectory);
  validate_cmd->add_option("--coeffs", v_coeffs, "Coefficient JSON file")
      ->required();
  validate_cmd->add_option("--out", v_out, "Report path (stdout when omitted)");
  validate_cmd->add_option("--format", v_format, "json or text")->capture_default_str()
      ->check(CLI::IsMember({"json", "text"}));

  // bench
  int b_frames = 1000;
  std::string b_mode = "Mode_5_60fps";
  double b_budget = 0.0;
  CLI::App* bench =
      app.add_subcommand("bench", "Single-thread injection latency benchmark");
  bench->add_option("--frames", b_frames, "Frames to measure")->capture_default_str();
  bench->add_option("--mode", b_mode, "Bundled fitted mode id")->capture_default_str();
  bench->add_option("--budget-ms", b_budget,
                    "Fail (exit 2) when p50 exceeds this many ms");

  // presets
  bool p_json = false;
  std::string p_export;
  CLI::App* presets =
      app.add_subcommand("presets", "Print the bundled fitted coefficient sets");
  presets->add_flag("--json", p_json, "Print as a JSON array");
  presets->add_option("--export", p_export,
                      "Also write one coefficient JSON file per mode into DIR");

  try {
    app.parse(argc, argv);
    if (render->parsed()) {
      return run_render(r_distance, r_angle, r_mode, r_frames, r_out, r_extent,
                        r_background);
    }
    if (inject_cmd->parsed()) {
      return run_inject(i_in, i_out, i_mode, i_coeffs, i_seed, i_lateral,
                        i_no_axial, i_angle_source, i_theta_fallback);
    }
    if (fit->parsed()) return run_fit(f_dataset, f_out);
    if (validate_cmd->parsed()) {
      return run_validate(v_dataset, v_coeffs, v_out, v_format);
    }
    if (bench->parsed()) return run_bench(b_frames, b_mode, b_budget);
    if (presets->parsed()) return run_presets(p_json, p_export);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}

#pragma once

#include <cstdint>
#include <vector>

#include "flexxnoise/frame.hpp"
#include "flexxnoise/scene.hpp"

namespace flexxnoise {

enum class LateralMode { kIsotropic, kXOnly, kOff };
enum class AngleSource { kEstimatedNormals, kAnalytic };

struct InjectionConfig {
  NoiseModelCoefficients coefficients;
  std::uint64_t seed = 0;
  LateralMode lateral_mode = LateralMode::kIsotropic;
  bool axial_enabled = true;
  AngleSource angle_source = AngleSource::kEstimatedNormals;
  /// Used where the per-pixel incidence is unknown (NaN in the angle map).
  /// Zero is conservative; set to 60 degrees worth of radians for a
  /// worst-case noise mode.
  double theta_fallback_rad = 0.0;

  /// True when the config injects nothing at all (identity map).
  bool is_noop() const {
    return !axial_enabled && lateral_mode == LateralMode::kOff;
  }
};

/// Per-pixel incidence angle (radians) between the viewing ray and the local
/// surface normal, estimated by central differences on the re-projected
/// point cloud. NaN wherever the 4-neighbor stencil has an invalid pixel or
/// leaves the frame; values are clamped to [0, 75 deg].
Image<float> estimate_incidence_map(const DepthFrame& frame,
                                    const CameraIntrinsics& k);

/// Apply the noise model to one clean frame.
///
/// Lateral stage first: each output pixel reads the input at a
/// nearest-neighbor source location shifted by a Gaussian offset with std
/// sigma_x. Offsets are drawn once per row (horizontal) and once per column
/// (vertical), so a depth edge shifts coherently along each scanline; this
/// reproduces the edge-position jitter the lateral model is calibrated on.
/// Source coordinates clamp to the frame; NaN sources stay NaN.
///
/// Axial stage second: every valid pixel gets an independent N(0, sigma_z^2)
/// draw added, with sigma_z evaluated at the post-lateral depth and the
/// per-pixel incidence angle (estimated from the frame, or analytic when a
/// scene is supplied).
///
/// All draws are keyed by (seed, frame_index, row/column/pixel index), so
/// the output is a pure function of its arguments.
DepthFrame inject(const DepthFrame& frame, const CameraIntrinsics& k,
                  const InjectionConfig& config, std::uint64_t frame_index = 0,
                  const PlanarScene* scene = nullptr);

/// `count` independent injections of one clean frame, frame-indexed 0..count-1.
FrameStack inject_stack(const DepthFrame& clean, const CaptureCondition& condition,
                        const InjectionConfig& config, int count,
                        const PlanarScene* scene = nullptr);

/// Single-threaded injection throughput on a representative 224 x 172 scene.
struct BenchResult {
  int frames = 0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
  double mean_ms = 0.0;
};

BenchResult run_injection_bench(const InjectionConfig& config, int frames);

}  // namespace flexxnoise

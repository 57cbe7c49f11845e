#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flexxnoise/frame.hpp"
#include "flexxnoise/noise_model.hpp"

namespace flexxnoise {

/// Total-least-squares plane, n . p = offset with |n| = 1.
struct PlaneFit {
  Vec3d normal = Vec3d::UnitZ();
  double offset_m = 0.0;        // signed distance of the plane from the origin
  double rms_residual_m = 0.0;  // orthogonal RMS distance of the points
  long inlier_count = 0;
};

/// Z-depth of the plane along the viewing ray of pixel (x, y).
double plane_depth_at(const PlaneFit& plane, const CameraIntrinsics& k,
                      double x, double y);

/// One (z, theta, sigma) data point for the axial model fit, aggregated over
/// a capture condition.
struct AxialSample {
  double z_m = 0.0;              // mean plane depth over the ROI
  double theta_rad = 0.0;        // plane normal vs mean viewing direction
  double sigma_measured_m = 0.0; // mean of per-pixel temporal stds
  long pixel_count = 0;
};

/// Edge-jitter std measured for one condition.
struct LateralSample {
  CaptureCondition condition;
  double sigma_px = 0.0;
};

/// Per-pixel temporal statistics of a stack. `count` is the number of frames
/// in which the pixel is valid; mean/std are over those frames (std with the
/// N-1 denominator, NaN where count < 2).
struct TemporalStats {
  Image<float> mean;
  Image<float> stddev;
  Image<std::int32_t> count;
};

TemporalStats temporal_statistics(const FrameStack& stack);

/// Fraction of frames a pixel must be valid in to enter any statistic.
inline constexpr double kMinValidFraction = 0.5;

/// Minimum frames for temporal-noise estimation.
inline constexpr int kMinFramesForStats = 30;

/// TLS plane over the re-projected temporal-mean points inside the ROI
/// (pixels passing the validity rule). Throws DataError on degenerate
/// (insufficient or collinear) point sets.
PlaneFit fit_plane(const FrameStack& stack, const PixelRect& roi);
PlaneFit fit_plane_points(const std::vector<Vec3d>& points);

/// Central rectangle covering the middle 40% per axis of the valid-pixel
/// bounding box, clamped one pixel off the frame border. Isolated invalid
/// pixels inside are tolerated (the validity rule drops them later), but a
/// majority-invalid ROI throws DataError.
PixelRect axial_roi(const DepthFrame& frame);

/// Same, on the stack's temporal validity mask: a pixel counts as valid when
/// it passes the validity rule over the whole stack.
PixelRect axial_roi(const FrameStack& stack);

/// Temporal axial-noise statistics over a ROI, aggregated per condition.
AxialSample axial_statistics(const FrameStack& stack, const PixelRect& roi,
                             const PlaneFit& plane);

/// The full per-stack axial pipeline: ROI from the validity mask, TLS plane
/// over the ROI, then temporal statistics.
struct AxialAnalysis {
  PixelRect roi;
  PlaneFit plane;
  AxialSample sample;
};

AxialAnalysis analyze_axial_stack(const FrameStack& stack);

struct EdgeExtractionParams {
  /// Gradient magnitude (m/px) below which a row has no edge.
  double min_step_m = 0.1;
  /// Candidates within this fraction of the row maximum count toward the
  /// ambiguity spread.
  double ambiguity_rel = 0.5;
  /// Candidate spread (px) beyond which a row is ambiguous.
  int ambiguity_width_px = 16;
  /// Error out when more than this fraction of edge-bearing rows is ambiguous.
  double max_ambiguous_fraction = 0.2;
};

/// Per-row edge localization: the edge column of a row is the valid pixel
/// with the largest |d depth / dx| (central difference over valid
/// neighbors, one-sided at validity borders; rightmost on ties). A vertical
/// line (the mean column) is fitted to all rows of all frames; sigma_px is
/// the std about it.
struct EdgeObservation {
  std::vector<int> columns;    // one entry per contributing (frame, row)
  double line_column = 0.0;    // fitted vertical line
  double sigma_px = 0.0;
  long rows_used = 0;
  long rows_ambiguous = 0;

  std::vector<double> residuals() const;
};

EdgeObservation extract_edge(const FrameStack& stack, const PixelRect& band,
                             const EdgeExtractionParams& params = {});

/// Convenience: the edge observation reduced to a fit sample.
LateralSample extract_edge_sample(const FrameStack& stack,
                                  const PixelRect& band,
                                  const EdgeExtractionParams& params = {});

/// Exponent grid for the axial fit; values are snapped to 1e-9 so grid
/// members like 2.7 compare exactly.
struct FitGrid {
  double n_min = -1.0;
  double n_max = 3.0;
  double n_step = 0.1;

  std::vector<double> values() const;
};

struct AxialFitResult {
  NoiseModelCoefficients coefficients;  // sigma_x is left 0
  double mse = 0.0;
  /// (n, mse) per grid member, in grid order; rank-deficient entries are NaN.
  std::vector<std::pair<double, double>> mse_by_n;
};

/// Grid search over the exponent: for each n the model is linear in
/// (a, b, c, d) and solved by least squares; the n with the smallest MSE
/// wins, ties toward smaller n. Requires >= 5 samples spanning >= 2 distinct
/// angles and >= 3 distinct distances.
AxialFitResult fit_axial_model(const std::vector<AxialSample>& samples,
                               const FitGrid& grid = {});

/// q-th quantile with linear interpolation between closest ranks.
double percentile_linear(std::vector<double> values, double q);

/// Conservative lateral std: the 90th percentile of the per-condition
/// sigma_px values.
double fit_lateral_sigma(const std::vector<LateralSample>& samples);

/// Everything the `fit` pipeline learned about one mode.
struct ModeFitReport {
  std::string mode_id;
  std::vector<AxialSample> axial_samples;
  std::vector<LateralSample> lateral_samples;
  std::optional<AxialFitResult> axial_fit;
  std::optional<double> sigma_x_px;
  std::vector<std::string> skipped;  // inputs skipped, with reasons
};

struct FitReport {
  std::vector<ModeFitReport> modes;
};

/// Versioned UTF-8 JSON document; numbers keep full precision.
std::string fit_report_to_json(const FitReport& report);

}  // namespace flexxnoise

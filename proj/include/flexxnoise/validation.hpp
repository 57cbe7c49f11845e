#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexxnoise/calibration.hpp"
#include "flexxnoise/frame.hpp"
#include "flexxnoise/noise_model.hpp"

namespace flexxnoise {

/// Pixel-averaged KL divergence of the empirical axial noise against the
/// model prediction. Pixels failing the validity rule, or with zero
/// temporal variance, are skipped and counted.
struct AxialKlResult {
  std::optional<double> mean_nats;  // empty when no pixel qualifies
  long pixel_count = 0;
  long skipped = 0;
};

/// Per pixel: empirical N(temporal mean, temporal std) vs model
/// N(plane depth, sigma_z(plane depth, theta)) where theta is the angle
/// between the plane normal and the pixel's viewing ray.
AxialKlResult axial_kl(const FrameStack& stack, const PixelRect& roi,
                       const PlaneFit& plane,
                       const NoiseModelCoefficients& coeffs);

/// KL of the edge-column residual distribution against N(0, sigma_x^2).
/// Needs at least `kMinLateralResiduals` residuals with nonzero spread.
inline constexpr int kMinLateralResiduals = 30;

double lateral_kl(const std::vector<double>& residuals_px, double sigma_x_px);

/// Model-vs-measurement divergence for one recorded condition.
struct KlEntry {
  CaptureCondition condition;
  std::optional<double> axial_nats;
  long axial_pixel_count = 0;
  long axial_skipped = 0;
  std::optional<double> lateral_nats;
  long lateral_count = 0;
};

struct KlReport {
  std::vector<KlEntry> entries;
};

/// Pixel-count-weighted axial averages and sample-count-weighted lateral
/// averages, per mode and overall.
struct KlSummary {
  std::map<std::string, double> axial_per_mode;
  std::optional<double> axial_overall;
  std::map<std::string, double> lateral_per_mode;
  std::optional<double> lateral_overall;
};

KlSummary summarize(const KlReport& report);

enum class ReportFormat { kJson, kText };

/// Deterministic rendering: entries ordered by (mode, distance, angle).
/// Text is a mode x angle table of axial nats averaged over distances,
/// followed by per-mode lateral averages; JSON carries every entry.
std::string emit_report(const KlReport& report, ReportFormat format);

}  // namespace flexxnoise

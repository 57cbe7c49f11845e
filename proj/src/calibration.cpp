#include "flexxnoise/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace flexxnoise {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_rect_in_frame(const PixelRect& rect, const DepthFrame& frame,
                         const char* what) {
  if (rect.width <= 0 || rect.height <= 0 || rect.x0 < 0 || rect.y0 < 0 ||
      rect.x1() > frame.width() || rect.y1() > frame.height()) {
    throw DomainError(std::string(what) + " does not fit inside the frame");
  }
}

/// Smallest per-pixel frame count that satisfies the validity rule.
int min_valid_count(int frame_count) {
  return (frame_count + 1) / 2;  // count >= 0.5 * frames
}

}  // namespace

double plane_depth_at(const PlaneFit& plane, const CameraIntrinsics& k,
                      double x, double y) {
  const double denom = plane.normal.dot(k.ray(x, y));
  if (std::abs(denom) < 1e-12) return kNaN;
  return plane.offset_m / denom;
}

TemporalStats temporal_statistics(const FrameStack& stack) {
  validate(stack);
  const int w = stack.width();
  const int h = stack.height();

  Image<double> sum = Image<double>::Zero(h, w);
  Image<double> ssq = Image<double>::Zero(h, w);
  Image<std::int32_t> count = Image<std::int32_t>::Zero(h, w);

  for (const DepthFrame& frame : stack.frames) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float v = frame.depths(y, x);
        if (std::isfinite(v)) {
          sum(y, x) += v;
          ++count(y, x);
        }
      }
    }
  }
  Image<double> mean = (count.cast<double>() > 0.0)
                           .select(sum / count.cast<double>().max(1.0), kNaN);

  // Second pass about the mean keeps the variance of mm-scale noise on
  // metre-scale depths free of cancellation error.
  for (const DepthFrame& frame : stack.frames) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float v = frame.depths(y, x);
        if (std::isfinite(v)) {
          const double d = v - mean(y, x);
          ssq(y, x) += d * d;
        }
      }
    }
  }

  TemporalStats stats;
  stats.mean = mean.cast<float>();
  stats.count = count;
  stats.stddev = DepthImage::Constant(h, w, std::numeric_limits<float>::quiet_NaN());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (count(y, x) >= 2) {
        stats.stddev(y, x) =
            static_cast<float>(std::sqrt(ssq(y, x) / (count(y, x) - 1)));
      }
    }
  }
  return stats;
}

PlaneFit fit_plane_points(const std::vector<Vec3d>& points) {
  if (points.size() < 3) {
    throw DataError("plane fit needs at least 3 points, got " +
                    std::to_string(points.size()));
  }
  Vec3d centroid = Vec3d::Zero();
  for (const Vec3d& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const Vec3d& p : points) {
    const Vec3d d = p - centroid;
    scatter += d * d.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  if (eig.info() != Eigen::Success) {
    throw DataError("plane fit eigendecomposition failed");
  }
  const Vec3d lambda = eig.eigenvalues();  // ascending
  if (lambda(1) <= std::max(lambda(2), 1e-30) * 1e-12) {
    throw DataError("degenerate point set: points are collinear or coincident");
  }

  PlaneFit fit;
  fit.normal = eig.eigenvectors().col(0);
  if (fit.normal.z() < 0.0 ||
      (fit.normal.z() == 0.0 && fit.normal.dot(centroid) < 0.0)) {
    fit.normal = -fit.normal;
  }
  fit.offset_m = fit.normal.dot(centroid);
  fit.rms_residual_m =
      std::sqrt(std::max(0.0, lambda(0)) / static_cast<double>(points.size()));
  fit.inlier_count = static_cast<long>(points.size());
  return fit;
}

PlaneFit fit_plane(const FrameStack& stack, const PixelRect& roi) {
  const TemporalStats stats = temporal_statistics(stack);
  check_rect_in_frame(roi, stack.frames.front(), "ROI");
  const int min_count = min_valid_count(static_cast<int>(stack.frames.size()));
  const CameraIntrinsics& k = stack.condition.intrinsics;

  std::vector<Vec3d> points;
  points.reserve(static_cast<std::size_t>(roi.width) * roi.height);
  for (int y = roi.y0; y < roi.y1(); ++y) {
    for (int x = roi.x0; x < roi.x1(); ++x) {
      if (stats.count(y, x) >= min_count && std::isfinite(stats.mean(y, x))) {
        points.push_back(k.backproject(x, y, stats.mean(y, x)));
      }
    }
  }
  if (points.size() < 3) {
    throw DataError("ROI holds fewer than 3 pixels passing the validity rule");
  }
  return fit_plane_points(points);
}

PixelRect axial_roi(const DepthFrame& frame) {
  const int w = frame.width();
  const int h = frame.height();
  int bx0 = w, by0 = h, bx1 = -1, by1 = -1;  // inclusive valid bounding box
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (frame.valid(x, y)) {
        bx0 = std::min(bx0, x);
        by0 = std::min(by0, y);
        bx1 = std::max(bx1, x);
        by1 = std::max(by1, y);
      }
    }
  }
  if (bx1 < 0) throw DataError("frame has no valid pixels");

  const int bw = bx1 - bx0 + 1;
  const int bh = by1 - by0 + 1;
  PixelRect roi;
  roi.width = std::max(1, static_cast<int>(std::lround(0.4 * bw)));
  roi.height = std::max(1, static_cast<int>(std::lround(0.4 * bh)));
  roi.x0 = bx0 + (bw - roi.width) / 2;
  roi.y0 = by0 + (bh - roi.height) / 2;

  // Keep one pixel away from the frame border.
  roi.x0 = std::max(roi.x0, 1);
  roi.y0 = std::max(roi.y0, 1);
  roi.width = std::min(roi.width, w - 1 - roi.x0);
  roi.height = std::min(roi.height, h - 1 - roi.y0);

  if (roi.width <= 0 || roi.height <= 0) {
    throw DataError("valid region too small for an axial ROI");
  }
  // Isolated dropouts inside the ROI are fine (the per-pixel validity rule
  // drops them later), but a mostly-invalid ROI means the 40% heuristic
  // landed off the target.
  long valid = 0;
  for (int y = roi.y0; y < roi.y1(); ++y) {
    for (int x = roi.x0; x < roi.x1(); ++x) {
      if (frame.valid(x, y)) ++valid;
    }
  }
  const long total = static_cast<long>(roi.width) * roi.height;
  if (valid * 2 < total) {
    throw DataError("axial ROI is mostly invalid pixels");
  }
  return roi;
}

PixelRect axial_roi(const FrameStack& stack) {
  const TemporalStats stats = temporal_statistics(stack);
  const int min_count = min_valid_count(stack.frame_count());
  DepthFrame mask(stack.width(), stack.height());
  for (int y = 0; y < stack.height(); ++y) {
    for (int x = 0; x < stack.width(); ++x) {
      if (stats.count(y, x) >= min_count) mask.at(x, y) = stats.mean(y, x);
    }
  }
  return axial_roi(mask);
}

AxialAnalysis analyze_axial_stack(const FrameStack& stack) {
  AxialAnalysis out;
  out.roi = axial_roi(stack);
  out.plane = fit_plane(stack, out.roi);
  out.sample = axial_statistics(stack, out.roi, out.plane);
  return out;
}

AxialSample axial_statistics(const FrameStack& stack, const PixelRect& roi,
                             const PlaneFit& plane) {
  if (static_cast<int>(stack.frames.size()) < kMinFramesForStats) {
    throw DataError("axial statistics need at least " +
                    std::to_string(kMinFramesForStats) + " frames, got " +
                    std::to_string(stack.frames.size()));
  }
  const TemporalStats stats = temporal_statistics(stack);
  check_rect_in_frame(roi, stack.frames.front(), "ROI");
  const int min_count = min_valid_count(static_cast<int>(stack.frames.size()));
  const CameraIntrinsics& k = stack.condition.intrinsics;

  double sigma_sum = 0.0;
  double z_sum = 0.0;
  Vec3d dir_sum = Vec3d::Zero();
  long n = 0;
  for (int y = roi.y0; y < roi.y1(); ++y) {
    for (int x = roi.x0; x < roi.x1(); ++x) {
      if (stats.count(y, x) < min_count || !std::isfinite(stats.stddev(y, x))) {
        continue;
      }
      const double z = plane_depth_at(plane, k, x, y);
      if (!std::isfinite(z) || z <= 0.0) continue;
      sigma_sum += stats.stddev(y, x);
      z_sum += z;
      dir_sum += k.ray(x, y).normalized();
      ++n;
    }
  }
  if (n == 0) throw DataError("no ROI pixels pass the validity rule");

  AxialSample sample;
  sample.pixel_count = n;
  sample.sigma_measured_m = sigma_sum / static_cast<double>(n);
  sample.z_m = z_sum / static_cast<double>(n);
  const double cos_theta = std::clamp(
      std::abs(plane.normal.dot(dir_sum.normalized())), 0.0, 1.0);
  sample.theta_rad = std::acos(cos_theta);
  return sample;
}

std::vector<double> EdgeObservation::residuals() const {
  std::vector<double> out;
  out.reserve(columns.size());
  for (int c : columns) out.push_back(c - line_column);
  return out;
}

EdgeObservation extract_edge(const FrameStack& stack, const PixelRect& band,
                             const EdgeExtractionParams& params) {
  validate(stack);
  check_rect_in_frame(band, stack.frames.front(), "search band");

  EdgeObservation obs;
  for (const DepthFrame& frame : stack.frames) {
    const int w = frame.width();
    for (int y = band.y0; y < band.y1(); ++y) {
      // Horizontal depth gradient at each valid pixel of the row: central
      // difference when both neighbors are valid, one-sided otherwise.
      std::vector<std::pair<int, double>> grads;
      double gmax = 0.0;
      int argmax = -1;
      for (int x = band.x0; x < band.x1(); ++x) {
        if (!frame.valid(x, y)) continue;
        const bool has_l = x > 0 && frame.valid(x - 1, y);
        const bool has_r = x + 1 < w && frame.valid(x + 1, y);
        double g;
        if (has_l && has_r) {
          g = (frame.at(x + 1, y) - frame.at(x - 1, y)) / 2.0;
        } else if (has_r) {
          g = frame.at(x + 1, y) - frame.at(x, y);
        } else if (has_l) {
          g = frame.at(x, y) - frame.at(x - 1, y);
        } else {
          continue;
        }
        g = std::abs(g);
        grads.emplace_back(x, g);
        // >= keeps the rightmost of tied maxima: a clean step yields equal
        // central differences on both sides of the transition, and the right
        // one is the first pixel of the new surface.
        if (g >= gmax) {
          gmax = g;
          argmax = x;
        }
      }
      if (argmax < 0 || gmax < params.min_step_m) continue;  // no edge here

      int first = argmax, last = argmax;
      for (const auto& [x, g] : grads) {
        if (g >= params.ambiguity_rel * gmax) {
          first = std::min(first, x);
          last = std::max(last, x);
        }
      }
      if (last - first > params.ambiguity_width_px) {
        ++obs.rows_ambiguous;
        continue;
      }
      obs.columns.push_back(argmax);
      ++obs.rows_used;
    }
  }

  const long considered = obs.rows_used + obs.rows_ambiguous;
  if (considered == 0) {
    throw DataError("no depth discontinuity found in the search band");
  }
  if (obs.rows_ambiguous >
      params.max_ambiguous_fraction * static_cast<double>(considered)) {
    throw DataError("edge localization ambiguous in " +
                    std::to_string(obs.rows_ambiguous) + " of " +
                    std::to_string(considered) + " rows");
  }
  if (obs.columns.size() < 2) {
    throw DataError("too few edge rows to estimate jitter");
  }

  double sum = 0.0;
  for (int c : obs.columns) sum += c;
  obs.line_column = sum / static_cast<double>(obs.columns.size());
  double ssq = 0.0;
  for (int c : obs.columns) {
    const double d = c - obs.line_column;
    ssq += d * d;
  }
  obs.sigma_px = std::sqrt(ssq / static_cast<double>(obs.columns.size() - 1));
  return obs;
}

LateralSample extract_edge_sample(const FrameStack& stack,
                                  const PixelRect& band,
                                  const EdgeExtractionParams& params) {
  LateralSample sample;
  sample.condition = stack.condition;
  sample.sigma_px = extract_edge(stack, band, params).sigma_px;
  return sample;
}

std::vector<double> FitGrid::values() const {
  if (!(n_step > 0.0) || n_max < n_min) {
    throw DomainError("exponent grid must have positive step and n_max >= n_min");
  }
  const int count = static_cast<int>(std::lround((n_max - n_min) / n_step)) + 1;
  std::vector<double> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double v = n_min + i * n_step;
    out.push_back(std::round(v * 1e9) / 1e9);
  }
  return out;
}

namespace {

/// Number of groups when values are clustered with an absolute tolerance.
int distinct_count(std::vector<double> values, double tol) {
  std::sort(values.begin(), values.end());
  int groups = values.empty() ? 0 : 1;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] - values[i - 1] > tol) ++groups;
  }
  return groups;
}

}  // namespace

AxialFitResult fit_axial_model(const std::vector<AxialSample>& samples,
                               const FitGrid& grid) {
  if (samples.size() < 5) {
    throw DataError("axial fit needs at least 5 samples, got " +
                    std::to_string(samples.size()));
  }
  std::vector<double> zs, thetas;
  for (const AxialSample& s : samples) {
    if (!(s.z_m > 0.0) || !std::isfinite(s.z_m)) {
      throw DomainError("axial sample has non-positive depth");
    }
    if (s.theta_rad < 0.0 || s.theta_rad > kThetaMaxRad) {
      throw DomainError("axial sample incidence angle outside [0, 75] degrees");
    }
    if (!(s.sigma_measured_m >= 0.0)) {
      throw DomainError("axial sample has negative or NaN sigma");
    }
    zs.push_back(s.z_m);
    thetas.push_back(s.theta_rad);
  }
  if (distinct_count(thetas, 1e-9) < 2) {
    throw DataError(
        "samples span fewer than 2 distinct angles; the angle term is "
        "rank-deficient");
  }
  if (distinct_count(zs, 1e-9) < 3) {
    throw DataError("samples span fewer than 3 distinct distances");
  }

  const auto m = static_cast<Eigen::Index>(samples.size());
  Eigen::VectorXd b(m);
  Eigen::VectorXd ratio2(m);  // (theta / (pi/2 - theta))^2
  for (Eigen::Index i = 0; i < m; ++i) {
    b(i) = samples[i].sigma_measured_m;
    const double r = samples[i].theta_rad / (kPi / 2.0 - samples[i].theta_rad);
    ratio2(i) = r * r;
  }

  AxialFitResult result;
  bool have_best = false;
  Eigen::MatrixXd a(m, 4);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = samples[i].z_m;
    a(i, 2) = samples[i].z_m * samples[i].z_m;
  }
  for (const double n : grid.values()) {
    for (Eigen::Index i = 0; i < m; ++i) {
      a(i, 3) = std::pow(samples[i].z_m, n) * ratio2(i);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 4) {
      result.mse_by_n.emplace_back(n, kNaN);
      continue;
    }
    const Eigen::Vector4d coef = qr.solve(b);
    const double mse = (a * coef - b).squaredNorm() / static_cast<double>(m);
    result.mse_by_n.emplace_back(n, mse);
    if (!have_best || mse < result.mse) {  // ties keep the smaller exponent
      have_best = true;
      result.mse = mse;
      result.coefficients.a = coef(0);
      result.coefficients.b = coef(1);
      result.coefficients.c = coef(2);
      result.coefficients.d = coef(3);
      result.coefficients.n = n;
    }
  }
  if (!have_best) {
    throw DataError("design matrix rank-deficient for every exponent");
  }
  return result;
}

double percentile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) {
    throw DomainError("percentile rank must lie in [0, 1]");
  }
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double fit_lateral_sigma(const std::vector<LateralSample>& samples) {
  if (samples.empty()) throw DataError("no lateral samples to aggregate");
  std::vector<double> sigmas;
  sigmas.reserve(samples.size());
  for (const LateralSample& s : samples) sigmas.push_back(s.sigma_px);
  return percentile_linear(std::move(sigmas), 0.9);
}

std::string fit_report_to_json(const FitReport& report) {
  nlohmann::json doc;
  doc["format"] = "flexxnoise.fit_report";
  doc["version"] = 1;
  doc["modes"] = nlohmann::json::array();
  for (const ModeFitReport& mode : report.modes) {
    nlohmann::json m;
    m["mode_id"] = mode.mode_id;
    m["axial_samples"] = nlohmann::json::array();
    for (const AxialSample& s : mode.axial_samples) {
      m["axial_samples"].push_back({{"z_m", s.z_m},
                                    {"theta_rad", s.theta_rad},
                                    {"theta_deg", rad_to_deg(s.theta_rad)},
                                    {"sigma_m", s.sigma_measured_m},
                                    {"pixel_count", s.pixel_count}});
    }
    m["lateral_samples"] = nlohmann::json::array();
    for (const LateralSample& s : mode.lateral_samples) {
      m["lateral_samples"].push_back(
          {{"distance_m", s.condition.nominal_distance_m},
           {"angle_deg", s.condition.nominal_angle_deg},
           {"sigma_px", s.sigma_px}});
    }
    if (mode.axial_fit) {
      const AxialFitResult& fit = *mode.axial_fit;
      nlohmann::json f;
      f["a"] = fit.coefficients.a;
      f["b"] = fit.coefficients.b;
      f["c"] = fit.coefficients.c;
      f["d"] = fit.coefficients.d;
      f["n"] = fit.coefficients.n;
      f["mse"] = fit.mse;
      f["mse_by_n"] = nlohmann::json::array();
      for (const auto& [n, mse] : fit.mse_by_n) {
        f["mse_by_n"].push_back({n, mse});
      }
      m["axial_fit"] = std::move(f);
    } else {
      m["axial_fit"] = nullptr;
    }
    if (mode.sigma_x_px) {
      m["sigma_x_px"] = *mode.sigma_x_px;
    } else {
      m["sigma_x_px"] = nullptr;
    }
    m["skipped"] = mode.skipped;
    doc["modes"].push_back(std::move(m));
  }
  return doc.dump(2) + "\n";
}

}  // namespace flexxnoise

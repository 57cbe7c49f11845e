#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "flexxnoise/noise_model.hpp"
#include "flexxnoise/types.hpp"

namespace flexxnoise {

/// Pinhole model; pixel centers sit on integer coordinates.
struct CameraIntrinsics {
  int width = 0;    // pixels
  int height = 0;   // pixels
  double fx = 0.0;  // pixels
  double fy = 0.0;  // pixels
  double cx = 0.0;  // pixels
  double cy = 0.0;  // pixels

  bool operator==(const CameraIntrinsics&) const = default;

  /// Unnormalized viewing ray through pixel (x, y): (u, v, 1).
  Vec3d ray(double x, double y) const {
    return {(x - cx) / fx, (y - cy) / fy, 1.0};
  }

  /// 3D point of a pixel at Z-depth z.
  Vec3d backproject(double x, double y, double z) const {
    return {(x - cx) / fx * z, (y - cy) / fy * z, z};
  }
};

void validate(const CameraIntrinsics& k);

/// 224 x 172 sensor with a 56 x 44 degree field of view.
CameraIntrinsics default_intrinsics();

/// One depth image in meters; invalid pixels are NaN. Row-major storage,
/// (x, y) indexes column x of row y.
struct DepthFrame {
  DepthImage depths;

  DepthFrame() = default;
  DepthFrame(int width, int height)
      : depths(DepthImage::Constant(height, width,
                                    std::numeric_limits<float>::quiet_NaN())) {}

  int width() const { return static_cast<int>(depths.cols()); }
  int height() const { return static_cast<int>(depths.rows()); }

  float at(int x, int y) const { return depths(y, x); }
  float& at(int x, int y) { return depths(y, x); }
  bool valid(int x, int y) const { return std::isfinite(depths(y, x)); }
};

/// Finite depths must be positive and below this bound; anything else in a
/// frame is a data error, not a value to be repaired.
inline constexpr float kMaxDepthM = 100.0f;

void validate(const DepthFrame& frame);

/// Nominal measurement setup for one recorded stack.
struct CaptureCondition {
  std::string mode_id;
  double nominal_distance_m = 0.0;
  double nominal_angle_deg = 0.0;
  CameraIntrinsics intrinsics;
};

/// Distance must lie inside the mode's declared range when the mode is one
/// of the known six; angle is capped at 75 degrees everywhere.
void validate(const CaptureCondition& condition);

/// Frames recorded (or simulated) under a single condition.
struct FrameStack {
  std::vector<DepthFrame> frames;
  CaptureCondition condition;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
};

/// All frames must share dimensions and pass the per-frame checks.
void validate(const FrameStack& stack);

}  // namespace flexxnoise

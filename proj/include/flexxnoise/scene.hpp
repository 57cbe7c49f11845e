#pragma once

#include <optional>

#include "flexxnoise/frame.hpp"

namespace flexxnoise {

/// The measurement scene: a finite square target plane facing the camera,
/// rotated about the camera Y axis by the incidence angle.
struct PlanarScene {
  /// Distance along the optical axis to the plane at the principal ray.
  double plane_distance_m = 1.0;
  /// Rotation of the plane normal about the camera Y axis.
  double incidence_angle_deg = 0.0;
  /// Half-width and half-height of the square target.
  double plane_extent_m = 0.5;
  /// Depth of everything off-target; nullopt renders invalid (NaN) there.
  std::optional<double> background_depth_m;

  bool operator==(const PlanarScene&) const = default;
};

void validate(const PlanarScene& scene);

/// Unit normal of the scene plane, pointing toward the camera half-space
/// (positive Z component).
Vec3d plane_normal(const PlanarScene& scene);

/// Ground-truth Z-depth frame of the scene. Depths are the Z coordinate of
/// the ray-plane intersection (pinhole depth-image convention), not the ray
/// length. Rays parallel to the plane within 1e-12 fall through to the
/// background.
DepthFrame render_scene(const PlanarScene& scene, const CameraIntrinsics& k);

/// Exact incidence angle (radians) between the plane normal and the viewing
/// ray of pixel (x, y). Throws DomainError when the pixel misses the target.
double analytic_incidence(const PlanarScene& scene, const CameraIntrinsics& k,
                          int x, int y);

/// Incidence of every on-target pixel, NaN elsewhere.
Image<float> analytic_incidence_map(const PlanarScene& scene,
                                    const CameraIntrinsics& k);

/// Pixel band straddling the target's right edge (the vertical depth
/// discontinuity used for edge-jitter measurements). The band spans
/// +- half_width_px columns around the projected edge and, vertically, the
/// central 40% of the edge segment's projected rows — rows near the
/// target's corners see mixed target/background content under lateral
/// jitter and would corrupt the per-row edge columns. Throws DomainError
/// when the edge falls outside the image or spans no usable rows.
PixelRect edge_search_band(const PlanarScene& scene, const CameraIntrinsics& k,
                           int half_width_px = 16);

}  // namespace flexxnoise

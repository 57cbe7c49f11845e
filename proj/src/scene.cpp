#include "flexxnoise/scene.hpp"

#include <cmath>

namespace flexxnoise {

namespace {

constexpr double kParallelTol = 1e-12;

struct SceneGeometry {
  Vec3d normal;
  Vec3d center;  // point on the plane at the principal ray
  Vec3d e1;      // in-plane horizontal axis
  Vec3d e2;      // in-plane vertical axis
};

SceneGeometry geometry(const PlanarScene& scene) {
  const double th = deg_to_rad(scene.incidence_angle_deg);
  SceneGeometry g;
  g.normal = {std::sin(th), 0.0, std::cos(th)};
  g.center = {0.0, 0.0, scene.plane_distance_m};
  g.e1 = {std::cos(th), 0.0, -std::sin(th)};
  g.e2 = {0.0, 1.0, 0.0};
  return g;
}

/// Z-depth of the ray-plane hit if it lands on the target, else NaN.
double target_depth(const SceneGeometry& g, const PlanarScene& scene,
                    const Vec3d& ray) {
  const double denom = g.normal.dot(ray);
  if (std::abs(denom) <= kParallelTol) return std::numeric_limits<double>::quiet_NaN();
  const double z = g.normal.dot(g.center) / denom;
  if (!(z > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const Vec3d p = ray * z - g.center;  // ray has unit Z, so ray * z hits depth z
  if (std::abs(p.dot(g.e1)) > scene.plane_extent_m ||
      std::abs(p.dot(g.e2)) > scene.plane_extent_m) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return z;
}

}  // namespace

void validate(const PlanarScene& scene) {
  if (!(scene.plane_distance_m > 0.0)) {
    throw DataError("scene: plane_distance must be > 0");
  }
  if (!(scene.incidence_angle_deg >= 0.0) || scene.incidence_angle_deg >= 75.0) {
    throw DataError("scene: incidence_angle must lie in [0, 75)");
  }
  if (!(scene.plane_extent_m > 0.0)) {
    throw DataError("scene: plane_extent must be > 0");
  }
  if (scene.background_depth_m &&
      !(*scene.background_depth_m > 0.0 && *scene.background_depth_m < kMaxDepthM)) {
    throw DataError("scene: background_depth must be in (0, 100) m");
  }
}

Vec3d plane_normal(const PlanarScene& scene) {
  return geometry(scene).normal;
}

DepthFrame render_scene(const PlanarScene& scene, const CameraIntrinsics& k) {
  validate(scene);
  validate(k);
  const SceneGeometry g = geometry(scene);
  const float background =
      scene.background_depth_m ? static_cast<float>(*scene.background_depth_m)
                               : std::numeric_limits<float>::quiet_NaN();
  DepthFrame frame(k.width, k.height);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const double z = target_depth(g, scene, k.ray(x, y));
      frame.at(x, y) = std::isfinite(z) ? static_cast<float>(z) : background;
    }
  }
  return frame;
}

double analytic_incidence(const PlanarScene& scene, const CameraIntrinsics& k,
                          int x, int y) {
  validate(scene);
  const SceneGeometry g = geometry(scene);
  const Vec3d ray = k.ray(x, y);
  if (!std::isfinite(target_depth(g, scene, ray))) {
    throw DomainError("analytic_incidence: pixel (" + std::to_string(x) + ", " +
                      std::to_string(y) + ") does not hit the target");
  }
  const double c = std::abs(g.normal.dot(ray.normalized()));
  return std::acos(std::min(1.0, c));
}

Image<float> analytic_incidence_map(const PlanarScene& scene,
                                    const CameraIntrinsics& k) {
  validate(scene);
  const SceneGeometry g = geometry(scene);
  Image<float> angles = Image<float>::Constant(
      k.height, k.width, std::numeric_limits<float>::quiet_NaN());
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const Vec3d ray = k.ray(x, y);
      if (!std::isfinite(target_depth(g, scene, ray))) continue;
      const double c = std::abs(g.normal.dot(ray.normalized()));
      angles(y, x) = static_cast<float>(std::acos(std::min(1.0, c)));
    }
  }
  return angles;
}

PixelRect edge_search_band(const PlanarScene& scene, const CameraIntrinsics& k,
                           int half_width_px) {
  validate(scene);
  if (half_width_px < 1) {
    throw DomainError("edge_search_band: half width must be >= 1 px");
  }
  const SceneGeometry g = geometry(scene);
  // The right edge of the target is the segment center + extent * e1 + t * e2;
  // e2 is the camera Y axis, so the segment projects to a single image column.
  const Vec3d edge = g.center + scene.plane_extent_m * g.e1;
  if (edge.z() <= 0.0) {
    throw DomainError("edge_search_band: target edge is behind the camera");
  }
  const double col = k.cx + k.fx * edge.x() / edge.z();
  if (col < 1.0 || col > k.width - 2.0) {
    throw DomainError("edge_search_band: target edge projects outside the image");
  }
  const int c = static_cast<int>(std::lround(col));
  PixelRect band;
  band.x0 = std::max(1, c - half_width_px);
  band.width = std::min(k.width - 1, c + half_width_px + 1) - band.x0;

  // Vertically, keep to the central 40% of the edge segment's projected
  // span: near the target's corners, lateral jitter mixes target and
  // background content along a row, which corrupts the per-row edge columns.
  const double row_half = 0.4 * k.fy * scene.plane_extent_m / edge.z();
  const int y_lo = std::max(1, static_cast<int>(std::ceil(k.cy - row_half)));
  const int y_hi =
      std::min(k.height - 2, static_cast<int>(std::floor(k.cy + row_half)));
  if (y_hi < y_lo) {
    throw DomainError("edge_search_band: target edge spans no usable rows");
  }
  band.y0 = y_lo;
  band.height = y_hi - y_lo + 1;
  return band;
}

}  // namespace flexxnoise

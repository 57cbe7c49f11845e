#include "flexxnoise/inject.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Geometry>

namespace flexxnoise {

namespace {

// Sub-stream ids under the per-frame stream.
constexpr std::uint64_t kStreamLateralRows = 1;
constexpr std::uint64_t kStreamLateralCols = 2;
constexpr std::uint64_t kStreamAxial = 3;

int clamp_index(double v, int size) {
  const int i = static_cast<int>(std::lround(v));
  return std::clamp(i, 0, size - 1);
}

DepthFrame lateral_stage(const DepthFrame& in, const InjectionConfig& config,
                         CounterRng frame_rng) {
  const int w = in.width();
  const int h = in.height();
  const double sigma = config.coefficients.sigma_x;
  if (sigma < 0.0) throw DomainError("inject: sigma_x must be >= 0");

  std::vector<double> row_dx(static_cast<std::size_t>(h), 0.0);
  CounterRng rows = frame_rng.stream(kStreamLateralRows);
  for (int y = 0; y < h; ++y) {
    row_dx[y] = sigma * rows.stream(static_cast<std::uint64_t>(y)).next_normal();
  }

  std::vector<double> col_dy(static_cast<std::size_t>(w), 0.0);
  if (config.lateral_mode == LateralMode::kIsotropic) {
    CounterRng cols = frame_rng.stream(kStreamLateralCols);
    for (int x = 0; x < w; ++x) {
      col_dy[x] = sigma * cols.stream(static_cast<std::uint64_t>(x)).next_normal();
    }
  }

  DepthFrame out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = clamp_index(x + row_dx[y], w);
      const int sy = clamp_index(y + col_dy[x], h);
      out.at(x, y) = in.at(sx, sy);
    }
  }
  return out;
}

void axial_stage(DepthFrame& frame, const Image<float>& theta_map,
                 const InjectionConfig& config, CounterRng frame_rng) {
  const int w = frame.width();
  const int h = frame.height();
  CounterRng axial = frame_rng.stream(kStreamAxial);
  int cur_x = 0;
  int cur_y = 0;
  try {
    for (int y = 0; y < h; ++y) {
      cur_y = y;
      for (int x = 0; x < w; ++x) {
        cur_x = x;
        const float z = frame.at(x, y);
        if (!std::isfinite(z)) continue;
        const float t = theta_map(y, x);
        const double theta = std::isfinite(t) ? static_cast<double>(t)
                                              : config.theta_fallback_rad;
        const double sigma =
            axial_sigma<double>(config.coefficients, static_cast<double>(z), theta);
        const std::uint64_t pixel_index =
            static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(w) + x;
        const double draw = axial.stream(pixel_index).next_normal();
        frame.at(x, y) = static_cast<float>(z + sigma * draw);
      }
    }
  } catch (const DomainError& e) {
    throw DomainError("inject: pixel (" + std::to_string(cur_x) + ", " +
                      std::to_string(cur_y) + "): " + e.what());
  }
}

}  // namespace

Image<float> estimate_incidence_map(const DepthFrame& frame,
                                    const CameraIntrinsics& k) {
  validate(k);
  const int w = frame.width();
  const int h = frame.height();
  Image<float> angles =
      Image<float>::Constant(h, w, std::numeric_limits<float>::quiet_NaN());
  const double theta_max = kThetaMaxRad;
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      if (!frame.valid(x, y) || !frame.valid(x - 1, y) || !frame.valid(x + 1, y) ||
          !frame.valid(x, y - 1) || !frame.valid(x, y + 1)) {
        continue;
      }
      const Vec3d du = k.backproject(x + 1, y, frame.at(x + 1, y)) -
                       k.backproject(x - 1, y, frame.at(x - 1, y));
      const Vec3d dv = k.backproject(x, y + 1, frame.at(x, y + 1)) -
                       k.backproject(x, y - 1, frame.at(x, y - 1));
      const Vec3d n = du.cross(dv);
      const double nn = n.norm();
      if (nn <= 0.0) continue;
      const Vec3d ray = k.ray(x, y).normalized();
      const double c = std::abs(n.dot(ray)) / nn;
      const double theta = std::acos(std::min(1.0, c));
      angles(y, x) = static_cast<float>(std::min(theta, theta_max));
    }
  }
  return angles;
}

DepthFrame inject(const DepthFrame& frame, const CameraIntrinsics& k,
                  const InjectionConfig& config, std::uint64_t frame_index,
                  const PlanarScene* scene) {
  if (frame.width() != k.width || frame.height() != k.height) {
    throw DataError("inject: frame dimensions do not match the intrinsics");
  }
  if (config.angle_source == AngleSource::kAnalytic && config.axial_enabled &&
      scene == nullptr) {
    throw DataError("inject: analytic angle source requires a scene");
  }

  const CounterRng frame_rng = CounterRng(config.seed).stream(frame_index);

  DepthFrame out = (config.lateral_mode == LateralMode::kOff)
                       ? frame
                       : lateral_stage(frame, config, frame_rng);

  if (config.axial_enabled) {
    const Image<float> theta_map = (config.angle_source == AngleSource::kAnalytic)
                                       ? analytic_incidence_map(*scene, k)
                                       : estimate_incidence_map(out, k);
    axial_stage(out, theta_map, config, frame_rng);
  }
  return out;
}

FrameStack inject_stack(const DepthFrame& clean, const CaptureCondition& condition,
                        const InjectionConfig& config, int count,
                        const PlanarScene* scene) {
  if (count < 1) throw DataError("inject_stack: count must be >= 1");
  FrameStack stack;
  stack.condition = condition;
  stack.frames.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    stack.frames.push_back(
        inject(clean, condition.intrinsics, config, static_cast<std::uint64_t>(i), scene));
  }
  return stack;
}

BenchResult run_injection_bench(const InjectionConfig& config, int frames) {
  if (frames < 1) throw DataError("bench: frame count must be >= 1");
  const CameraIntrinsics k = default_intrinsics();
  PlanarScene scene;
  scene.plane_distance_m = 1.0;
  scene.incidence_angle_deg = 30.0;
  scene.plane_extent_m = 0.5;
  scene.background_depth_m = 3.0;
  const DepthFrame clean = render_scene(scene, k);

  std::vector<double> times_ms;
  times_ms.reserve(static_cast<std::size_t>(frames));
  for (int i = 0; i < frames; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const DepthFrame noisy =
        inject(clean, k, config, static_cast<std::uint64_t>(i), &scene);
    const auto t1 = std::chrono::steady_clock::now();
    // keep the result alive so the compiler cannot drop the work
    if (!std::isfinite(noisy.at(k.width / 2, k.height / 2))) {
      throw std::logic_error("bench: center pixel unexpectedly invalid");
    }
    times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }

  std::sort(times_ms.begin(), times_ms.end());
  const auto pct = [&](double q) {
    const double pos = q * (static_cast<double>(times_ms.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, times_ms.size() - 1);
    return times_ms[lo] + (pos - static_cast<double>(lo)) * (times_ms[hi] - times_ms[lo]);
  };
  BenchResult r;
  r.frames = frames;
  r.p50_ms = pct(0.5);
  r.p99_ms = pct(0.99);
  double sum = 0.0;
  for (double t : times_ms) sum += t;
  r.mean_ms = sum / static_cast<double>(times_ms.size());
  return r;
}

}  // namespace flexxnoise

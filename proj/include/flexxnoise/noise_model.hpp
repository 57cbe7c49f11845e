#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flexxnoise/rng.hpp"
#include "flexxnoise/types.hpp"

namespace flexxnoise {

/// Lower clamp for the evaluated axial standard deviation. The bundled
/// coefficient sets stay positive over their mode ranges, but user-supplied
/// ones may dip negative; clamping keeps the Gaussian well defined.
inline constexpr double kSigmaFloorM = 1e-6;

/// Largest accepted incidence angle. The model diverges at 90 degrees and is
/// calibrated up to 60, so 75 leaves headroom without nearing the pole.
inline const double kThetaMaxRad = deg_to_rad(75.0);

/// Parameters of the axial noise std model
///   sigma_z(z, theta) = a + b z + c z^2 + d z^n theta^2 / (pi/2 - theta)^2
/// plus the lateral edge-jitter std sigma_x in pixels.
struct NoiseModelCoefficients {
  double a = 0.0;        // meters
  double b = 0.0;        // meters per meter
  double c = 0.0;        // meters per meter^2
  double d = 0.0;        // meters per meter^n
  double n = 0.0;        // exponent on z in the angle term
  double sigma_x = 0.0;  // pixels
  std::string mode_id;

  bool operator==(const NoiseModelCoefficients&) const = default;
};

/// One of the camera's measured operating modes.
struct ModePreset {
  std::string mode_id;
  double frame_rate_hz = 0.0;
  double range_min_m = 0.0;
  double range_max_m = 0.0;
  NoiseModelCoefficients coefficients;
};

/// Axial noise std in meters; the clamp floor can be lowered (or zeroed) by
/// callers that need the raw polynomial, e.g. degenerate-sigma tests.
template <class Scalar>
Scalar axial_sigma(const NoiseModelCoefficients& coeffs, Scalar z, Scalar theta,
                   Scalar floor = Scalar(kSigmaFloorM)) {
  if (!(z >= Scalar(0))) {
    throw DomainError("axial_sigma: depth must be >= 0, got " + std::to_string(z));
  }
  if (!(theta >= Scalar(0)) || theta > Scalar(kThetaMaxRad)) {
    throw DomainError("axial_sigma: incidence angle out of [0, 75 deg]: " +
                      std::to_string(theta) + " rad");
  }
  if (z == Scalar(0) && coeffs.n < 0.0) {
    throw DomainError("axial_sigma: z^n undefined at z = 0 with n < 0");
  }
  const Scalar ratio = theta / (Scalar(kPi) / 2 - theta);
  const Scalar value = Scalar(coeffs.a) + Scalar(coeffs.b) * z +
                       Scalar(coeffs.c) * z * z +
                       Scalar(coeffs.d) * std::pow(z, Scalar(coeffs.n)) * ratio * ratio;
  return std::max(floor, value);
}

/// One axial noise draw, N(0, axial_sigma^2).
template <class Scalar>
Scalar sample_axial(const NoiseModelCoefficients& coeffs, Scalar z, Scalar theta,
                    CounterRng& rng, Scalar floor = Scalar(kSigmaFloorM)) {
  const Scalar sigma = axial_sigma(coeffs, z, theta, floor);
  if (sigma == Scalar(0)) {
    rng.next_normal();  // keep the draw count independent of sigma
    return Scalar(0);
  }
  return sigma * Scalar(rng.next_normal());
}

/// One lateral offset draw in pixels. dy gets the same sigma_x when
/// isotropic is set (pixel-symmetry assumption; only the x direction is
/// backed by measurements) and is zero otherwise.
inline std::pair<double, double> sample_lateral_offset(
    const NoiseModelCoefficients& coeffs, CounterRng& rng, bool isotropic = true) {
  if (coeffs.sigma_x < 0.0) {
    throw DomainError("sample_lateral_offset: sigma_x must be >= 0");
  }
  const double dx = coeffs.sigma_x * rng.next_normal();
  const double dy_draw = rng.next_normal();  // consumed either way, see above
  const double dy = isotropic ? coeffs.sigma_x * dy_draw : 0.0;
  return {dx, dy};
}

/// KL(N(mu1, sigma1^2) || N(mu2, sigma2^2)) in nats, closed form.
template <class Scalar>
Scalar gaussian_kl(Scalar mu1, Scalar sigma1, Scalar mu2, Scalar sigma2) {
  if (!(sigma1 > Scalar(0)) || !(sigma2 > Scalar(0))) {
    throw DomainError("gaussian_kl: standard deviations must be positive");
  }
  const Scalar dmu = mu1 - mu2;
  return std::log(sigma2 / sigma1) +
         (sigma1 * sigma1 + dmu * dmu) / (2 * sigma2 * sigma2) - Scalar(0.5);
}

/// The three modes with fitted coefficients (30 fps and above). Checked once
/// at first use: sigma_z >= kSigmaFloorM over the full range x angle grid.
const std::vector<ModePreset>& mode_presets();

/// Preset lookup by mode id; nullopt for modes without fitted coefficients.
std::optional<ModePreset> find_preset(const std::string& mode_id);

/// Declared range for any of the six measured operating modes, fitted or not.
std::optional<std::pair<double, double>> mode_range(const std::string& mode_id);

/// Coefficient (de)serialization. The document is a flat UTF-8 JSON object
/// with keys a, b, c, d, n, sigma_x, mode_id; numbers are written with 17
/// significant digits so a round trip is value-exact.
std::string coefficients_to_json(const NoiseModelCoefficients& coeffs);
NoiseModelCoefficients coefficients_from_json(const std::string& text);
void save_coefficients(const NoiseModelCoefficients& coeffs, const std::string& path);
NoiseModelCoefficients load_coefficients(const std::string& path);

}  // namespace flexxnoise

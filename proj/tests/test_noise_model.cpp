#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "flexxnoise/noise_model.hpp"
#include "flexxnoise/rng.hpp"

using namespace flexxnoise;

namespace {

NoiseModelCoefficients preset_coeffs(const std::string& mode) {
  auto p = find_preset(mode);
  REQUIRE(p.has_value());
  return p->coefficients;
}

}  // namespace

// Hand-derived closed-form values, computed independently at 30-digit
// precision. Several are exact decimals because the angle ratio is rational
// at 0, 15, 30, 60 and 75 degrees.
TEST_CASE("axial sigma reproduces hand-derived values") {
  const auto m5 = preset_coeffs("Mode_5_30fps");
  const auto m56 = preset_coeffs("Mode_5_60fps");
  const auto m9 = preset_coeffs("Mode_9_30fps");

  CHECK(axial_sigma(m5, 1.0, deg_to_rad(15.0)) ==
        doctest::Approx(0.0020814).epsilon(1e-12));
  CHECK(axial_sigma(m9, 2.0, deg_to_rad(30.0)) ==
        doctest::Approx(0.0059231024282283164).epsilon(1e-12));
  CHECK(axial_sigma(m5, 0.5, 0.0) == doctest::Approx(0.00202975).epsilon(1e-12));
  CHECK(axial_sigma(m56, 1.0, deg_to_rad(15.0)) ==
        doctest::Approx(0.0028488).epsilon(1e-12));
  CHECK(axial_sigma(m5, 2.4, deg_to_rad(60.0)) ==
        doctest::Approx(0.0120677517903784).epsilon(1e-12));
  CHECK(axial_sigma(m9, 7.0, deg_to_rad(60.0)) ==
        doctest::Approx(0.30506971681418395).epsilon(1e-12));
  // 75 degrees is inside the domain (inclusive cap).
  CHECK(axial_sigma(m5, 1.0, deg_to_rad(75.0)) ==
        doctest::Approx(0.006699).epsilon(1e-12));
}

TEST_CASE("axial sigma rejects out-of-domain inputs") {
  const auto m5 = preset_coeffs("Mode_5_30fps");
  CHECK_THROWS_AS(axial_sigma(m5, -0.1, 0.0), DomainError);
  CHECK_THROWS_AS(axial_sigma(m5, 1.0, -0.01), DomainError);
  CHECK_THROWS_AS(axial_sigma(m5, 1.0, deg_to_rad(75.0) + 1e-9), DomainError);
  CHECK_THROWS_AS(axial_sigma(m5, 1.0, deg_to_rad(90.0)), DomainError);
  // z = 0 is fine for positive exponents (the z^n term vanishes)...
  CHECK(axial_sigma(m5, 0.0, deg_to_rad(30.0)) == doctest::Approx(m5.a));
  // ...but undefined for negative ones.
  NoiseModelCoefficients neg = m5;
  neg.n = -1.0;
  CHECK_THROWS_AS(axial_sigma(neg, 0.0, deg_to_rad(30.0)), DomainError);
}

TEST_CASE("sigma floor clamps degenerate coefficient sets") {
  NoiseModelCoefficients zero;
  zero.n = 1.0;
  CHECK(axial_sigma(zero, 1.0, 0.0) == kSigmaFloorM);
  CHECK(axial_sigma(zero, 1.0, 0.0, 0.0) == 0.0);
  NoiseModelCoefficients negative = zero;
  negative.a = -0.5;
  CHECK(axial_sigma(negative, 1.0, 0.0) == kSigmaFloorM);
}

TEST_CASE("axial sampling consumes draws even at zero sigma") {
  NoiseModelCoefficients zero;
  zero.n = 1.0;
  CounterRng r(3);
  CHECK(sample_axial(zero, 1.0, 0.0, r, 0.0) == 0.0);
  CHECK(r.counter() == 2);  // the normal draw happened anyway

  // With a live sigma the draw is exactly sigma * normal.
  const auto m5 = preset_coeffs("Mode_5_30fps");
  CounterRng a(3), b(3);
  const double sigma = axial_sigma(m5, 1.0, deg_to_rad(15.0));
  CHECK(sample_axial(m5, 1.0, deg_to_rad(15.0), a) == sigma * b.next_normal());
}

TEST_CASE("lateral offsets scale sigma_x and always use two normals") {
  auto coeffs = preset_coeffs("Mode_9_30fps");  // sigma_x = 1.649
  CounterRng a(7), b(7);
  const auto [dx, dy] = sample_lateral_offset(coeffs, a, true);
  const double n1 = b.next_normal(), n2 = b.next_normal();
  CHECK(dx == coeffs.sigma_x * n1);
  CHECK(dy == coeffs.sigma_x * n2);
  CHECK(a.counter() == 4);

  CounterRng c(7);
  const auto [dx2, dy2] = sample_lateral_offset(coeffs, c, false);
  CHECK(dx2 == dx);
  CHECK(dy2 == 0.0);
  CHECK(c.counter() == 4);  // same consumption with the y channel off

  coeffs.sigma_x = -1.0;
  CounterRng d(7);
  CHECK_THROWS_AS(sample_lateral_offset(coeffs, d), DomainError);
}

TEST_CASE("sigma is monotone in theta and bounded below over the mode ranges") {
  for (const ModePreset& preset : mode_presets()) {
    const auto range = mode_range(preset.mode_id);
    REQUIRE(range.has_value());
    for (int zi = 0; zi <= 50; ++zi) {
      const double z =
          range->first + (range->second - range->first) * zi / 50.0;
      double prev = -1.0;
      for (int ti = 0; ti <= 75; ++ti) {
        const double sigma = axial_sigma(preset.coefficients, z, deg_to_rad(ti));
        CHECK(sigma >= kSigmaFloorM);
        // d > 0 for every preset, so the angle term grows strictly.
        CHECK(sigma > prev);
        prev = sigma;
      }
    }
  }
}

TEST_CASE("sigma is linear in the polynomial coefficients") {
  const auto m5 = preset_coeffs("Mode_5_30fps");
  NoiseModelCoefficients tripled = m5;
  tripled.a *= 3.0;
  tripled.b *= 3.0;
  tripled.c *= 3.0;
  tripled.d *= 3.0;
  for (double z : {0.2, 1.0, 2.4}) {
    for (double deg : {0.0, 20.0, 60.0}) {
      const double base = axial_sigma(m5, z, deg_to_rad(deg), 0.0);
      const double scaled = axial_sigma(tripled, z, deg_to_rad(deg), 0.0);
      CHECK(scaled == doctest::Approx(3.0 * base).epsilon(1e-12));
    }
  }
}

TEST_CASE("a million draws reproduce the closed-form stds to 1%") {
  const auto m5 = preset_coeffs("Mode_5_30fps");
  const double theta = deg_to_rad(15.0);
  const double sigma = axial_sigma(m5, 1.0, theta);  // 0.0020814

  const int n = 1'000'000;
  CounterRng rng(2025);
  double sum = 0.0, sum_sq = 0.0;
  double lat_sum = 0.0, lat_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_axial(m5, 1.0, theta, rng);
    sum += v;
    sum_sq += v * v;
    const auto [dx, dy] = sample_lateral_offset(m5, rng);
    lat_sum += dx;
    lat_sq += dx * dx;
    (void)dy;
  }
  const double std_axial = std::sqrt((sum_sq - sum * sum / n) / (n - 1));
  const double std_lat = std::sqrt((lat_sq - lat_sum * lat_sum / n) / (n - 1));
  CHECK(std_axial == doctest::Approx(sigma).epsilon(0.01));
  CHECK(std_lat == doctest::Approx(0.864).epsilon(0.01));
}

TEST_CASE("gaussian KL matches closed-form references") {
  CHECK(gaussian_kl(0.0, 1.0, 0.0, 2.0) ==
        doctest::Approx(0.31814718055994531).epsilon(1e-15));
  CHECK(gaussian_kl(1.0, 1.0, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(gaussian_kl(0.0, 2.0, 0.0, 1.0) ==
        doctest::Approx(0.80685281944005469).epsilon(1e-15));
  CHECK(gaussian_kl(0.001, 0.0021, 0.0, 0.002) ==
        doctest::Approx(0.127459835830568).epsilon(1e-15));
  CHECK(gaussian_kl(0.7, 0.3, 0.7, 0.3) == 0.0);
  CHECK(gaussian_kl(0.0, 1.0, 0.0, 2.0) != gaussian_kl(0.0, 2.0, 0.0, 1.0));
  CHECK_THROWS_AS(gaussian_kl(0.0, 0.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(gaussian_kl(0.0, 1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("bundled presets carry the fitted table values") {
  const auto& presets = mode_presets();
  REQUIRE(presets.size() == 3);

  const auto m5 = preset_coeffs("Mode_5_30fps");
  CHECK(m5.a == 0.002362);
  CHECK(m5.b == -0.001041);
  CHECK(m5.c == 0.000753);
  CHECK(m5.d == 0.000185);
  CHECK(m5.n == 2.7);
  CHECK(m5.sigma_x == 0.864);

  const auto m56 = preset_coeffs("Mode_5_60fps");
  CHECK(m56.a == 0.002209);
  CHECK(m56.b == -0.000793);
  CHECK(m56.c == 0.001418);
  CHECK(m56.d == 0.000370);
  CHECK(m56.n == 2.7);
  CHECK(m56.sigma_x == 1.098);

  const auto m9 = preset_coeffs("Mode_9_30fps");
  CHECK(m9.a == 0.002345);
  CHECK(m9.b == -0.002101);
  CHECK(m9.c == 0.001824);
  CHECK(m9.d == 0.000298);
  CHECK(m9.n == 2.7);
  CHECK(m9.sigma_x == 1.649);

  auto p5 = find_preset("Mode_5_30fps");
  REQUIRE(p5.has_value());
  CHECK(p5->frame_rate_hz == 30.0);
  CHECK(p5->range_min_m == 0.1);
  CHECK(p5->range_max_m == 2.4);
  auto p9 = find_preset("Mode_9_30fps");
  REQUIRE(p9.has_value());
  CHECK(p9->range_max_m == 7.0);
}

TEST_CASE("unfitted modes have a range but no preset") {
  CHECK_FALSE(find_preset("Mode_5_15fps").has_value());
  CHECK_FALSE(find_preset("Mode_9_15fps").has_value());
  CHECK_FALSE(find_preset("Mode_9_20fps").has_value());
  CHECK(mode_range("Mode_9_20fps").has_value());
  CHECK_FALSE(find_preset("Mode_X").has_value());
  CHECK_FALSE(mode_range("Mode_X").has_value());
}

TEST_CASE("coefficient JSON round trip is value-exact") {
  NoiseModelCoefficients c;
  c.a = 0.1 / 3.0;  // not representable in short decimal form
  c.b = -1.0 / 7.0;
  c.c = 1e-300;
  c.d = 0.000185;
  c.n = 2.7;
  c.sigma_x = 0.864;
  c.mode_id = "custom";
  const NoiseModelCoefficients back = coefficients_from_json(coefficients_to_json(c));
  CHECK(back == c);
}

TEST_CASE("coefficient files save and load through the filesystem") {
  namespace fs = std::filesystem;
  const auto path = (fs::temp_directory_path() / "flexxnoise_coeffs_test.json").string();
  const auto c = preset_coeffs("Mode_5_60fps");
  save_coefficients(c, path);
  CHECK(load_coefficients(path) == c);
  fs::remove(path);
  CHECK_THROWS_AS(load_coefficients(path), DataError);
}

TEST_CASE("malformed coefficient documents are data errors") {
  CHECK_THROWS_AS(coefficients_from_json("not json"), DataError);
  CHECK_THROWS_AS(coefficients_from_json("{}"), DataError);
  CHECK_THROWS_AS(coefficients_from_json(R"({"a":1,"b":2})"), DataError);
  CHECK_THROWS_AS(coefficients_from_json(
                      R"({"a":"x","b":0,"c":0,"d":0,"n":1,"sigma_x":0,"mode_id":""})"),
                  DataError);
}

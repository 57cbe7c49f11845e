#include "flexxnoise/noise_model.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace flexxnoise {
namespace {

struct ModeSpec {
  const char* id;
  double rate_hz;
  double range_min;
  double range_max;
};

// All measured operating modes; only the >= 30 fps ones carry coefficients.
constexpr ModeSpec kModeTable[] = {
    {"Mode_5_15fps", 15.0, 0.1, 2.4}, {"Mode_5_30fps", 30.0, 0.1, 2.4},
    {"Mode_5_60fps", 60.0, 0.1, 2.4}, {"Mode_9_15fps", 15.0, 0.1, 7.0},
    {"Mode_9_20fps", 20.0, 0.1, 7.0}, {"Mode_9_30fps", 30.0, 0.1, 7.0},
};

ModePreset make_preset(const std::string& id, double rate, double rmin, double rmax,
                       double a, double b, double c, double d, double n,
                       double sigma_x) {
  ModePreset p;
  p.mode_id = id;
  p.frame_rate_hz = rate;
  p.range_min_m = rmin;
  p.range_max_m = rmax;
  p.coefficients = {a, b, c, d, n, sigma_x, id};
  return p;
}

// Dense scan over the declared depth range and the full angle domain; a
// preset whose sigma dips below the floor anywhere is a programming error.
void check_positive(const ModePreset& p) {
  constexpr int kSteps = 120;
  for (int iz = 0; iz <= kSteps; ++iz) {
    const double z = p.range_min_m + (p.range_max_m - p.range_min_m) * iz / kSteps;
    for (int it = 0; it <= kSteps; ++it) {
      const double theta = kThetaMaxRad * it / kSteps;
      const double s = axial_sigma(p.coefficients, z, theta, 0.0);
      if (!(s >= kSigmaFloorM)) {
        throw std::logic_error("preset " + p.mode_id + " sigma below floor at z=" +
                               std::to_string(z) + " theta=" + std::to_string(theta));
      }
    }
  }
}

std::vector<ModePreset> build_presets() {
  std::vector<ModePreset> presets = {
      make_preset("Mode_5_30fps", 30.0, 0.1, 2.4,
                  0.002362, -0.001041, 0.000753, 0.000185, 2.7, 0.864),
      make_preset("Mode_5_60fps", 60.0, 0.1, 2.4,
                  0.002209, -0.000793, 0.001418, 0.000370, 2.7, 1.098),
      make_preset("Mode_9_30fps", 30.0, 0.1, 7.0,
                  0.002345, -0.002101, 0.001824, 0.000298, 2.7, 1.649),
  };
  for (const ModePreset& p : presets) check_positive(p);
  return presets;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

void atomic_write_text(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out << text;
    if (!out.flush()) throw DataError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("rename failed for " + target.string());
  }
}

}  // namespace

const std::vector<ModePreset>& mode_presets() {
  static const std::vector<ModePreset> presets = build_presets();
  return presets;
}

std::optional<ModePreset> find_preset(const std::string& mode_id) {
  for (const ModePreset& p : mode_presets()) {
    if (p.mode_id == mode_id) return p;
  }
  return std::nullopt;
}

std::optional<std::pair<double, double>> mode_range(const std::string& mode_id) {
  for (const ModeSpec& m : kModeTable) {
    if (mode_id == m.id) return std::make_pair(m.range_min, m.range_max);
  }
  return std::nullopt;
}

std::string coefficients_to_json(const NoiseModelCoefficients& coeffs) {
  // Hand-rolled so numeric fields keep full precision; nlohmann's default
  // dump shortens doubles below the documented digit count.
  std::ostringstream out;
  out << "{\n";
  out << "  \"a\": " << format_number(coeffs.a) << ",\n";
  out << "  \"b\": " << format_number(coeffs.b) << ",\n";
  out << "  \"c\": " << format_number(coeffs.c) << ",\n";
  out << "  \"d\": " << format_number(coeffs.d) << ",\n";
  out << "  \"n\": " << format_number(coeffs.n) << ",\n";
  out << "  \"sigma_x\": " << format_number(coeffs.sigma_x) << ",\n";
  out << "  \"mode_id\": " << nlohmann::json(coeffs.mode_id).dump() << "\n";
  out << "}\n";
  return out.str();
}

NoiseModelCoefficients coefficients_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("coefficient document is not valid JSON: ") + e.what());
  }
  NoiseModelCoefficients c;
  try {
    c.a = doc.at("a").get<double>();
    c.b = doc.at("b").get<double>();
    c.c = doc.at("c").get<double>();
    c.d = doc.at("d").get<double>();
    c.n = doc.at("n").get<double>();
    c.sigma_x = doc.at("sigma_x").get<double>();
    c.mode_id = doc.at("mode_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("coefficient document missing or mistyped field: ") + e.what());
  }
  if (!std::isfinite(c.n)) throw DataError("coefficient n must be finite");
  if (c.sigma_x < 0.0) throw DataError("coefficient sigma_x must be >= 0");
  return c;
}

void save_coefficients(const NoiseModelCoefficients& coeffs, const std::string& path) {
  atomic_write_text(path, coefficients_to_json(coeffs));
}

NoiseModelCoefficients load_coefficients(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open coefficient file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return coefficients_from_json(buf.str());
}

}  // namespace flexxnoise

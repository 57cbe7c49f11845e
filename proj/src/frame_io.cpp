#include "flexxnoise/frame_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace flexxnoise {

namespace fs = std::filesystem;

void validate(const CameraIntrinsics& k) {
  if (k.width <= 0 || k.height <= 0) {
    throw DataError("intrinsics: resolution must be positive");
  }
  if (!(k.fx > 0.0) || !(k.fy > 0.0)) {
    throw DataError("intrinsics: focal lengths must be positive");
  }
  if (!(k.cx >= 0.0 && k.cx <= k.width) || !(k.cy >= 0.0 && k.cy <= k.height)) {
    throw DataError("intrinsics: principal point outside the image");
  }
}

CameraIntrinsics default_intrinsics() {
  CameraIntrinsics k;
  k.width = 224;
  k.height = 172;
  k.fx = 112.0 / std::tan(deg_to_rad(28.0));
  k.fy = 86.0 / std::tan(deg_to_rad(22.0));
  k.cx = 112.0;
  k.cy = 86.0;
  return k;
}

void validate(const DepthFrame& frame) {
  if (frame.width() <= 0 || frame.height() <= 0) {
    throw DataError("frame: empty image");
  }
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      const float d = frame.at(x, y);
      if (std::isnan(d)) continue;
      if (!(d > 0.0f && d < kMaxDepthM)) {
        throw DataError("frame: depth " + std::to_string(d) + " at (" +
                        std::to_string(x) + ", " + std::to_string(y) +
                        ") outside (0, 100) m");
      }
    }
  }
}

void validate(const CaptureCondition& condition) {
  validate(condition.intrinsics);
  if (condition.mode_id.empty()) {
    throw DataError("condition: mode_id must not be empty");
  }
  if (!(condition.nominal_angle_deg >= 0.0 && condition.nominal_angle_deg <= 75.0)) {
    throw DataError("condition: nominal_angle " +
                    std::to_string(condition.nominal_angle_deg) +
                    " outside [0, 75] deg");
  }
  if (const auto range = mode_range(condition.mode_id)) {
    if (!(condition.nominal_distance_m >= range->first &&
          condition.nominal_distance_m <= range->second)) {
      throw DataError("condition: distance " +
                      std::to_string(condition.nominal_distance_m) +
                      " outside the " + condition.mode_id + " range");
    }
  } else if (!(condition.nominal_distance_m > 0.0)) {
    throw DataError("condition: nominal_distance must be > 0");
  }
}

void validate(const FrameStack& stack) {
  if (stack.frames.empty()) throw DataError("stack: no frames");
  const int w = stack.width();
  const int h = stack.height();
  for (const DepthFrame& f : stack.frames) {
    if (f.width() != w || f.height() != h) {
      throw DataError("stack: frames disagree on dimensions");
    }
    validate(f);
  }
  validate(stack.condition);
}

namespace {

constexpr char kMagic[4] = {'D', 'P', 'F', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  const auto b = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])); };
  return b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24);
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  put_u32(out, bits);
}

float get_f32(const char* p) {
  const std::uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

void atomic_write(const std::string& path, const std::string& bytes) {
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw DataError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("rename failed for " + target.string());
  }
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

nlohmann::json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"width", k.width}, {"height", k.height}, {"fx", k.fx},
          {"fy", k.fy},       {"cx", k.cx},         {"cy", k.cy}};
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics k;
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  return k;
}

nlohmann::json sidecar_json(const CaptureCondition& c,
                            const std::optional<PlanarScene>& scene) {
  nlohmann::json j = {{"mode_id", c.mode_id},
                      {"nominal_distance_m", c.nominal_distance_m},
                      {"nominal_angle_deg", c.nominal_angle_deg},
                      {"intrinsics", intrinsics_to_json(c.intrinsics)}};
  if (scene) {
    nlohmann::json s = {{"plane_distance_m", scene->plane_distance_m},
                        {"incidence_angle_deg", scene->incidence_angle_deg},
                        {"plane_extent_m", scene->plane_extent_m}};
    if (scene->background_depth_m) {
      s["background_depth_m"] = *scene->background_depth_m;
    } else {
      s["background_depth_m"] = "invalid";
    }
    j["scene"] = std::move(s);
  }
  return j;
}

}  // namespace

void write_stack(const FrameStack& stack, const std::string& path,
                 const std::optional<PlanarScene>& scene) {
  validate(stack);
  if (scene) validate(*scene);

  const std::size_t w = static_cast<std::size_t>(stack.width());
  const std::size_t h = static_cast<std::size_t>(stack.height());
  std::string bytes;
  bytes.reserve(16 + stack.frames.size() * w * h * 4);
  bytes.append(kMagic, 4);
  put_u32(bytes, static_cast<std::uint32_t>(w));
  put_u32(bytes, static_cast<std::uint32_t>(h));
  put_u32(bytes, static_cast<std::uint32_t>(stack.frames.size()));
  for (const DepthFrame& f : stack.frames) {
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) put_f32(bytes, f.at(x, y));
    }
  }

  // Sidecar first: if it fails, the data file is untouched.
  atomic_write(path + kSidecarSuffix, sidecar_json(stack.condition, scene).dump(2) + "\n");
  atomic_write(path, bytes);
}

FrameStack read_stack(const std::string& path) {
  const std::string bytes = read_all(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("not a DPF1 file: " + path);
  }
  const std::uint32_t w = get_u32(bytes.data() + 4);
  const std::uint32_t h = get_u32(bytes.data() + 8);
  const std::uint32_t count = get_u32(bytes.data() + 12);
  if (w == 0 || h == 0 || count == 0) {
    throw DataError("DPF1 header declares an empty stack: " + path);
  }
  const std::size_t expected = 16 + std::size_t(w) * h * count * 4;
  if (bytes.size() != expected) {
    throw DataError("DPF1 payload length mismatch in " + path + ": header implies " +
                    std::to_string(expected) + " bytes, file has " +
                    std::to_string(bytes.size()));
  }

  FrameStack stack;
  stack.frames.reserve(count);
  const char* p = bytes.data() + 16;
  for (std::uint32_t i = 0; i < count; ++i) {
    DepthFrame frame(static_cast<int>(w), static_cast<int>(h));
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x, p += 4) {
        frame.at(static_cast<int>(x), static_cast<int>(y)) = get_f32(p);
      }
    }
    stack.frames.push_back(std::move(frame));
  }

  const std::string sidecar_path = path + kSidecarSuffix;
  if (!fs::exists(sidecar_path)) {
    throw DataError("missing sidecar: " + sidecar_path);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_all(sidecar_path));
    stack.condition.mode_id = j.at("mode_id").get<std::string>();
    stack.condition.nominal_distance_m = j.at("nominal_distance_m").get<double>();
    stack.condition.nominal_angle_deg = j.at("nominal_angle_deg").get<double>();
    stack.condition.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed sidecar " + sidecar_path + ": " + e.what());
  }

  validate(stack);
  return stack;
}

std::optional<PlanarScene> read_stack_scene(const std::string& path) {
  const std::string sidecar_path = path + kSidecarSuffix;
  if (!fs::exists(sidecar_path)) {
    throw DataError("missing sidecar: " + sidecar_path);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_all(sidecar_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed sidecar " + sidecar_path + ": " + e.what());
  }
  if (!j.contains("scene")) return std::nullopt;
  PlanarScene scene;
  try {
    const nlohmann::json& s = j.at("scene");
    scene.plane_distance_m = s.at("plane_distance_m").get<double>();
    scene.incidence_angle_deg = s.at("incidence_angle_deg").get<double>();
    scene.plane_extent_m = s.at("plane_extent_m").get<double>();
    const nlohmann::json& bg = s.at("background_depth_m");
    if (bg.is_string()) {
      if (bg.get<std::string>() != "invalid") {
        throw DataError("sidecar background_depth_m must be a number or \"invalid\"");
      }
      scene.background_depth_m = std::nullopt;
    } else {
      scene.background_depth_m = bg.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed scene block in " + sidecar_path + ": " + e.what());
  }
  validate(scene);
  return scene;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  atomic_write(path, text);
}

}  // namespace flexxnoise

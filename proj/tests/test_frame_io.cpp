#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "flexxnoise/frame_io.hpp"
#include "flexxnoise/rng.hpp"

using namespace flexxnoise;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() /
           ("flexxnoise_io_" + std::to_string(rd() % 1000000));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

FrameStack sample_stack(int frames = 3, int w = 32, int h = 24) {
  CameraIntrinsics k;
  k.width = w;
  k.height = h;
  k.fx = k.fy = 40.0;
  k.cx = w / 2.0;
  k.cy = h / 2.0;

  FrameStack stack;
  stack.condition = {"Mode_5_30fps", 1.0, 10.0, k};
  CounterRng rng(123);
  for (int f = 0; f < frames; ++f) {
    DepthFrame frame(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (rng.next_unit() < 0.1) continue;  // leave a NaN
        frame.at(x, y) = static_cast<float>(0.5 + rng.next_unit());
      }
    }
    stack.frames.push_back(std::move(frame));
  }
  return stack;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("default intrinsics derive from the field of view") {
  const CameraIntrinsics k = default_intrinsics();
  CHECK(k.width == 224);
  CHECK(k.height == 172);
  // fx = (width/2) / tan(28 deg), fy = (height/2) / tan(22 deg)
  CHECK(k.fx == doctest::Approx(210.64136411878919).epsilon(1e-12));
  CHECK(k.fy == doctest::Approx(212.85746939380144).epsilon(1e-12));
  CHECK(k.cx == 112.0);
  CHECK(k.cy == 86.0);
}

TEST_CASE("write/read round trip preserves every bit including NaN placement") {
  TempDir dir;
  const FrameStack stack = sample_stack();
  const std::string p1 = dir.file("stack.dpf");
  write_stack(stack, p1);

  const FrameStack back = read_stack(p1);
  REQUIRE(back.frames.size() == stack.frames.size());
  CHECK(back.condition.mode_id == stack.condition.mode_id);
  CHECK(back.condition.nominal_distance_m == stack.condition.nominal_distance_m);
  CHECK(back.condition.nominal_angle_deg == stack.condition.nominal_angle_deg);
  CHECK(back.condition.intrinsics == stack.condition.intrinsics);
  for (std::size_t f = 0; f < stack.frames.size(); ++f) {
    const auto& a = stack.frames[f].depths;
    const auto& b = back.frames[f].depths;
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    CHECK(std::memcmp(a.data(), b.data(), sizeof(float) * a.size()) == 0);
  }

  // Re-writing the reread stack reproduces the file byte for byte.
  const std::string p2 = dir.file("stack2.dpf");
  write_stack(back, p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(slurp(p1 + kSidecarSuffix) == slurp(p2 + kSidecarSuffix));
}

TEST_CASE("the header is fixed little-endian DPF1") {
  TempDir dir;
  FrameStack stack = sample_stack(2, 5, 4);
  const std::string p = dir.file("s.dpf");
  write_stack(stack, p);
  const std::string bytes = slurp(p);
  REQUIRE(bytes.size() == 16 + 2u * 5u * 4u * 4u);
  CHECK(bytes.substr(0, 4) == "DPF1");
  auto u32 = [&](std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 3])) << 24;
  };
  CHECK(u32(4) == 5);
  CHECK(u32(8) == 4);
  CHECK(u32(12) == 2);
}

TEST_CASE("corrupted containers error instead of being repaired") {
  TempDir dir;
  const FrameStack stack = sample_stack();
  const std::string p = dir.file("s.dpf");
  write_stack(stack, p);
  const std::string good = slurp(p);

  SUBCASE("wrong magic") {
    std::string bad = good;
    bad[0] = 'X';
    spit(p, bad);
    CHECK_THROWS_AS(read_stack(p), DataError);
  }
  SUBCASE("truncated payload") {
    spit(p, good.substr(0, good.size() - 7));
    CHECK_THROWS_AS(read_stack(p), DataError);
  }
  SUBCASE("trailing garbage") {
    spit(p, good + "zz");
    CHECK_THROWS_AS(read_stack(p), DataError);
  }
  SUBCASE("frame count inflated") {
    std::string bad = good;
    bad[12] = static_cast<char>(static_cast<unsigned char>(bad[12]) + 1);
    spit(p, bad);
    CHECK_THROWS_AS(read_stack(p), DataError);
  }
  SUBCASE("header shorter than the magic") {
    spit(p, "DP");
    CHECK_THROWS_AS(read_stack(p), DataError);
  }
  SUBCASE("missing sidecar") {
    fs::remove(p + kSidecarSuffix);
    CHECK_THROWS_AS(read_stack(p), DataError);
  }
  SUBCASE("malformed sidecar") {
    spit(p + kSidecarSuffix, "{not json");
    CHECK_THROWS_AS(read_stack(p), DataError);
  }
}

TEST_CASE("sidecar conditions outside the domain are rejected") {
  TempDir dir;
  FrameStack stack = sample_stack();
  const std::string p = dir.file("s.dpf");

  SUBCASE("angle beyond the 75 degree cap never reaches disk") {
    stack.condition.nominal_angle_deg = 80.0;
    CHECK_THROWS_AS(write_stack(stack, p), DataError);
    CHECK_FALSE(fs::exists(p));
    CHECK_FALSE(fs::exists(p + kSidecarSuffix));
  }
  SUBCASE("angle edited to 80 degrees fails on read") {
    write_stack(stack, p);
    std::string sidecar = slurp(p + kSidecarSuffix);
    const auto pos = sidecar.find("10.0");
    REQUIRE(pos != std::string::npos);
    sidecar.replace(pos, 4, "80.0");
    spit(p + kSidecarSuffix, sidecar);
    CHECK_THROWS_AS(read_stack(p), Error);
  }
  SUBCASE("distance outside the declared mode range") {
    stack.condition.nominal_distance_m = 5.0;  // Mode_5 tops out at 2.4 m
    CHECK_THROWS_AS(write_stack(stack, p), DataError);
  }
  SUBCASE("unknown modes carry no range constraint") {
    stack.condition.mode_id = "external_recording";
    stack.condition.nominal_distance_m = 55.0;
    write_stack(stack, p);
    CHECK(read_stack(p).condition.nominal_distance_m == 55.0);
  }
}

TEST_CASE("frames with impossible depths are rejected") {
  FrameStack stack = sample_stack(1);
  stack.frames[0].at(3, 3) = -0.25f;
  CHECK_THROWS_AS(validate(stack), DataError);
  stack.frames[0].at(3, 3) = 150.0f;  // beyond the 100 m bound
  CHECK_THROWS_AS(validate(stack), DataError);
  stack.frames[0].at(3, 3) = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(validate(stack), DataError);
  stack.frames[0].at(3, 3) = std::numeric_limits<float>::quiet_NaN();
  CHECK_NOTHROW(validate(stack));
}

TEST_CASE("scene metadata rides along in the sidecar") {
  TempDir dir;
  const FrameStack stack = sample_stack();
  const std::string p = dir.file("s.dpf");

  PlanarScene scene;
  scene.plane_distance_m = 1.25;
  scene.incidence_angle_deg = 10.0;
  scene.plane_extent_m = 0.4;
  scene.background_depth_m = 3.0;
  write_stack(stack, p, scene);
  auto back = read_stack_scene(p);
  REQUIRE(back.has_value());
  CHECK(*back == scene);

  scene.background_depth_m.reset();
  write_stack(stack, p, scene);
  back = read_stack_scene(p);
  REQUIRE(back.has_value());
  CHECK(*back == scene);

  write_stack(stack, p);
  CHECK_FALSE(read_stack_scene(p).has_value());
}

TEST_CASE("successful writes leave no temp droppings") {
  TempDir dir;
  write_stack(sample_stack(), dir.file("s.dpf"));
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir.path)) {
    ++files;
    CHECK(e.path().extension() != ".tmp");
  }
  CHECK(files == 2);  // container + sidecar
}

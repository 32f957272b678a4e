#pragma once

#include "mvgeom/camera.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline oracle::M3 to_m3(const mvgeom::Mat3& m) {
  oracle::M3 out{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out[i][j] = m(i, j);
  }
  return out;
}

inline oracle::V3 to_v3(const mvgeom::Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline mvgeom::Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> a(0.0, std::numbers::pi);
  return mvgeom::axis_angle(mvgeom::Vec3(n(rng), n(rng), n(rng)).normalized(), a(rng));
}

inline mvgeom::CameraPose make_camera(int w, int h, double f, const mvgeom::Mat3& r = mvgeom::Mat3::Identity(),
                                      const mvgeom::Vec3& t = mvgeom::Vec3::Zero()) {
  mvgeom::CameraPose cam;
  cam.intrinsics = {f, f, 0.5 * (w - 1), 0.5 * (h - 1), w, h};
  cam.pose.rotation = r;
  cam.pose.translation = t;
  return cam;
}

inline std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mvgeom_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace testing

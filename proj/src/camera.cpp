#include "mvgeom/camera.hpp"

#include "mvgeom/errors.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace mvgeom {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw DomainError("intrinsics: focal lengths must be positive");
  }
  if (width < 1 || height < 1) {
    throw DomainError("intrinsics: image size must be at least 1x1");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw DomainError("intrinsics: principal point outside the image");
  }
}

Intrinsics Intrinsics::resized(int out_width, int out_height) const {
  if (out_width < 1 || out_height < 1) {
    throw DomainError("intrinsics: resized dimensions must be positive");
  }
  const double sx = width > 1 && out_width > 1
                        ? static_cast<double>(out_width - 1) / (width - 1)
                        : static_cast<double>(out_width) / width;
  const double sy = height > 1 && out_height > 1
                        ? static_cast<double>(out_height - 1) / (height - 1)
                        : static_cast<double>(out_height) / height;
  return {fx * sx, fy * sy, cx * sx, cy * sy, out_width, out_height};
}

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

void RigidPose::validate(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw DomainError("pose: non-finite entries");
  }
  const Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) {
    throw DomainError("pose: rotation is not orthonormal");
  }
  if (rotation.determinant() <= 0.0) {
    throw DomainError("pose: rotation has negative determinant");
  }
}

RigidPose RigidPose::inverse() const {
  RigidPose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidPose RigidPose::compose(const RigidPose& other) const {
  RigidPose out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

Vec3 pixel_direction(double u, double v, const Intrinsics& k) {
  return {(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0};
}

Vec3 unproject(double u, double v, double depth, const CameraPose& cam) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw DomainError("unproject: depth must be positive and finite");
  }
  const Intrinsics& k = cam.intrinsics;
  if (u < -0.5 || u > k.width - 0.5 || v < -0.5 || v > k.height - 0.5) {
    throw DomainError("unproject: pixel outside the image");
  }
  return cam.pose.camera_to_world(depth * pixel_direction(u, v, k));
}

std::optional<Projection> project(const Vec3& p, const CameraPose& cam) {
  const Vec3 pc = cam.pose.world_to_camera(p);
  if (!(pc.z() > 0.0)) return std::nullopt;
  const Intrinsics& k = cam.intrinsics;
  return Projection{k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy, pc.z()};
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = (-up).cross(z);
  if (x.norm() < 1e-12) {
    throw DomainError("look_at: up vector parallel to viewing direction");
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

std::string format_camera_line(const CameraPose& cam) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  const Intrinsics& k = cam.intrinsics;
  os << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy << ' ' << k.width << ' ' << k.height;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) os << ' ' << cam.pose.rotation(r, c);
  }
  for (int i = 0; i < 3; ++i) os << ' ' << cam.pose.translation(i);
  return os.str();
}

CameraPose parse_camera_line(const std::string& line) {
  std::istringstream is(line);
  double v[18];
  for (double& x : v) {
    if (!(is >> x)) throw FormatError("trajectory: expected 18 numbers per line: '" + line + "'");
  }
  std::string extra;
  if (is >> extra) throw FormatError("trajectory: trailing tokens on line: '" + line + "'");
  if (v[4] != std::floor(v[4]) || v[5] != std::floor(v[5])) {
    throw FormatError("trajectory: image size must be integral");
  }
  CameraPose cam;
  cam.intrinsics = {v[0], v[1], v[2], v[3], static_cast<int>(v[4]), static_cast<int>(v[5])};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) cam.pose.rotation(r, c) = v[6 + 3 * r + c];
  }
  cam.pose.translation = Vec3(v[15], v[16], v[17]);
  try {
    cam.intrinsics.validate();
    cam.pose.validate(1e-6);
  } catch (const DomainError& e) {
    throw FormatError(std::string("trajectory: ") + e.what());
  }
  return cam;
}

namespace {
bool is_blank_or_comment(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}
}  // namespace

std::vector<CameraPose> read_trajectory(std::istream& in) {
  std::vector<CameraPose> cams;
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank_or_comment(line)) continue;
    cams.push_back(parse_camera_line(line));
  }
  return cams;
}

std::vector<CameraPose> read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("trajectory: cannot open " + path);
  return read_trajectory(in);
}

void write_trajectory(std::ostream& out, const std::vector<CameraPose>& cams) {
  for (const auto& cam : cams) out << format_camera_line(cam) << '\n';
}

void write_trajectory(const std::string& path, const std::vector<CameraPose>& cams) {
  std::ofstream out(path);
  if (!out) throw FormatError("trajectory: cannot write " + path);
  write_trajectory(out, cams);
}

}  // namespace mvgeom

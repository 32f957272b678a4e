#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mvgeom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole intrinsics. Pixel centers sit at integer coordinates, so the
/// image covers u in [-0.5, width - 0.5] and v in [-0.5, height - 0.5].
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;

  /// Intrinsics for the same camera sampled at a different grid size, using
  /// the corner-aligned pixel-center mapping of resize_bilinear.
  Intrinsics resized(int out_width, int out_height) const;

  Mat3 matrix() const;
};

/// Rigid transform in the camera-to-world convention: a camera-space point
/// P_c maps to world space as P = rotation * P_c + translation.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidPose identity() { return {}; }

  void validate(double tol = 1e-9) const;

  RigidPose inverse() const;
  /// (*this) applied after `other`.
  RigidPose compose(const RigidPose& other) const;

  Vec3 camera_to_world(const Vec3& p_cam) const { return rotation * p_cam + translation; }
  Vec3 world_to_camera(const Vec3& p_world) const {
    return rotation.transpose() * (p_world - translation);
  }
  Vec3 center() const { return translation; }
};

struct CameraPose {
  Intrinsics intrinsics;
  RigidPose pose;

  void validate() const {
    intrinsics.validate();
    pose.validate();
  }
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;  // camera-space depth, always > 0
};

/// Camera-space ray direction through pixel (u, v) with unit z component.
Vec3 pixel_direction(double u, double v, const Intrinsics& k);

/// World point at camera depth `depth` along the ray through pixel (u, v).
/// Throws DomainError for non-positive depth or out-of-image pixels.
Vec3 unproject(double u, double v, double depth, const CameraPose& cam);

/// Pixel coordinates and depth of a world point. Returns nullopt when the
/// point is on or behind the camera plane (z <= 0); callers cull those.
std::optional<Projection> project(const Vec3& p, const CameraPose& cam);

/// Rotation by `angle` radians about a unit `axis`.
Mat3 axis_angle(const Vec3& axis, double angle);

/// Camera-to-world rotation for a camera at `eye` looking at `target`, with
/// image y pointing along -`up` (OpenCV convention: x right, y down, z forward).
Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& up);

// Trajectory files: one camera per line,
//   fx fy cx cy w h r00 r01 r02 r10 r11 r12 r20 r21 r22 t0 t1 t2
// Blank lines and lines starting with '#' are ignored.

std::string format_camera_line(const CameraPose& cam);
CameraPose parse_camera_line(const std::string& line);

std::vector<CameraPose> read_trajectory(std::istream& in);
std::vector<CameraPose> read_trajectory(const std::string& path);
void write_trajectory(std::ostream& out, const std::vector<CameraPose>& cams);
void write_trajectory(const std::string& path, const std::vector<CameraPose>& cams);

}  // namespace mvgeom

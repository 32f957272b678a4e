#pragma once

#include "mvgeom/camera.hpp"
#include "mvgeom/config.hpp"
#include "mvgeom/depthmesh.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mvgeom {

/// Depth reported for pixels whose ray hits nothing.
inline constexpr double kFarDepth = 1000.0;

/// Band-limited procedural texture over 2D surface coordinates. Values stay
/// inside [0.05, 0.95]; the shortest spatial wavelength is `period`.
struct Texture {
  enum class Kind { kChecker, kGradient, kNoise };

  Kind kind = Kind::kNoise;
  double period = 0.5;
  std::uint64_t seed = 0;

  std::vector<double> eval(double s, double t, int channels) const;
};

struct Primitive {
  enum class Kind { kPlane, kBox, kStepWall };

  Kind kind = Kind::kPlane;
  Texture texture;

  // Plane: rectangle centred at `center` spanned by `u_axis` and normal x u_axis.
  // Non-positive half extents mean unbounded along that axis.
  Vec3 center = Vec3(0, 0, 3);
  Vec3 normal = Vec3(0, 0, -1);
  Vec3 u_axis = Vec3(1, 0, 0);
  double half_u = 0.0;
  double half_v = 0.0;

  // Box: axis-aligned [box_min, box_max].
  Vec3 box_min = Vec3::Zero();
  Vec3 box_max = Vec3::Ones();

  // Step wall: fronto-parallel wall at z = z_left for x < split_x and
  // z = z_right otherwise.
  double z_left = 2.0;
  double z_right = 3.0;
  double split_x = 0.0;

  static Primitive plane(const Vec3& center, const Vec3& normal, const Vec3& u_axis, double half_u, double half_v,
                         Texture texture);
  static Primitive box(const Vec3& lo, const Vec3& hi, Texture texture);
  static Primitive step_wall(double z_left, double z_right, double split_x, Texture texture);

  void validate() const;
};

enum class TrajectoryKind { kOrbit, kXTranslation, kYTranslation };

TrajectoryKind parse_trajectory_kind(const std::string& name);

struct TrajectoryParams {
  Intrinsics intrinsics;
  double step = 0.1;             // translation per frame
  Vec3 origin = Vec3::Zero();    // first camera centre for translations
  Mat3 rotation = Mat3::Identity();
  double radius = 2.0;           // orbit radius
  Vec3 center = Vec3::Zero();    // orbit look-at point
  double arc_degrees = 360.0;    // orbit sweep; frame i sits at arc * i / N
};

/// Orbit: cameras on a circle in the x-z plane around `center`, looking at
/// it. Translations: fixed rotation, centre moving by `step` per frame.
std::vector<CameraPose> make_trajectory(TrajectoryKind kind, int n, const TrajectoryParams& params);

struct SceneSpec {
  std::vector<Primitive> primitives;
  int channels = 4;
  Intrinsics intrinsics;
  TrajectoryKind trajectory = TrajectoryKind::kXTranslation;
  int frames = 8;
  TrajectoryParams trajectory_params;

  void validate() const;
  std::vector<CameraPose> make_poses() const;

  /// Keys: width height fx fy cx cy channels frames trajectory step radius
  /// origin center arc_degrees, and primitive.<name> = <kind> attr=value...
  static SceneSpec from_config(const Config& cfg);
};

struct SceneHit {
  double distance = 0.0;  // along the (not necessarily unit) ray direction
  Vec3 point;
  int primitive = -1;
  double s = 0.0;
  double t = 0.0;
};

std::optional<SceneHit> intersect(const SceneSpec& scene, const Vec3& origin, const Vec3& dir);

struct GroundTruthRender {
  FeatureGrid features;   // texture at the hit, 0 for background
  DepthMap depth;         // camera-space z, kFarDepth for background
  FeatureGrid primitive;  // 1 channel, hit primitive index or -1
};

GroundTruthRender render_ground_truth(const SceneSpec& scene, const CameraPose& cam, int h, int w);

/// True when `point` lies inside cam's image and the first surface along the
/// ray from cam's centre is `point` itself (within `tol` relative distance).
bool visible_from(const SceneSpec& scene, const CameraPose& cam, const Vec3& point, double tol = 1e-6);

}  // namespace mvgeom

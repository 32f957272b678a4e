#include "mvgeom/synthscene.hpp"

#include "mvgeom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace mvgeom {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kNoiseWaves = 4;

// Deterministic per-(seed, channel) parameters in [0, 1).
std::vector<double> texture_params(std::uint64_t seed, int channel, int count) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(channel), 0x7e57u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (double& v : out) v = unit(rng);
  return out;
}

}  // namespace

std::vector<double> Texture::eval(double s, double t, int channels) const {
  std::vector<double> out(static_cast<std::size_t>(channels));
  const double k = kTwoPi / period;
  for (int ch = 0; ch < channels; ++ch) {
    const std::vector<double> p = texture_params(seed, ch, 4 * kNoiseWaves);
    double v = 0.5;
    switch (kind) {
      case Kind::kChecker:
        v = 0.5 + 0.4 * std::sin(k * s + kTwoPi * p[0]) * std::sin(k * t + kTwoPi * p[1]);
        break;
      case Kind::kGradient:
        v = 0.5 + 0.4 * std::sin(0.25 * k * ((p[0] - 0.5) * s + (p[1] - 0.5) * t) + kTwoPi * p[2]);
        break;
      case Kind::kNoise: {
        double acc = 0.0;
        for (int i = 0; i < kNoiseWaves; ++i) {
          const double freq = k * (0.5 + 0.5 * p[static_cast<std::size_t>(4 * i)]);
          const double angle = kTwoPi * p[static_cast<std::size_t>(4 * i + 1)];
          const double phase = kTwoPi * p[static_cast<std::size_t>(4 * i + 2)];
          acc += std::sin(freq * (std::cos(angle) * s + std::sin(angle) * t) + phase);
        }
        v = 0.5 + 0.4 * acc / kNoiseWaves;
        break;
      }
    }
    out[static_cast<std::size_t>(ch)] = v;
  }
  return out;
}

Primitive Primitive::plane(const Vec3& center, const Vec3& normal, const Vec3& u_axis, double half_u, double half_v,
                           Texture texture) {
  Primitive p;
  p.kind = Kind::kPlane;
  p.center = center;
  p.normal = normal;
  p.u_axis = u_axis;
  p.half_u = half_u;
  p.half_v = half_v;
  p.texture = texture;
  return p;
}

Primitive Primitive::box(const Vec3& lo, const Vec3& hi, Texture texture) {
  Primitive p;
  p.kind = Kind::kBox;
  p.box_min = lo;
  p.box_max = hi;
  p.texture = texture;
  return p;
}

Primitive Primitive::step_wall(double z_left, double z_right, double split_x, Texture texture) {
  Primitive p;
  p.kind = Kind::kStepWall;
  p.z_left = z_left;
  p.z_right = z_right;
  p.split_x = split_x;
  p.texture = texture;
  return p;
}

void Primitive::validate() const {
  if (!(texture.period > 0.0)) throw ConfigError("primitive: texture period must be positive");
  switch (kind) {
    case Kind::kPlane:
      if (normal.norm() < 1e-12) throw ConfigError("plane: zero normal");
      if (normal.normalized().cross(u_axis).norm() < 1e-9) throw ConfigError("plane: u axis parallel to normal");
      break;
    case Kind::kBox:
      if (!(box_min.array() < box_max.array()).all()) throw ConfigError("box: min must be below max on every axis");
      break;
    case Kind::kStepWall:
      if (!(z_left > 0.0) || !(z_right > 0.0)) throw ConfigError("step wall: depths must be positive");
      break;
  }
}

TrajectoryKind parse_trajectory_kind(const std::string& name) {
  if (name == "orbit") return TrajectoryKind::kOrbit;
  if (name == "x-translation") return TrajectoryKind::kXTranslation;
  if (name == "y-translation") return TrajectoryKind::kYTranslation;
  throw ConfigError("unknown trajectory kind '" + name + "' (expected orbit, x-translation or y-translation)");
}

std::vector<CameraPose> make_trajectory(TrajectoryKind kind, int n, const TrajectoryParams& params) {
  if (n < 2) throw ConfigError("trajectory: need at least two poses");
  params.intrinsics.validate();
  std::vector<CameraPose> poses;
  poses.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    CameraPose cam;
    cam.intrinsics = params.intrinsics;
    switch (kind) {
      case TrajectoryKind::kOrbit: {
        const double theta = params.arc_degrees * std::numbers::pi / 180.0 * i / n;
        const Vec3 eye = params.center + params.radius * Vec3(std::sin(theta), 0.0, -std::cos(theta));
        cam.pose.rotation = look_at_rotation(eye, params.center, Vec3(0.0, -1.0, 0.0));
        cam.pose.translation = eye;
        break;
      }
      case TrajectoryKind::kXTranslation:
      case TrajectoryKind::kYTranslation: {
        const Vec3 axis = kind == TrajectoryKind::kXTranslation ? Vec3::UnitX() : Vec3::UnitY();
        cam.pose.rotation = params.rotation;
        cam.pose.translation = params.origin + params.step * i * axis;
        break;
      }
    }
    poses.push_back(cam);
  }
  return poses;
}

void SceneSpec::validate() const {
  if (primitives.empty()) throw ConfigError("scene: needs at least one primitive");
  if (channels < 1) throw ConfigError("scene: channels must be positive");
  if (frames < 2) throw ConfigError("scene: trajectory needs at least two frames");
  intrinsics.validate();
  for (const auto& p : primitives) p.validate();
}

std::vector<CameraPose> SceneSpec::make_poses() const {
  TrajectoryParams params = trajectory_params;
  params.intrinsics = intrinsics;
  return make_trajectory(trajectory, frames, params);
}

namespace {

Texture parse_texture(const std::map<std::string, std::string>& attrs, const std::string& what) {
  Texture tex;
  const auto kind = attrs.count("texture") ? attrs.at("texture") : std::string("noise");
  if (kind == "checker") {
    tex.kind = Texture::Kind::kChecker;
  } else if (kind == "gradient") {
    tex.kind = Texture::Kind::kGradient;
  } else if (kind == "noise") {
    tex.kind = Texture::Kind::kNoise;
  } else {
    throw ConfigError(what + ": unknown texture '" + kind + "'");
  }
  if (attrs.count("period")) tex.period = parse_double(attrs.at("period"), what + ".period");
  if (attrs.count("seed")) tex.seed = static_cast<std::uint64_t>(parse_int(attrs.at("seed"), what + ".seed"));
  return tex;
}

double attr_double(const std::map<std::string, std::string>& attrs, const std::string& key, double fallback,
                   const std::string& what) {
  const auto it = attrs.find(key);
  return it == attrs.end() ? fallback : parse_double(it->second, what + "." + key);
}

Vec3 attr_vec3(const std::map<std::string, std::string>& attrs, const std::string& key, const Vec3& fallback,
               const std::string& what) {
  const auto it = attrs.find(key);
  return it == attrs.end() ? fallback : parse_vec3(it->second, what + "." + key);
}

Primitive parse_primitive(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  std::string kind;
  is >> kind;
  std::string rest;
  std::getline(is, rest);
  const auto attrs = parse_attributes(rest);
  const Texture tex = parse_texture(attrs, key);
  if (kind == "plane") {
    Primitive p = Primitive::plane(attr_vec3(attrs, "center", Vec3(0, 0, 3), key),
                                   attr_vec3(attrs, "normal", Vec3(0, 0, -1), key),
                                   attr_vec3(attrs, "uaxis", Vec3(1, 0, 0), key), 0.0, 0.0, tex);
    if (attrs.count("half")) {
      std::string h = attrs.at("half");
      std::replace(h.begin(), h.end(), ',', ' ');
      std::istringstream hs(h);
      if (!(hs >> p.half_u >> p.half_v)) throw ConfigError(key + ".half: expected two numbers");
    }
    return p;
  }
  if (kind == "box") {
    return Primitive::box(attr_vec3(attrs, "min", Vec3(-0.5, -0.5, 2.0), key),
                          attr_vec3(attrs, "max", Vec3(0.5, 0.5, 2.5), key), tex);
  }
  if (kind == "step_wall") {
    return Primitive::step_wall(attr_double(attrs, "z_left", 2.0, key), attr_double(attrs, "z_right", 3.0, key),
                                attr_double(attrs, "split_x", 0.0, key), tex);
  }
  throw ConfigError(key + ": unknown primitive kind '" + kind + "'");
}

}  // namespace

SceneSpec SceneSpec::from_config(const Config& cfg) {
  SceneSpec scene;
  const int w = static_cast<int>(cfg.get_int("width", 64));
  const int h = static_cast<int>(cfg.get_int("height", w));
  const double fx = cfg.get_double("fx", static_cast<double>(w));
  scene.intrinsics = {fx, cfg.get_double("fy", fx), cfg.get_double("cx", 0.5 * (w - 1)),
                      cfg.get_double("cy", 0.5 * (h - 1)), w, h};
  scene.channels = static_cast<int>(cfg.get_int("channels", 4));
  scene.frames = static_cast<int>(cfg.get_int("frames", 8));
  scene.trajectory = parse_trajectory_kind(cfg.get_string("trajectory", "x-translation"));
  TrajectoryParams& tp = scene.trajectory_params;
  tp.step = cfg.get_double("step", tp.step);
  tp.origin = cfg.get_vec3("origin", tp.origin);
  tp.radius = cfg.get_double("radius", tp.radius);
  tp.center = cfg.get_vec3("center", tp.center);
  tp.arc_degrees = cfg.get_double("arc_degrees", tp.arc_degrees);
  for (const std::string& key : cfg.keys_with_prefix("primitive.")) {
    scene.primitives.push_back(parse_primitive(key, cfg.get_string(key)));
  }
  scene.validate();
  return scene;
}

namespace {

constexpr double kParallelEps = 1e-12;

std::optional<SceneHit> intersect_plane(const Vec3& center, const Vec3& normal, const Vec3& u_axis, double half_u,
                                        double half_v, const Vec3& o, const Vec3& d) {
  const Vec3 n = normal.normalized();
  const double denom = n.dot(d);
  if (std::abs(denom) < kParallelEps) return std::nullopt;
  const double dist = n.dot(center - o) / denom;
  if (!(dist > 0.0)) return std::nullopt;
  const Vec3 p = o + dist * d;
  const Vec3 u = (u_axis - n.dot(u_axis) * n).normalized();
  const Vec3 v = n.cross(u);
  const double s = u.dot(p - center);
  const double t = v.dot(p - center);
  if (half_u > 0.0 && std::abs(s) > half_u) return std::nullopt;
  if (half_v > 0.0 && std::abs(t) > half_v) return std::nullopt;
  return SceneHit{dist, p, -1, s, t};
}

std::optional<SceneHit> intersect_box(const Vec3& lo, const Vec3& hi, const Vec3& o, const Vec3& d) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int axis_near = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d(a)) < kParallelEps) {
      if (o(a) < lo(a) || o(a) > hi(a)) return std::nullopt;
      continue;
    }
    double t0 = (lo(a) - o(a)) / d(a);
    double t1 = (hi(a) - o(a)) / d(a);
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) {
      t_near = t0;
      axis_near = a;
    }
    t_far = std::min(t_far, t1);
  }
  if (!(t_near <= t_far) || !(t_near > 0.0) || axis_near < 0) return std::nullopt;
  const Vec3 p = o + t_near * d;
  // Surface coordinates: the two axes spanning the entered face.
  const int a1 = (axis_near + 1) % 3;
  const int a2 = (axis_near + 2) % 3;
  return SceneHit{t_near, p, -1, p(a1), p(a2)};
}

std::optional<SceneHit> intersect_step_wall(const Primitive& prim, const Vec3& o, const Vec3& d) {
  std::optional<SceneHit> best;
  for (int side = 0; side < 2; ++side) {
    const double z = side == 0 ? prim.z_left : prim.z_right;
    if (std::abs(d.z()) < kParallelEps) continue;
    const double dist = (z - o.z()) / d.z();
    if (!(dist > 0.0)) continue;
    const Vec3 p = o + dist * d;
    const bool left = p.x() < prim.split_x;
    if (left != (side == 0)) continue;
    if (!best || dist < best->distance) best = SceneHit{dist, p, -1, p.x(), p.y()};
  }
  return best;
}

}  // namespace

std::optional<SceneHit> intersect(const SceneSpec& scene, const Vec3& origin, const Vec3& dir) {
  std::optional<SceneHit> best;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const Primitive& prim = scene.primitives[i];
    std::optional<SceneHit> hit;
    switch (prim.kind) {
      case Primitive::Kind::kPlane:
        hit = intersect_plane(prim.center, prim.normal, prim.u_axis, prim.half_u, prim.half_v, origin, dir);
        break;
      case Primitive::Kind::kBox:
        hit = intersect_box(prim.box_min, prim.box_max, origin, dir);
        break;
      case Primitive::Kind::kStepWall:
        hit = intersect_step_wall(prim, origin, dir);
        break;
    }
    if (hit && (!best || hit->distance < best->distance)) {
      hit->primitive = static_cast<int>(i);
      best = hit;
    }
  }
  return best;
}

GroundTruthRender render_ground_truth(const SceneSpec& scene, const CameraPose& cam, int h, int w) {
  cam.validate();
  if (cam.intrinsics.width != w || cam.intrinsics.height != h) {
    throw DomainError("render_ground_truth: camera size differs from output size");
  }
  GroundTruthRender out{FeatureGrid(h, w, scene.channels), DepthMap(h, w, 1, static_cast<float>(kFarDepth)),
                        FeatureGrid(h, w, 1, -1.0f)};
  const Vec3 origin = cam.pose.center();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const Vec3 dir_cam = pixel_direction(c, r, cam.intrinsics);
      const auto hit = intersect(scene, origin, cam.pose.rotation * dir_cam);
      if (!hit) continue;
      // dir_cam has unit z, so the ray parameter is the camera depth.
      out.depth.at(r, c) = static_cast<float>(hit->distance);
      out.primitive.at(r, c) = static_cast<float>(hit->primitive);
      const auto f = scene.primitives[static_cast<std::size_t>(hit->primitive)].texture.eval(hit->s, hit->t, scene.channels);
      for (int ch = 0; ch < scene.channels; ++ch) out.features.at(r, c, ch) = static_cast<float>(f[static_cast<std::size_t>(ch)]);
    }
  }
  return out;
}

bool visible_from(const SceneSpec& scene, const CameraPose& cam, const Vec3& point, double tol) {
  const auto proj = project(point, cam);
  if (!proj) return false;
  const Intrinsics& k = cam.intrinsics;
  if (proj->u < -0.5 || proj->u > k.width - 0.5 || proj->v < -0.5 || proj->v > k.height - 0.5) return false;
  const Vec3 origin = cam.pose.center();
  const Vec3 dir = point - origin;
  const auto hit = intersect(scene, origin, dir);
  // dir spans origin -> point, so the point itself sits at distance 1.
  return hit && hit->distance >= 1.0 - tol;
}

}  // namespace mvgeom

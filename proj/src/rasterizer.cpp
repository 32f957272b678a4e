#include "mvgeom/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvgeom {

namespace {

struct ScreenVertex {
  double x = 0.0;
  double y = 0.0;
  double inv_z = 0.0;
};

void check_inputs(const AnchorFeatureMesh& mesh, const CameraPose& cam, int out_h, int out_w) {
  mesh.validate();
  cam.validate();
  if (out_h < 1 || out_w < 1) throw DomainError("render: output size must be positive");
  if (cam.intrinsics.width != out_w || cam.intrinsics.height != out_h) {
    throw DomainError("render: camera image size differs from output size");
  }
}

RenderOutput blank_output(const AnchorFeatureMesh& mesh, int out_h, int out_w) {
  return {FeatureGrid(out_h, out_w, mesh.texture.channels()), FeatureGrid(out_h, out_w, 1),
          FeatureGrid(out_h, out_w, 1)};
}

// Camera-space vertices; shared by both renderers so culling agrees exactly.
std::vector<Vec3> to_camera_space(const AnchorFeatureMesh& mesh, const CameraPose& cam) {
  std::vector<Vec3> out;
  out.reserve(mesh.vertices.size());
  for (const Vec3& v : mesh.vertices) out.push_back(cam.pose.world_to_camera(v));
  return out;
}

bool culled(const Triangle& t, const std::vector<Vec3>& cam_vertices) {
  return cam_vertices[static_cast<std::size_t>(t[0])].z() <= kNearCull ||
         cam_vertices[static_cast<std::size_t>(t[1])].z() <= kNearCull ||
         cam_vertices[static_cast<std::size_t>(t[2])].z() <= kNearCull;
}

void write_texel(RenderOutput& out, const AnchorFeatureMesh& mesh, const Triangle& t, const double (&w)[3],
                 int r, int c, double z) {
  const FeatureGrid& tex = mesh.texture;
  for (int ch = 0; ch < tex.channels(); ++ch) {
    double v = 0.0;
    for (int k = 0; k < 3; ++k) {
      v += w[k] * tex.data()[static_cast<std::size_t>(t[k]) * tex.channels() + ch];
    }
    out.features.at(r, c, ch) = static_cast<float>(v);
  }
  out.mask.at(r, c) = 1.0f;
  out.depth_buffer.at(r, c) = static_cast<float>(z);
}

// Edge function of p against the directed edge a -> b.
double edge(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

}  // namespace

RenderOutput render(const AnchorFeatureMesh& mesh, const CameraPose& cam, int out_h, int out_w) {
  check_inputs(mesh, cam, out_h, out_w);
  RenderOutput out = blank_output(mesh, out_h, out_w);
  std::vector<double> zbuf(static_cast<std::size_t>(out_h) * out_w, std::numeric_limits<double>::infinity());

  const std::vector<Vec3> cv = to_camera_space(mesh, cam);
  const Intrinsics& k = cam.intrinsics;
  std::vector<ScreenVertex> sv(cv.size());
  for (std::size_t i = 0; i < cv.size(); ++i) {
    if (cv[i].z() > kNearCull) {
      sv[i] = {k.fx * cv[i].x() / cv[i].z() + k.cx, k.fy * cv[i].y() / cv[i].z() + k.cy, 1.0 / cv[i].z()};
    }
  }

  for (const Triangle& t : mesh.triangles) {
    if (culled(t, cv)) continue;
    const ScreenVertex* p[3] = {&sv[static_cast<std::size_t>(t[0])], &sv[static_cast<std::size_t>(t[1])],
                                &sv[static_cast<std::size_t>(t[2])]};
    const double area = edge(*p[0], *p[1], p[2]->x, p[2]->y);
    if (area == 0.0 || !std::isfinite(area)) continue;
    const double orient = area > 0.0 ? 1.0 : -1.0;

    // Each edge is evaluated from its lower vertex index so that two
    // triangles sharing it compute exactly negated values (watertight).
    struct EdgeEq {
      const ScreenVertex* a;
      const ScreenVertex* b;
      double sign;
      bool owns_ties;
    } edges[3];
    for (int e = 0; e < 3; ++e) {
      const std::int32_t ia = t[(e + 1) % 3];
      const std::int32_t ib = t[(e + 2) % 3];
      const bool forward = ia < ib;
      const ScreenVertex* lo = forward ? p[(e + 1) % 3] : p[(e + 2) % 3];
      const ScreenVertex* hi = forward ? p[(e + 2) % 3] : p[(e + 1) % 3];
      const double sign = (forward ? 1.0 : -1.0) * orient;
      // Traversal direction of the edge in the positively oriented triangle.
      const double dx = (p[(e + 2) % 3]->x - p[(e + 1) % 3]->x) * orient;
      const double dy = (p[(e + 2) % 3]->y - p[(e + 1) % 3]->y) * orient;
      edges[e] = {lo, hi, sign, dy < 0.0 || (dy == 0.0 && dx > 0.0)};
    }

    const double min_x = std::min({p[0]->x, p[1]->x, p[2]->x});
    const double max_x = std::max({p[0]->x, p[1]->x, p[2]->x});
    const double min_y = std::min({p[0]->y, p[1]->y, p[2]->y});
    const double max_y = std::max({p[0]->y, p[1]->y, p[2]->y});
    const int c0 = std::max(0, static_cast<int>(std::ceil(min_x)));
    const int c1 = std::min(out_w - 1, static_cast<int>(std::floor(max_x)));
    const int r0 = std::max(0, static_cast<int>(std::ceil(min_y)));
    const int r1 = std::min(out_h - 1, static_cast<int>(std::floor(max_y)));

    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        double lambda[3];
        bool inside = true;
        for (int e = 0; e < 3 && inside; ++e) {
          const double val = edges[e].sign * edge(*edges[e].a, *edges[e].b, c, r);
          inside = val > 0.0 || (val == 0.0 && edges[e].owns_ties);
          lambda[e] = val * orient;
        }
        if (!inside) continue;
        // lambda[e] is the (scaled) barycentric weight of the vertex opposite edge e.
        double inv_z = 0.0;
        double w[3];
        for (int e = 0; e < 3; ++e) {
          w[e] = lambda[e] / area * p[e]->inv_z;
          inv_z += w[e];
        }
        const double z = 1.0 / inv_z;
        const std::size_t pix = static_cast<std::size_t>(r) * out_w + c;
        if (!(z < zbuf[pix] - kDepthTieEpsilon)) continue;
        zbuf[pix] = z;
        for (double& wi : w) wi /= inv_z;
        write_texel(out, mesh, t, w, r, c, z);
      }
    }
  }
  return out;
}

RenderOutput render_bruteforce(const AnchorFeatureMesh& mesh, const CameraPose& cam, int out_h, int out_w) {
  check_inputs(mesh, cam, out_h, out_w);
  RenderOutput out = blank_output(mesh, out_h, out_w);
  const std::vector<Vec3> cv = to_camera_space(mesh, cam);

  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      // Direction has unit z, so the ray parameter equals camera depth.
      const Vec3 dir = pixel_direction(c, r, cam.intrinsics);
      double best_z = std::numeric_limits<double>::infinity();
      const Triangle* best = nullptr;
      double best_w[3] = {0.0, 0.0, 0.0};
      for (const Triangle& t : mesh.triangles) {
        if (culled(t, cv)) continue;
        const Vec3& v0 = cv[static_cast<std::size_t>(t[0])];
        const Vec3 e1 = cv[static_cast<std::size_t>(t[1])] - v0;
        const Vec3 e2 = cv[static_cast<std::size_t>(t[2])] - v0;
        const Vec3 pvec = dir.cross(e2);
        const double det = e1.dot(pvec);
        if (det == 0.0) continue;
        const double inv_det = 1.0 / det;
        const Vec3 tvec = -v0;  // ray origin is the camera center
        const double b1 = tvec.dot(pvec) * inv_det;
        if (b1 < 0.0 || b1 > 1.0) continue;
        const Vec3 qvec = tvec.cross(e1);
        const double b2 = dir.dot(qvec) * inv_det;
        if (b2 < 0.0 || b1 + b2 > 1.0) continue;
        const double z = e2.dot(qvec) * inv_det;
        if (!(z > 0.0)) continue;
        if (!(z < best_z - kDepthTieEpsilon)) continue;
        best_z = z;
        best = &t;
        best_w[0] = 1.0 - b1 - b2;
        best_w[1] = b1;
        best_w[2] = b2;
      }
      if (best != nullptr) write_texel(out, mesh, *best, best_w, r, c, best_z);
    }
  }
  return out;
}

}  // namespace mvgeom

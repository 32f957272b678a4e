#include "helpers.hpp"
#include "mvgeom/rasterizer.hpp"

#include <doctest.h>

using namespace mvgeom;

namespace {

AnchorFeatureMesh raw_mesh(int gh, int gw, std::vector<Vec3> vertices, std::vector<Triangle> tris, FeatureGrid tex) {
  AnchorFeatureMesh m;
  m.height = gh;
  m.width = gw;
  m.vertices = std::move(vertices);
  m.triangles = std::move(tris);
  m.texture = std::move(tex);
  return m;
}

}  // namespace

TEST_CASE("single triangle covers the expected pixel centers") {
  const CameraPose cam = testing::make_camera(8, 8, 8.0);
  // Triangle in the z = 1 plane spanning pixels (1,1), (6,1), (1,6).
  auto at = [&](double u, double v) { return unproject(u, v, 1.0, cam); };
  FeatureGrid tex(1, 3, 1);
  tex.data() = {1.0f, 2.0f, 3.0f};
  const AnchorFeatureMesh m = raw_mesh(1, 3, {at(0.5, 0.5), at(6.5, 0.5), at(0.5, 6.5)}, {{0, 1, 2}}, tex);
  const RenderOutput out = render(m, cam, 8, 8);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      const bool inside = c >= 1 && r >= 1 && (c + r) < 7;
      CHECK(out.mask.at(r, c) == (inside ? 1.0f : 0.0f));
      if (inside) CHECK(out.depth_buffer.at(r, c) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("shared edges are watertight") {
  // A plane of many small triangles whose edges pass exactly through pixel
  // centers; every pixel strictly inside the outer boundary must be covered.
  const CameraPose cam = testing::make_camera(12, 12, 12.0);
  const int n = 7;
  std::vector<Vec3> verts;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) verts.push_back(unproject(c * 11.0 / (n - 1) - 0.25, r * 11.0 / (n - 1) - 0.25, 2.0, cam));
  }
  const AnchorFeatureMesh m = raw_mesh(n, n, verts, grid_triangulate(n, n), FeatureGrid(n, n, 1, 1.0f));
  const RenderOutput out = render(m, cam, 12, 12);
  for (int r = 0; r < 11; ++r) {
    for (int c = 0; c < 11; ++c) CHECK(out.mask.at(r, c) == 1.0f);
  }
}

TEST_CASE("nearer triangle wins and exact depth ties go to the lower index") {
  const CameraPose cam = testing::make_camera(8, 8, 8.0);
  auto quad = [&](double z, std::int32_t base) {
    std::vector<Vec3> v = {unproject(-0.5, -0.5, z, cam), unproject(7.5, -0.5, z, cam), unproject(-0.5, 7.5, z, cam),
                           unproject(7.5, 7.5, z, cam)};
    std::vector<Triangle> t = {{base, base + 2, base + 1}, {base + 1, base + 2, base + 3}};
    return std::make_pair(v, t);
  };
  auto [v1, t1] = quad(3.0, 0);
  auto [v2, t2] = quad(2.0, 4);
  std::vector<Vec3> verts = v1;
  verts.insert(verts.end(), v2.begin(), v2.end());
  std::vector<Triangle> tris = t1;
  tris.insert(tris.end(), t2.begin(), t2.end());
  FeatureGrid tex(1, 8, 1);
  tex.data() = {1, 1, 1, 1, 2, 2, 2, 2};
  const RenderOutput out = render(raw_mesh(1, 8, verts, tris, tex), cam, 8, 8);
  for (float v : out.features.data()) CHECK(v == 2.0f);
  for (float z : out.depth_buffer.data()) CHECK(z == doctest::Approx(2.0));

  auto [w1, s1] = quad(2.0, 0);
  auto [w2, s2] = quad(2.0, 4);
  verts = w1;
  verts.insert(verts.end(), w2.begin(), w2.end());
  tris = s2;  // higher vertex indices listed first would not matter: ties resolve by triangle order
  tris.insert(tris.begin(), s1.begin(), s1.end());
  const RenderOutput tie = render(raw_mesh(1, 8, verts, tris, tex), cam, 8, 8);
  for (float v : tie.features.data()) CHECK(v == 1.0f);
}

TEST_CASE("triangles touching the near plane are culled") {
  const CameraPose cam = testing::make_camera(8, 8, 8.0);
  std::vector<Vec3> verts = {Vec3(-1, -1, 2), Vec3(1, -1, 2), Vec3(0, 1, -1)};
  const AnchorFeatureMesh m = raw_mesh(1, 3, verts, {{0, 1, 2}}, FeatureGrid(1, 3, 1, 1.0f));
  const RenderOutput a = render(m, cam, 8, 8);
  const RenderOutput b = render_bruteforce(m, cam, 8, 8);
  for (float v : a.mask.data()) CHECK(v == 0.0f);
  CHECK(a.mask == b.mask);
}

TEST_CASE("empty triangle list renders an empty mask") {
  const CameraPose cam = testing::make_camera(4, 4, 4.0);
  AnchorFeatureMesh m = build_anchor_mesh(FeatureGrid(4, 4, 2, 1.0f), DepthMap(4, 4, 1, 1.0f), cam);
  m.triangles.clear();
  const RenderOutput out = render(m, cam, 4, 4);
  for (float v : out.mask.data()) CHECK(v == 0.0f);
  for (float v : out.features.data()) CHECK(v == 0.0f);
}

TEST_CASE("interpolation is perspective-correct") {
  // Texture = world x of each vertex; on a planar mesh the rendered value
  // must equal the world x of the surface point seen through each pixel.
  std::mt19937_64 rng(21);
  const CameraPose src = testing::make_camera(10, 10, 10.0);
  DepthMap depth(10, 10, 1);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 10; ++c) depth.at(r, c) = static_cast<float>(1.0 / (0.5 + 0.02 * c + 0.01 * r));
  }
  FeatureGrid tex(10, 10, 1);
  AnchorFeatureMesh mesh = build_anchor_mesh(tex, depth, src, 1.0);
  for (int i = 0; i < 100; ++i) mesh.texture.data()[static_cast<std::size_t>(i)] = static_cast<float>(mesh.vertices[static_cast<std::size_t>(i)].x());
  const CameraPose dst = testing::make_camera(10, 10, 12.0, axis_angle(Vec3(0, 1, 0), 0.15), Vec3(-0.1, 0.05, 0.0));
  const RenderOutput out = render(mesh, dst, 10, 10);
  int covered = 0;
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 10; ++c) {
      if (out.mask.at(r, c) != 1.0f) continue;
      ++covered;
      const Vec3 p = unproject(c, r, out.depth_buffer.at(r, c), dst);
      CHECK(out.features.at(r, c) == doctest::Approx(p.x()).epsilon(1e-4));
    }
  }
  CHECK(covered > 30);
}

TEST_CASE("render matches the ray-casting reference on random meshes") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int h = 8 + trial % 9, w = 8 + (trial * 5) % 9;
    const CameraPose cam = testing::make_camera(w, h, 0.8 * w);
    const int nv = 30;
    std::vector<Vec3> verts;
    for (int i = 0; i < nv; ++i) verts.emplace_back(u(rng) * 3 - 1.5, u(rng) * 3 - 1.5, 0.5 + u(rng) * 4);
    std::vector<Triangle> tris;
    std::uniform_int_distribution<int> pick(0, nv - 1);
    for (int i = 0; i < 40; ++i) tris.push_back({pick(rng), pick(rng), pick(rng)});
    FeatureGrid tex(1, nv, 2);
    for (float& v : tex.data()) v = static_cast<float>(u(rng));
    const AnchorFeatureMesh m = raw_mesh(1, nv, verts, tris, tex);
    const RenderOutput a = render(m, cam, h, w);
    const RenderOutput b = render_bruteforce(m, cam, h, w);
    CHECK(a.mask == b.mask);
    for (std::size_t i = 0; i < a.features.size(); ++i) CHECK(std::abs(a.features.data()[i] - b.features.data()[i]) < 1e-5);
  }
}

TEST_CASE("render validates sizes") {
  const CameraPose cam = testing::make_camera(4, 4, 4.0);
  const AnchorFeatureMesh m = build_anchor_mesh(FeatureGrid(4, 4, 1), DepthMap(4, 4, 1, 1.0f), cam);
  CHECK_THROWS_AS(render(m, cam, 5, 4), DomainError);
}

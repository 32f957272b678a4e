#pragma once

#include "mvgeom/depthmesh.hpp"

namespace mvgeom {

struct RenderOutput {
  FeatureGrid features;      // mesh texture channels, 0 where mask is 0
  FeatureGrid mask;          // 1 channel, values in {0, 1}
  FeatureGrid depth_buffer;  // 1 channel camera-space z, 0 where mask is 0
};

/// Triangles with any vertex at camera depth <= this value are culled.
inline constexpr double kNearCull = 1e-6;
/// Hits closer than this in depth count as ties; the lower triangle index wins.
inline constexpr double kDepthTieEpsilon = 1e-9;

/// Z-buffered forward rasterization of the mesh into `cam`. A pixel is
/// covered when its center lies inside the projected triangle, with a
/// top-left style ownership rule on shared edges. Features and depth are
/// interpolated perspective-correctly. No lighting or shading.
RenderOutput render(const AnchorFeatureMesh& mesh, const CameraPose& cam, int out_h, int out_w);

/// Reference renderer: per-pixel ray casting against every triangle
/// (Moller-Trumbore) with nearest-hit selection. Same contract as render().
RenderOutput render_bruteforce(const AnchorFeatureMesh& mesh, const CameraPose& cam, int out_h, int out_w);

}  // namespace mvgeom

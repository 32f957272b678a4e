#pragma once

#include "mvgeom/camera.hpp"
#include "mvgeom/gridio.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace mvgeom {

/// Single-channel depth grid (camera-space z).
using DepthMap = FeatureGrid;

using Triangle = std::array<std::int32_t, 3>;

/// Depth-derived triangle mesh textured with a feature map. Vertex (r, c)
/// has index r * width + c and takes its texel from texture cell (r, c).
struct AnchorFeatureMesh {
  int height = 0;
  int width = 0;
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  FeatureGrid texture;
  CameraPose source_pose;

  void validate() const;
};

/// Default discontinuity threshold on the depth-gradient magnitude.
inline constexpr double kDefaultDiscontinuityThreshold = 0.05;

/// raw / mean(|raw|) + d_med. Requires raw > 0 everywhere and d_med > 0.
DepthMap align_depth(const DepthMap& raw, double d_med);

/// Two triangles per grid quad with consistent winding:
/// (r,c)-(r+1,c)-(r,c+1) and (r,c+1)-(r+1,c)-(r+1,c+1).
std::vector<Triangle> grid_triangulate(int h, int w);

/// Per-pixel depth-gradient magnitude from central differences; at the
/// borders the neighbour index is clamped and the one-sided difference used.
FeatureGrid depth_gradient_magnitude(const DepthMap& depth);

/// Keeps the triangles whose largest vertex gradient magnitude is <= zeta.
std::vector<Triangle> prune_discontinuities(const DepthMap& depth, const std::vector<Triangle>& tris,
                                            double zeta);

/// Unprojects every cell of `depth` through `cam`, triangulates the grid and
/// drops triangles across depth discontinuities. `feat`, `depth` and the
/// camera image size must all agree.
AnchorFeatureMesh build_anchor_mesh(const FeatureGrid& feat, const DepthMap& depth, const CameraPose& cam,
                                    double zeta = kDefaultDiscontinuityThreshold);

/// Depth at the central pixel, or the global median when the central pixel is
/// not a vertex of any kept triangle.
double central_ray_depth(const DepthMap& depth, const std::vector<Triangle>& kept);

/// Median of all values (average of the two middle values for even counts).
double median(std::vector<double> values);

enum class SearchStatus { kOk, kEmptyMaskFallback };

struct DepthSearchResult {
  double d_med = 0.0;
  SearchStatus status = SearchStatus::kOk;
  std::vector<double> candidates;
  std::vector<std::optional<double>> errors;
};

/// `count` candidates spaced uniformly over [d_med (1 - range), d_med (1 + range)].
std::vector<double> depth_candidates(double d_med, int count = 21, double range = 0.4);

/// Error of one candidate shift; nullopt when the foreground mask is empty.
using DepthObjective = std::function<std::optional<double>(double candidate)>;

/// Grid search over depth_candidates(d_med, count, range). Returns the
/// candidate with the smallest error, the smallest candidate on ties, and
/// d_med itself with kEmptyMaskFallback when no candidate is scorable.
DepthSearchResult median_depth_search(double d_med, const DepthObjective& objective, int count = 21,
                                      double range = 0.4);

}  // namespace mvgeom

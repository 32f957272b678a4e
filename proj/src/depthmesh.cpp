#include "mvgeom/depthmesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvgeom {

void AnchorFeatureMesh::validate() const {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (vertices.size() != n) throw DomainError("mesh: vertex count does not match grid size");
  if (texture.height() != height || texture.width() != width) {
    throw DomainError("mesh: texture size does not match vertex grid");
  }
  for (const Vec3& v : vertices) {
    if (!v.allFinite()) throw DomainError("mesh: non-finite vertex");
  }
  for (const Triangle& t : triangles) {
    for (std::int32_t i : t) {
      if (i < 0 || static_cast<std::size_t>(i) >= n) throw DomainError("mesh: triangle index out of range");
    }
  }
}

DepthMap align_depth(const DepthMap& raw, double d_med) {
  if (!(d_med > 0.0) || !std::isfinite(d_med)) throw DomainError("align_depth: d_med must be positive");
  if (raw.channels() != 1 || raw.size() == 0) throw DomainError("align_depth: expected a non-empty 1-channel map");
  double sum = 0.0;
  for (float v : raw.data()) {
    if (!(v > 0.0f) || !std::isfinite(v)) throw DomainError("align_depth: raw depth must be strictly positive");
    sum += std::abs(static_cast<double>(v));
  }
  const double mean = sum / static_cast<double>(raw.size());
  DepthMap out(raw.height(), raw.width(), 1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.data()[i] = static_cast<float>(raw.data()[i] / mean + d_med);
  }
  return out;
}

std::vector<Triangle> grid_triangulate(int h, int w) {
  if (h < 2 || w < 2) throw DomainError("grid_triangulate: need at least a 2x2 grid");
  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(2) * (h - 1) * (w - 1));
  for (int r = 0; r + 1 < h; ++r) {
    for (int c = 0; c + 1 < w; ++c) {
      const std::int32_t v00 = r * w + c;
      const std::int32_t v01 = v00 + 1;
      const std::int32_t v10 = v00 + w;
      const std::int32_t v11 = v10 + 1;
      tris.push_back({v00, v10, v01});
      tris.push_back({v01, v10, v11});
    }
  }
  return tris;
}

FeatureGrid depth_gradient_magnitude(const DepthMap& depth) {
  if (depth.channels() != 1) throw DomainError("depth gradient: expected a 1-channel map");
  const int h = depth.height();
  const int w = depth.width();
  FeatureGrid grad(h, w, 1);
  for (int r = 0; r < h; ++r) {
    const int r0 = std::max(r - 1, 0);
    const int r1 = std::min(r + 1, h - 1);
    for (int c = 0; c < w; ++c) {
      const int c0 = std::max(c - 1, 0);
      const int c1 = std::min(c + 1, w - 1);
      const double gx = c1 > c0 ? (static_cast<double>(depth.at(r, c1)) - depth.at(r, c0)) / (c1 - c0) : 0.0;
      const double gy = r1 > r0 ? (static_cast<double>(depth.at(r1, c)) - depth.at(r0, c)) / (r1 - r0) : 0.0;
      grad.at(r, c) = static_cast<float>(std::sqrt(gx * gx + gy * gy));
    }
  }
  return grad;
}

std::vector<Triangle> prune_discontinuities(const DepthMap& depth, const std::vector<Triangle>& tris,
                                            double zeta) {
  if (!(zeta > 0.0)) throw DomainError("prune_discontinuities: zeta must be positive");
  if (!depth.all_finite()) throw DomainError("prune_discontinuities: non-finite depth");
  const FeatureGrid grad = depth_gradient_magnitude(depth);
  const auto n = static_cast<std::int32_t>(depth.pixels());
  std::vector<Triangle> kept;
  kept.reserve(tris.size());
  for (const Triangle& t : tris) {
    double worst = 0.0;
    for (std::int32_t i : t) {
      if (i < 0 || i >= n) throw DomainError("prune_discontinuities: triangle index out of range");
      worst = std::max(worst, static_cast<double>(grad.data()[i]));
    }
    if (worst <= zeta) kept.push_back(t);
  }
  return kept;
}

AnchorFeatureMesh build_anchor_mesh(const FeatureGrid& feat, const DepthMap& depth, const CameraPose& cam,
                                    double zeta) {
  if (depth.channels() != 1) throw DomainError("build_anchor_mesh: depth must have one channel");
  if (feat.height() != depth.height() || feat.width() != depth.width()) {
    throw DomainError("build_anchor_mesh: feature and depth sizes differ");
  }
  if (cam.intrinsics.width != feat.width() || cam.intrinsics.height != feat.height()) {
    throw DomainError("build_anchor_mesh: camera image size differs from feature size");
  }
  cam.validate();

  AnchorFeatureMesh mesh;
  mesh.height = feat.height();
  mesh.width = feat.width();
  mesh.texture = feat;
  mesh.source_pose = cam;
  mesh.vertices.reserve(depth.pixels());
  for (int r = 0; r < depth.height(); ++r) {
    for (int c = 0; c < depth.width(); ++c) {
      mesh.vertices.push_back(unproject(c, r, depth.at(r, c), cam));
    }
  }
  mesh.triangles = prune_discontinuities(depth, grid_triangulate(depth.height(), depth.width()), zeta);
  return mesh;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median: empty input");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double central_ray_depth(const DepthMap& depth, const std::vector<Triangle>& kept) {
  if (depth.channels() != 1 || depth.size() == 0) throw DomainError("central_ray_depth: bad depth map");
  const std::int32_t center = (depth.height() / 2) * depth.width() + depth.width() / 2;
  const bool covered = std::any_of(kept.begin(), kept.end(), [&](const Triangle& t) {
    return t[0] == center || t[1] == center || t[2] == center;
  });
  if (covered) return depth.data()[static_cast<std::size_t>(center)];
  return median({depth.data().begin(), depth.data().end()});
}

std::vector<double> depth_candidates(double d_med, int count, double range) {
  if (count < 1) throw DomainError("depth_candidates: need at least one candidate");
  if (!(d_med > 0.0) || !(range >= 0.0) || range >= 1.0) throw DomainError("depth_candidates: bad range");
  if (count == 1) return {d_med};
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = d_med * (1.0 - range + 2.0 * range * i / (count - 1));
  }
  return out;
}

DepthSearchResult median_depth_search(double d_med, const DepthObjective& objective, int count, double range) {
  DepthSearchResult result;
  result.candidates = depth_candidates(d_med, count, range);
  result.errors.reserve(result.candidates.size());
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const std::optional<double> err = objective(result.candidates[i]);
    result.errors.push_back(err);
    // Candidates ascend, so a strict comparison keeps the smallest on ties.
    if (err && std::isfinite(*err) && (!best || *err < *result.errors[*best])) best = i;
  }
  if (!best) {
    result.d_med = d_med;
    result.status = SearchStatus::kEmptyMaskFallback;
  } else {
    result.d_med = result.candidates[*best];
  }
  return result;
}

}  // namespace mvgeom

#pragma once

#include "mvgeom/camera.hpp"
#include "mvgeom/gridio.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvgeom {

/// Posed reference feature maps. All grids share one shape.
struct ReferenceSet {
  std::vector<FeatureGrid> features;
  std::vector<CameraPose> poses;

  std::size_t size() const { return features.size(); }
  void validate() const;
};

/// Directory layout: trajectory.txt plus ref_000.fgrid, ref_001.fgrid, ...
void write_reference_set(const ReferenceSet& refs, const std::string& dir);
ReferenceSet read_reference_set(const std::string& dir);

struct RaySampling {
  double near = 0.1;
  double far = 10.0;
  int samples = 32;

  void validate() const;
};

/// What the field head sees at one ray sample.
struct FieldSample {
  Vec3 point;
  std::span<const double> feature;  // mean over covering references
  double variance = 0.0;            // mean squared deviation across references
  int views = 0;                    // number of references covering the point
};

struct FieldOutput {
  double density = 0.0;
  std::vector<double> feature;
};

/// Density + feature head. Only called for samples with views >= 1;
/// uncovered samples get zero density and a zero feature.
using FieldFunction = std::function<FieldOutput(const FieldSample&)>;

/// Density gain * exp(-variance / bandwidth): surfaces are where the
/// references agree. Samples seen by fewer than two references get zero
/// density. Feature passes through.
FieldFunction consistency_field(double gain = 20.0, double bandwidth = 3e-4);

/// Infinite density inside a slab |n . p - offset| <= thickness / 2, zero
/// elsewhere. Feature passes through.
FieldFunction opaque_plane_field(const Vec3& normal, double offset, double thickness);

/// Small fully connected head on [mean feature, variance]. Hidden layers use
/// ReLU; the last layer emits [density logit, feature...] and density goes
/// through softplus.
class MlpField {
 public:
  struct Layer {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
  };

  explicit MlpField(std::vector<Layer> layers);

  /// Random weights with a fixed seed.
  static MlpField random(int in_channels, int hidden, int out_channels, std::uint64_t seed);

  /// Text format: "MLP <layers>", then per layer "<rows> <cols>", rows*cols
  /// weights (row-major) and rows biases.
  static MlpField load(const std::string& path);
  void save(const std::string& path) const;

  int in_channels() const { return static_cast<int>(layers_.front().weight.cols()) - 1; }
  int out_channels() const { return static_cast<int>(layers_.back().weight.rows()) - 1; }

  FieldOutput operator()(const FieldSample& s) const;
  FieldFunction as_function() const;

 private:
  std::vector<Layer> layers_;
};

/// Volume-rendering weights w_s = T_s (1 - exp(-sigma_s delta_s)) with
/// T_s = exp(-sum_{k<s} sigma_k delta_k).
std::vector<double> composite_weights(std::span<const double> sigmas, std::span<const double> deltas);

struct FeatureFieldRender {
  FeatureGrid features;      // sum_s w_s f_s
  FeatureGrid alpha;         // sum_s w_s
  FeatureGrid median_depth;  // camera z where accumulated weight reaches 0.5; 0 if never
};

/// Renders a pose-aligned feature map for `target` by marching every pixel
/// ray, projecting samples into each reference, averaging bilinear lookups
/// over covering references and compositing the field head's output.
FeatureFieldRender render_feature_map(const ReferenceSet& refs, const CameraPose& target, const FieldFunction& field,
                                      int out_h, int out_w, const RaySampling& sampling = {});

/// Median depth along the target's central ray, falling back to the median
/// over pixels whose rays reach half opacity. Throws DomainError when no ray does.
double central_ray_median_depth(const FeatureFieldRender& render);

}  // namespace mvgeom

#include "mvgeom/featurefield.hpp"

#include "mvgeom/depthmesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

namespace mvgeom {

namespace fs = std::filesystem;

void ReferenceSet::validate() const {
  if (features.empty()) throw DomainError("reference set: empty");
  if (features.size() != poses.size()) throw DomainError("reference set: feature/pose count mismatch");
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!features[i].same_shape(features.front())) throw DomainError("reference set: grids differ in shape");
    poses[i].validate();
    if (poses[i].intrinsics.width != features[i].width() || poses[i].intrinsics.height != features[i].height()) {
      throw DomainError("reference set: camera size differs from grid size");
    }
  }
}

namespace {
std::string ref_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ref_%03zu.fgrid", i);
  return buf;
}
}  // namespace

void write_reference_set(const ReferenceSet& refs, const std::string& dir) {
  refs.validate();
  fs::create_directories(dir);
  write_trajectory((fs::path(dir) / "trajectory.txt").string(), refs.poses);
  for (std::size_t i = 0; i < refs.size(); ++i) write_grid(refs.features[i], (fs::path(dir) / ref_name(i)).string());
}

ReferenceSet read_reference_set(const std::string& dir) {
  ReferenceSet refs;
  refs.poses = read_trajectory((fs::path(dir) / "trajectory.txt").string());
  for (std::size_t i = 0; i < refs.poses.size(); ++i) {
    refs.features.push_back(read_grid((fs::path(dir) / ref_name(i)).string()));
  }
  refs.validate();
  return refs;
}

void RaySampling::validate() const {
  if (!(near > 0.0) || !(far > near)) throw DomainError("ray sampling: need 0 < near < far");
  if (samples < 2) throw DomainError("ray sampling: need at least two samples per ray");
}

FieldFunction consistency_field(double gain, double bandwidth) {
  if (!(gain >= 0.0) || !(bandwidth > 0.0)) throw DomainError("consistency field: bad parameters");
  return [gain, bandwidth](const FieldSample& s) {
    const double density = s.views >= 2 ? gain * std::exp(-s.variance / bandwidth) : 0.0;
    return FieldOutput{density, {s.feature.begin(), s.feature.end()}};
  };
}

FieldFunction opaque_plane_field(const Vec3& normal, double offset, double thickness) {
  if (!(thickness > 0.0) || normal.norm() == 0.0) throw DomainError("opaque plane: bad parameters");
  const Vec3 n = normal.normalized();
  return [n, offset, thickness](const FieldSample& s) {
    const bool inside = std::abs(n.dot(s.point) - offset) <= 0.5 * thickness;
    return FieldOutput{inside ? std::numeric_limits<double>::infinity() : 0.0, {s.feature.begin(), s.feature.end()}};
  };
}

MlpField::MlpField(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DomainError("mlp field: no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.bias.size() != l.weight.rows()) throw DomainError("mlp field: bias size mismatch");
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows()) throw DomainError("mlp field: layer size mismatch");
    if (!l.weight.allFinite() || !l.bias.allFinite()) throw DomainError("mlp field: non-finite weights");
  }
  if (layers_.front().weight.cols() < 2 || layers_.back().weight.rows() < 2) {
    throw DomainError("mlp field: needs at least one feature channel in and out");
  }
}

MlpField MlpField::random(int in_channels, int hidden, int out_channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto layer = [&](int rows, int cols) {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
    Layer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd::Zero(rows)};
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) l.weight(r, c) = normal(rng);
    }
    return l;
  };
  return MlpField({layer(hidden, in_channels + 1), layer(out_channels + 1, hidden)});
}

MlpField MlpField::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("mlp field: cannot open " + path);
  std::string magic;
  int count = 0;
  if (!(in >> magic >> count) || magic != "MLP" || count < 1) throw FormatError("mlp field: bad header in " + path);
  std::vector<Layer> layers;
  for (int i = 0; i < count; ++i) {
    int rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows < 1 || cols < 1) throw FormatError("mlp field: bad layer header");
    Layer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (!(in >> l.weight(r, c))) throw FormatError("mlp field: truncated weights");
      }
    }
    for (int r = 0; r < rows; ++r) {
      if (!(in >> l.bias(r))) throw FormatError("mlp field: truncated biases");
    }
    layers.push_back(std::move(l));
  }
  try {
    return MlpField(std::move(layers));
  } catch (const DomainError& e) {
    throw FormatError(e.what());
  }
}

void MlpField::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("mlp field: cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "MLP " << layers_.size() << '\n';
  for (const Layer& l : layers_) {
    out << l.weight.rows() << ' ' << l.weight.cols() << '\n';
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out << l.weight(r, c) << (c + 1 < l.weight.cols() ? ' ' : '\n');
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out << l.bias(r) << (r + 1 < l.bias.size() ? ' ' : '\n');
  }
}

FieldOutput MlpField::operator()(const FieldSample& s) const {
  if (static_cast<int>(s.feature.size()) != in_channels()) throw DomainError("mlp field: input channel mismatch");
  Eigen::VectorXd h(in_channels() + 1);
  for (int i = 0; i < in_channels(); ++i) h(i) = s.feature[static_cast<std::size_t>(i)];
  h(in_channels()) = s.variance;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].weight * h + layers_[i].bias;
    if (i + 1 < layers_.size()) h = h.cwiseMax(0.0);
  }
  FieldOutput out;
  const double logit = h(0);
  out.density = logit > 30.0 ? logit : std::log1p(std::exp(logit));
  out.feature.assign(h.data() + 1, h.data() + h.size());
  return out;
}

FieldFunction MlpField::as_function() const {
  return [self = *this](const FieldSample& s) { return self(s); };
}

std::vector<double> composite_weights(std::span<const double> sigmas, std::span<const double> deltas) {
  if (sigmas.size() != deltas.size()) throw DomainError("composite_weights: size mismatch");
  std::vector<double> w(sigmas.size());
  double optical_depth = 0.0;
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    if (!(sigmas[s] >= 0.0)) throw DomainError("composite_weights: negative or NaN density");
    if (!(deltas[s] > 0.0)) throw DomainError("composite_weights: spacing must be positive");
    const double transmittance = std::exp(-optical_depth);
    const double tau = sigmas[s] * deltas[s];
    // -expm1(-tau) is 1 - exp(-tau) without cancellation for small tau.
    w[s] = transmittance == 0.0 ? 0.0 : transmittance * -std::expm1(-tau);
    optical_depth += tau;
  }
  return w;
}

namespace {

// Bilinear lookup at pixel-center coordinates; false outside [0, W-1] x [0, H-1].
bool sample_bilinear(const FeatureGrid& g, double u, double v, std::span<double> out) {
  constexpr double kBorder = 1e-6;  // pixels; absorbs round-off at the image edge
  if (!(u >= -kBorder && u <= g.width() - 1 + kBorder && v >= -kBorder && v <= g.height() - 1 + kBorder)) return false;
  u = std::clamp(u, 0.0, g.width() - 1.0);
  v = std::clamp(v, 0.0, g.height() - 1.0);
  const int x0 = std::min(static_cast<int>(u), std::max(g.width() - 2, 0));
  const int y0 = std::min(static_cast<int>(v), std::max(g.height() - 2, 0));
  const int x1 = std::min(x0 + 1, g.width() - 1);
  const int y1 = std::min(y0 + 1, g.height() - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  for (int ch = 0; ch < g.channels(); ++ch) {
    const double top = (1.0 - fx) * g.at(y0, x0, ch) + fx * g.at(y0, x1, ch);
    const double bottom = (1.0 - fx) * g.at(y1, x0, ch) + fx * g.at(y1, x1, ch);
    out[static_cast<std::size_t>(ch)] = (1.0 - fy) * top + fy * bottom;
  }
  return true;
}

}  // namespace

FeatureFieldRender render_feature_map(const ReferenceSet& refs, const CameraPose& target, const FieldFunction& field,
                                      int out_h, int out_w, const RaySampling& sampling) {
  refs.validate();
  target.validate();
  sampling.validate();
  if (out_h < 1 || out_w < 1) throw DomainError("render_feature_map: output size must be positive");
  if (target.intrinsics.width != out_w || target.intrinsics.height != out_h) {
    throw DomainError("render_feature_map: target camera size differs from output size");
  }

  const int in_ch = refs.features.front().channels();
  const int S = sampling.samples;
  const double spacing = (sampling.far - sampling.near) / S;
  const std::vector<double> deltas(static_cast<std::size_t>(S), spacing);

  std::optional<int> out_ch;
  FeatureFieldRender result{FeatureGrid(), FeatureGrid(out_h, out_w, 1), FeatureGrid(out_h, out_w, 1)};

  std::vector<double> lookup(static_cast<std::size_t>(in_ch));
  std::vector<double> mean(static_cast<std::size_t>(in_ch));
  std::vector<std::vector<double>> per_view(refs.size(), std::vector<double>(static_cast<std::size_t>(in_ch)));
  std::vector<double> sigmas(static_cast<std::size_t>(S));
  std::vector<std::vector<double>> feats(static_cast<std::size_t>(S));
  std::vector<double> acc;

  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      const Vec3 dir_cam = pixel_direction(c, r, target.intrinsics).normalized();
      const Vec3 dir = target.pose.rotation * dir_cam;
      const Vec3 origin = target.pose.center();

      for (int s = 0; s < S; ++s) {
        const double t = sampling.near + (s + 0.5) * spacing;
        const Vec3 p = origin + t * dir;
        int views = 0;
        std::fill(mean.begin(), mean.end(), 0.0);
        for (std::size_t i = 0; i < refs.size(); ++i) {
          const auto proj = project(p, refs.poses[i]);
          if (!proj || !sample_bilinear(refs.features[i], proj->u, proj->v, per_view[static_cast<std::size_t>(views)])) {
            continue;
          }
          for (int ch = 0; ch < in_ch; ++ch) mean[static_cast<std::size_t>(ch)] += per_view[static_cast<std::size_t>(views)][static_cast<std::size_t>(ch)];
          ++views;
        }
        auto& f = feats[static_cast<std::size_t>(s)];
        if (views == 0) {
          sigmas[static_cast<std::size_t>(s)] = 0.0;
          f.clear();
          continue;
        }
        double variance = 0.0;
        for (double& m : mean) m /= views;
        for (int v = 0; v < views; ++v) {
          for (int ch = 0; ch < in_ch; ++ch) {
            const double d = per_view[static_cast<std::size_t>(v)][static_cast<std::size_t>(ch)] - mean[static_cast<std::size_t>(ch)];
            variance += d * d;
          }
        }
        variance /= static_cast<double>(views) * in_ch;
        FieldOutput o = field(FieldSample{p, mean, variance, views});
        if (!out_ch) {
          out_ch = static_cast<int>(o.feature.size());
          result.features = FeatureGrid(out_h, out_w, *out_ch);
        } else if (static_cast<int>(o.feature.size()) != *out_ch) {
          throw DomainError("render_feature_map: field output width changed between samples");
        }
        sigmas[static_cast<std::size_t>(s)] = o.density;
        f = std::move(o.feature);
      }

      const std::vector<double> w = composite_weights(sigmas, deltas);
      double alpha = 0.0;
      double median_z = 0.0;
      acc.assign(static_cast<std::size_t>(out_ch.value_or(0)), 0.0);
      for (int s = 0; s < S; ++s) {
        const double ws = w[static_cast<std::size_t>(s)];
        if (ws == 0.0) continue;
        alpha += ws;
        if (median_z == 0.0 && alpha >= 0.5) median_z = (sampling.near + (s + 0.5) * spacing) * dir_cam.z();
        const auto& f = feats[static_cast<std::size_t>(s)];
        for (std::size_t ch = 0; ch < f.size(); ++ch) acc[ch] += ws * f[ch];
      }
      if (out_ch) {
        for (int ch = 0; ch < *out_ch; ++ch) result.features.at(r, c, ch) = static_cast<float>(acc[static_cast<std::size_t>(ch)]);
      }
      result.alpha.at(r, c) = static_cast<float>(alpha);
      result.median_depth.at(r, c) = static_cast<float>(median_z);
    }
  }
  if (!out_ch) result.features = FeatureGrid(out_h, out_w, in_ch);
  return result;
}

double central_ray_median_depth(const FeatureFieldRender& render) {
  const FeatureGrid& md = render.median_depth;
  const float center = md.at(md.height() / 2, md.width() / 2);
  if (center > 0.0f) return center;
  std::vector<double> valid;
  for (float v : md.data()) {
    if (v > 0.0f) valid.push_back(v);
  }
  if (valid.empty()) throw DomainError("median depth: no ray reaches half opacity");
  return median(std::move(valid));
}

}  // namespace mvgeom

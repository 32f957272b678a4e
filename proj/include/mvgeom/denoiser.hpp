#pragma once

#include "mvgeom/attention.hpp"
#include "mvgeom/scheduler.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mvgeom {

/// Opaque conditioning: a fixed-length vector standing in for the text
/// condition, the target poses, and optionally one pose-aligned reference
/// feature map per frame (at latent resolution).
struct Conditioning {
  std::vector<double> vector;
  std::vector<CameraPose> poses;
  std::vector<LatentGrid> reference_features;

  void validate(const LatentVideo& x) const;
};

/// Called once per frame, in frame order, with the denoiser's interior
/// feature grid. Returning a grid replaces the features; it must have the
/// tapped shape.
using FeatureTap = std::function<std::optional<LatentGrid>(std::size_t frame, const LatentGrid& features)>;

struct DenoiserHooks {
  FeatureTap feature_tap;
};

/// Noise predictor eps(x_t; c, t). Implementations compute per-frame
/// interior features, route them through the tap, and finish from there.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  /// Throws DomainError on shape mismatches, including a tap replacement of
  /// the wrong shape.
  LatentVideo predict_noise(const LatentVideo& x_t, int t, const Conditioning& cond,
                            const DenoiserHooks& hooks = {}) const;

  virtual std::string name() const = 0;

 protected:
  /// Interior features for every frame.
  virtual std::vector<LatentGrid> features(const LatentVideo& x_t, int t, const Conditioning& cond) const = 0;
  /// Noise prediction from (possibly replaced) features.
  virtual LatentVideo finish(const LatentVideo& x_t, int t, const Conditioning& cond,
                             const std::vector<LatentGrid>& features) const = 0;
};

/// eps = 0 everywhere. The tap sees x_t; replacements do not change the output.
class ZeroDenoiser final : public Denoiser {
 public:
  std::string name() const override { return "zero"; }

 protected:
  std::vector<LatentGrid> features(const LatentVideo& x_t, int t, const Conditioning& cond) const override;
  LatentVideo finish(const LatentVideo& x_t, int t, const Conditioning& cond,
                     const std::vector<LatentGrid>& features) const override;
};

/// Denoisers whose interior feature is the clean estimate x0_hat; the noise
/// follows as (x_t - sqrt(a) x0_hat) / sqrt(1 - a).
class CleanEstimateDenoiser : public Denoiser {
 public:
  explicit CleanEstimateDenoiser(DiffusionSchedule schedule) : schedule_(std::move(schedule)) {}
  const DiffusionSchedule& schedule() const { return schedule_; }

 protected:
  LatentVideo finish(const LatentVideo& x_t, int t, const Conditioning& cond,
                     const std::vector<LatentGrid>& features) const override;

  DiffusionSchedule schedule_;
};

/// Exact posterior mean of x0 under an i.i.d. N(mean, std^2) prior.
double gaussian_posterior_mean(double x_t, double alpha_bar, double mean, double std);

/// Knows the clean frames. Cells where `known` is 0 fall back to the
/// posterior mean under an N(prior_mean, prior_std^2) prior.
class OracleDenoiser final : public CleanEstimateDenoiser {
 public:
  OracleDenoiser(DiffusionSchedule schedule, LatentVideo targets, std::vector<FeatureGrid> known = {},
                 double prior_mean = 0.5, double prior_std = 0.25);

  std::string name() const override { return "oracle"; }
  const LatentVideo& targets() const { return targets_; }

 protected:
  std::vector<LatentGrid> features(const LatentVideo& x_t, int t, const Conditioning& cond) const override;

 private:
  LatentVideo targets_;
  std::vector<FeatureGrid> known_;
  double prior_mean_;
  double prior_std_;
};

/// Bayes-optimal denoiser for x0 ~ N(mean, std^2 I).
class GaussianAnalyticDenoiser final : public CleanEstimateDenoiser {
 public:
  GaussianAnalyticDenoiser(DiffusionSchedule schedule, double mean, double std);

  std::string name() const override { return "gaussian"; }

 protected:
  std::vector<LatentGrid> features(const LatentVideo& x_t, int t, const Conditioning& cond) const override;

 private:
  double mean_;
  double std_;
};

/// Small fixed-weight network: per-cell linear lift with time and
/// conditioning biases, reference features added through an
/// identity-plus-average projection, then the tap, windowed spatio-temporal
/// attention with a residual, and a per-cell linear head.
class ToyNetDenoiser final : public Denoiser {
 public:
  struct Options {
    int latent_channels = 4;
    int hidden_channels = 8;
    int field = 4;
    std::uint64_t seed = 7;
  };

  explicit ToyNetDenoiser(Options options);

  std::string name() const override { return "toynet"; }
  int hidden_channels() const { return options_.hidden_channels; }

 protected:
  std::vector<LatentGrid> features(const LatentVideo& x_t, int t, const Conditioning& cond) const override;
  LatentVideo finish(const LatentVideo& x_t, int t, const Conditioning& cond,
                     const std::vector<LatentGrid>& features) const override;

 private:
  Options options_;
  Eigen::MatrixXd lift_;
  Eigen::VectorXd lift_bias_;
  Eigen::MatrixXd head_;
  Eigen::VectorXd head_bias_;
  AttentionParams attention_;
};

struct DenoiserSpec {
  std::string name = "oracle";
  double prior_mean = 0.5;
  double prior_std = 0.25;
  ToyNetDenoiser::Options toynet;
};

/// Builds a denoiser by name: oracle | zero | gaussian | toynet. The oracle
/// needs `targets`; `known` is forwarded to it.
std::unique_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec, const DiffusionSchedule& schedule,
                                        const LatentVideo* targets = nullptr,
                                        std::vector<FeatureGrid> known = {});

}  // namespace mvgeom

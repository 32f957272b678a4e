#pragma once

#include "mvgeom/camera.hpp"
#include "mvgeom/gridio.hpp"

#include <cstdint>
#include <vector>

namespace mvgeom {

/// Timestep whose cumulative alpha is exactly 1 (the clean sample); used as
/// the target of the final DDIM step.
inline constexpr int kCleanTimestep = -1;

/// Noise levels over the training timesteps plus the DDIM step list.
class DiffusionSchedule {
 public:
  /// Linear beta schedule; sampler steps use leading spacing, i.e.
  /// (n - 1 - i) * (train_steps / n) for i = 0..n-1.
  static DiffusionSchedule linear(double beta_start = 1e-4, double beta_end = 2e-2, int train_steps = 1000,
                                  int sampler_steps = 50);

  /// Explicit cumulative alphas (strictly decreasing, in (0, 1]) and an
  /// explicit strictly decreasing sampler step list.
  static DiffusionSchedule from_alpha_bar(std::vector<double> alpha_bar, std::vector<int> sampler_steps);

  int num_train_steps() const { return static_cast<int>(alpha_bar_.size()); }
  int num_sampler_steps() const { return static_cast<int>(sampler_steps_.size()); }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }
  const std::vector<int>& sampler_steps() const { return sampler_steps_; }

  /// Cumulative alpha at `t`; kCleanTimestep maps to 1.
  double alpha_bar(int t) const;

  /// Timestep of sampling iteration `s` (1-based, s = 1 is the noisiest).
  int timestep_at(int s) const;
  /// Target timestep of iteration `s`; kCleanTimestep after the last one.
  int prev_timestep_at(int s) const;

 private:
  DiffusionSchedule(std::vector<double> alpha_bar, std::vector<int> sampler_steps);

  std::vector<double> alpha_bar_;
  std::vector<int> sampler_steps_;
};

/// N per-frame latent grids with their target cameras. `poses` is either
/// empty (unposed numeric use) or one pose per frame.
struct LatentVideo {
  std::vector<LatentGrid> frames;
  std::vector<CameraPose> poses;

  std::size_t size() const { return frames.size(); }
  void validate() const;
  bool same_shape(const LatentVideo& o) const;
  bool operator==(const LatentVideo& o) const { return frames == o.frames; }
};

/// x_t = sqrt(a) x0 + sqrt(1 - a) noise, elementwise, for a = alpha_bar in [0, 1].
LatentVideo ddpm_forward(const LatentVideo& x0, double alpha_bar, const LatentVideo& noise);
LatentVideo ddpm_forward(const LatentVideo& x0, int t, const LatentVideo& noise, const DiffusionSchedule& sched);

/// x0 = (x_t - sqrt(1 - a) eps) / sqrt(a). Throws DomainError when a <= 0.
LatentVideo predict_x0(const LatentVideo& x_t, const LatentVideo& eps_hat, double alpha_bar);
LatentVideo predict_x0(const LatentVideo& x_t, const LatentVideo& eps_hat, int t, const DiffusionSchedule& sched);

/// Deterministic (eta = 0) DDIM update from t to t_prev < t.
LatentVideo ddim_step(const LatentVideo& x_t, const LatentVideo& eps_hat, int t, int t_prev,
                      const DiffusionSchedule& sched);

/// Standard-normal grid drawn from a stream keyed by (seed, stream, frame).
LatentGrid gaussian_grid(int h, int w, int c, std::uint64_t seed, std::uint64_t stream, std::uint64_t frame);

/// A video shaped like `like` filled with independent standard normals;
/// frame n draws from gaussian_grid(..., seed, stream, n).
LatentVideo gaussian_video(const LatentVideo& like, std::uint64_t seed, std::uint64_t stream);

}  // namespace mvgeom

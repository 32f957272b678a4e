#include "mvgeom/scheduler.hpp"

#include <cmath>
#include <random>

namespace mvgeom {

DiffusionSchedule::DiffusionSchedule(std::vector<double> alpha_bar, std::vector<int> sampler_steps)
    : alpha_bar_(std::move(alpha_bar)), sampler_steps_(std::move(sampler_steps)) {
  if (alpha_bar_.empty()) throw DomainError("schedule: no timesteps");
  for (std::size_t i = 0; i < alpha_bar_.size(); ++i) {
    const double a = alpha_bar_[i];
    if (!(a > 0.0 && a <= 1.0)) throw DomainError("schedule: alpha_bar must lie in (0, 1]");
    if (i > 0 && !(a < alpha_bar_[i - 1])) throw DomainError("schedule: alpha_bar must strictly decrease");
  }
  if (sampler_steps_.empty()) throw DomainError("schedule: no sampler steps");
  for (std::size_t i = 0; i < sampler_steps_.size(); ++i) {
    const int t = sampler_steps_[i];
    if (t < 0 || t >= num_train_steps()) throw DomainError("schedule: sampler step out of range");
    if (i > 0 && !(t < sampler_steps_[i - 1])) throw DomainError("schedule: sampler steps must strictly decrease");
  }
}

DiffusionSchedule DiffusionSchedule::linear(double beta_start, double beta_end, int train_steps, int sampler_steps) {
  if (train_steps < 1 || sampler_steps < 1 || sampler_steps > train_steps) {
    throw DomainError("schedule: need 1 <= sampler_steps <= train_steps");
  }
  if (!(beta_start > 0.0) || !(beta_end >= beta_start) || !(beta_end < 1.0)) {
    throw DomainError("schedule: need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> alpha_bar(static_cast<std::size_t>(train_steps));
  double prod = 1.0;
  for (int t = 0; t < train_steps; ++t) {
    const double beta =
        train_steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * t / (train_steps - 1);
    prod *= 1.0 - beta;
    alpha_bar[static_cast<std::size_t>(t)] = prod;
  }
  const int ratio = train_steps / sampler_steps;
  std::vector<int> steps(static_cast<std::size_t>(sampler_steps));
  for (int i = 0; i < sampler_steps; ++i) steps[static_cast<std::size_t>(i)] = (sampler_steps - 1 - i) * ratio;
  return DiffusionSchedule(std::move(alpha_bar), std::move(steps));
}

DiffusionSchedule DiffusionSchedule::from_alpha_bar(std::vector<double> alpha_bar, std::vector<int> sampler_steps) {
  return DiffusionSchedule(std::move(alpha_bar), std::move(sampler_steps));
}

double DiffusionSchedule::alpha_bar(int t) const {
  if (t == kCleanTimestep) return 1.0;
  if (t < 0 || t >= num_train_steps()) throw DomainError("schedule: timestep out of range");
  return alpha_bar_[static_cast<std::size_t>(t)];
}

int DiffusionSchedule::timestep_at(int s) const {
  if (s < 1 || s > num_sampler_steps()) throw DomainError("schedule: sampling iteration out of range");
  return sampler_steps_[static_cast<std::size_t>(s - 1)];
}

int DiffusionSchedule::prev_timestep_at(int s) const {
  if (s < 1 || s > num_sampler_steps()) throw DomainError("schedule: sampling iteration out of range");
  return s == num_sampler_steps() ? kCleanTimestep : sampler_steps_[static_cast<std::size_t>(s)];
}

void LatentVideo::validate() const {
  if (frames.empty()) throw DomainError("latent video: no frames");
  if (!poses.empty() && poses.size() != frames.size()) throw DomainError("latent video: pose count mismatch");
  for (const auto& f : frames) {
    if (!f.same_shape(frames.front())) throw DomainError("latent video: frames differ in shape");
  }
}

bool LatentVideo::same_shape(const LatentVideo& o) const {
  if (frames.size() != o.frames.size()) return false;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!frames[i].same_shape(o.frames[i])) return false;
  }
  return true;
}

namespace {

template <typename Op>
LatentVideo combine(const LatentVideo& a, const LatentVideo& b, Op op, const char* what) {
  if (!a.same_shape(b)) throw DomainError(std::string(what) + ": shape mismatch");
  LatentVideo out{a.frames, a.poses};
  for (std::size_t n = 0; n < a.frames.size(); ++n) {
    auto& dst = out.frames[n].data();
    const auto& bv = b.frames[n].data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = op(dst[i], bv[i]);
  }
  return out;
}

}  // namespace

LatentVideo ddpm_forward(const LatentVideo& x0, double alpha_bar, const LatentVideo& noise) {
  if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0)) throw DomainError("ddpm_forward: alpha_bar outside [0, 1]");
  const double sa = std::sqrt(alpha_bar);
  const double sn = std::sqrt(1.0 - alpha_bar);
  return combine(x0, noise, [sa, sn](double x, double e) { return sa * x + sn * e; }, "ddpm_forward");
}

LatentVideo ddpm_forward(const LatentVideo& x0, int t, const LatentVideo& noise, const DiffusionSchedule& sched) {
  return ddpm_forward(x0, sched.alpha_bar(t), noise);
}

LatentVideo predict_x0(const LatentVideo& x_t, const LatentVideo& eps_hat, double alpha_bar) {
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) throw DomainError("predict_x0: alpha_bar must lie in (0, 1]");
  const double sa = std::sqrt(alpha_bar);
  const double sn = std::sqrt(1.0 - alpha_bar);
  return combine(x_t, eps_hat, [sa, sn](double x, double e) { return (x - sn * e) / sa; }, "predict_x0");
}

LatentVideo predict_x0(const LatentVideo& x_t, const LatentVideo& eps_hat, int t, const DiffusionSchedule& sched) {
  return predict_x0(x_t, eps_hat, sched.alpha_bar(t));
}

LatentVideo ddim_step(const LatentVideo& x_t, const LatentVideo& eps_hat, int t, int t_prev,
                      const DiffusionSchedule& sched) {
  if (!(t_prev < t)) throw DomainError("ddim_step: t_prev must precede t");
  const double a_t = sched.alpha_bar(t);
  const double a_prev = sched.alpha_bar(t_prev);
  const LatentVideo x0 = predict_x0(x_t, eps_hat, a_t);
  const double sp = std::sqrt(a_prev);
  const double sn = std::sqrt(1.0 - a_prev);
  return combine(x0, eps_hat, [sp, sn](double x, double e) { return sp * x + sn * e; }, "ddim_step");
}

LatentGrid gaussian_grid(int h, int w, int c, std::uint64_t seed, std::uint64_t stream, std::uint64_t frame) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xFFFFFFFFu); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(frame), hi(frame)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  LatentGrid g(h, w, c);
  for (double& v : g.data()) v = normal(rng);
  return g;
}

LatentVideo gaussian_video(const LatentVideo& like, std::uint64_t seed, std::uint64_t stream) {
  LatentVideo out;
  out.poses = like.poses;
  out.frames.reserve(like.frames.size());
  for (std::size_t n = 0; n < like.frames.size(); ++n) {
    const LatentGrid& f = like.frames[n];
    out.frames.push_back(gaussian_grid(f.height(), f.width(), f.channels(), seed, stream, n));
  }
  return out;
}

}  // namespace mvgeom

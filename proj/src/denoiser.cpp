#include "mvgeom/denoiser.hpp"

#include "mvgeom/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mvgeom {

void Conditioning::validate(const LatentVideo& x) const {
  for (double v : vector) {
    if (!std::isfinite(v)) throw DomainError("conditioning: vector has a non-finite entry");
  }
  if (!poses.empty() && poses.size() != x.size()) {
    throw DomainError("conditioning: pose count differs from frame count");
  }
  if (!reference_features.empty()) {
    if (reference_features.size() != x.size()) {
      throw DomainError("conditioning: reference feature count differs from frame count");
    }
    for (const auto& g : reference_features) {
      if (g.height() != x.frames[0].height() || g.width() != x.frames[0].width()) {
        throw DomainError("conditioning: reference features must be at latent resolution");
      }
    }
  }
}

LatentVideo Denoiser::predict_noise(const LatentVideo& x_t, int t, const Conditioning& cond,
                                    const DenoiserHooks& hooks) const {
  x_t.validate();
  cond.validate(x_t);
  std::vector<LatentGrid> feats = features(x_t, t, cond);
  if (feats.size() != x_t.size()) throw std::logic_error(name() + ": interior feature count differs from frames");
  if (hooks.feature_tap) {
    for (std::size_t n = 0; n < feats.size(); ++n) {
      std::optional<LatentGrid> replaced = hooks.feature_tap(n, feats[n]);
      if (!replaced) continue;
      if (!replaced->same_shape(feats[n])) {
        throw DomainError(name() + ": tap replacement for frame " + std::to_string(n) + " has the wrong shape");
      }
      feats[n] = std::move(*replaced);
    }
  }
  LatentVideo eps = finish(x_t, t, cond, feats);
  if (!eps.same_shape(x_t)) throw std::logic_error(name() + ": output shape differs from input");
  eps.poses = x_t.poses;
  return eps;
}

std::vector<LatentGrid> ZeroDenoiser::features(const LatentVideo& x_t, int, const Conditioning&) const {
  return x_t.frames;
}

LatentVideo ZeroDenoiser::finish(const LatentVideo& x_t, int, const Conditioning&,
                                 const std::vector<LatentGrid>&) const {
  LatentVideo out;
  for (const auto& f : x_t.frames) out.frames.emplace_back(f.height(), f.width(), f.channels(), 0.0);
  return out;
}

LatentVideo CleanEstimateDenoiser::finish(const LatentVideo& x_t, int t, const Conditioning&,
                                          const std::vector<LatentGrid>& features) const {
  const double a = schedule_.alpha_bar(t);
  if (!(a < 1.0)) throw DomainError(name() + ": noise is undefined at alpha_bar = 1");
  const double sa = std::sqrt(a);
  const double s1a = std::sqrt(1.0 - a);
  LatentVideo out;
  for (std::size_t n = 0; n < x_t.size(); ++n) {
    const LatentGrid& x = x_t.frames[n];
    const LatentGrid& x0 = features[n];
    if (!x0.same_shape(x)) throw DomainError(name() + ": clean estimate shape differs from latent");
    LatentGrid eps(x.height(), x.width(), x.channels());
    for (std::size_t i = 0; i < x.size(); ++i) eps.data()[i] = (x.data()[i] - sa * x0.data()[i]) / s1a;
    out.frames.push_back(std::move(eps));
  }
  return out;
}

double gaussian_posterior_mean(double x_t, double alpha_bar, double mean, double std) {
  const double var = std * std;
  const double gain = std::sqrt(alpha_bar) * var / (alpha_bar * var + 1.0 - alpha_bar);
  return mean + gain * (x_t - std::sqrt(alpha_bar) * mean);
}

OracleDenoiser::OracleDenoiser(DiffusionSchedule schedule, LatentVideo targets, std::vector<FeatureGrid> known,
                               double prior_mean, double prior_std)
    : CleanEstimateDenoiser(std::move(schedule)),
      targets_(std::move(targets)),
      known_(std::move(known)),
      prior_mean_(prior_mean),
      prior_std_(prior_std) {
  targets_.validate();
  if (!(prior_std > 0.0) || !std::isfinite(prior_mean)) throw DomainError("oracle: invalid prior");
  if (!known_.empty()) {
    if (known_.size() != targets_.size()) throw DomainError("oracle: known-mask count differs from targets");
    for (std::size_t n = 0; n < known_.size(); ++n) {
      const auto& m = known_[n];
      if (m.channels() != 1 || m.height() != targets_.frames[n].height() || m.width() != targets_.frames[n].width()) {
        throw DomainError("oracle: known mask must be single-channel at latent resolution");
      }
    }
  }
}

std::vector<LatentGrid> OracleDenoiser::features(const LatentVideo& x_t, int t, const Conditioning&) const {
  if (!x_t.same_shape(targets_)) throw DomainError("oracle: latent shape differs from targets");
  const double a = schedule_.alpha_bar(t);
  std::vector<LatentGrid> out = targets_.frames;
  if (known_.empty()) return out;
  for (std::size_t n = 0; n < out.size(); ++n) {
    LatentGrid& g = out[n];
    for (int r = 0; r < g.height(); ++r) {
      for (int c = 0; c < g.width(); ++c) {
        if (known_[n].at(r, c) != 0.0f) continue;
        for (int ch = 0; ch < g.channels(); ++ch) {
          g.at(r, c, ch) = gaussian_posterior_mean(x_t.frames[n].at(r, c, ch), a, prior_mean_, prior_std_);
        }
      }
    }
  }
  return out;
}

GaussianAnalyticDenoiser::GaussianAnalyticDenoiser(DiffusionSchedule schedule, double mean, double std)
    : CleanEstimateDenoiser(std::move(schedule)), mean_(mean), std_(std) {
  if (!(std > 0.0) || !std::isfinite(mean)) throw DomainError("gaussian denoiser: invalid prior");
}

std::vector<LatentGrid> GaussianAnalyticDenoiser::features(const LatentVideo& x_t, int t,
                                                           const Conditioning&) const {
  const double a = schedule_.alpha_bar(t);
  std::vector<LatentGrid> out;
  for (const auto& x : x_t.frames) {
    LatentGrid g(x.height(), x.width(), x.channels());
    for (std::size_t i = 0; i < x.size(); ++i) g.data()[i] = gaussian_posterior_mean(x.data()[i], a, mean_, std_);
    out.push_back(std::move(g));
  }
  return out;
}

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

// Weight of conditioning entry i on hidden channel k; independent of the
// conditioning length.
double conditioning_weight(std::uint64_t seed, std::size_t i, int k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k),
                    0xc0deu};
  std::mt19937_64 rng(seq);
  return std::normal_distribution<double>(0.0, 0.1)(rng);
}

}  // namespace

ToyNetDenoiser::ToyNetDenoiser(Options options) : options_(options) {
  if (options.latent_channels < 1 || options.hidden_channels < 1) throw DomainError("toynet: invalid channel counts");
  std::mt19937_64 rng(options.seed);
  const int c = options.latent_channels;
  const int h = options.hidden_channels;
  lift_ = random_matrix(h, c, rng, 1.0 / std::sqrt(static_cast<double>(c)));
  lift_bias_ = random_matrix(h, 1, rng, 0.1);
  head_ = random_matrix(c, h, rng, 1.0 / std::sqrt(static_cast<double>(h)));
  head_bias_ = random_matrix(c, 1, rng, 0.1);
  attention_ = AttentionParams::random(h, options.seed + 1, 1.0);
  attention_.positional_scale = 0.5;
}

std::vector<LatentGrid> ToyNetDenoiser::features(const LatentVideo& x_t, int t, const Conditioning& cond) const {
  const int hc = options_.hidden_channels;
  Eigen::VectorXd bias = lift_bias_;
  for (int k = 0; k < hc; ++k) {
    bias(k) += 0.1 * std::sin(std::numbers::pi * t / 1000.0 * std::pow(2.0, k % 4) + k);
    for (std::size_t i = 0; i < cond.vector.size(); ++i) bias(k) += conditioning_weight(options_.seed, i, k) * cond.vector[i];
  }
  std::vector<LatentGrid> out;
  for (std::size_t n = 0; n < x_t.size(); ++n) {
    const LatentGrid& x = x_t.frames[n];
    if (x.channels() != options_.latent_channels) throw DomainError("toynet: latent channel count mismatch");
    LatentGrid g(x.height(), x.width(), hc);
    for (int r = 0; r < x.height(); ++r) {
      for (int c = 0; c < x.width(); ++c) {
        const Eigen::Map<const Eigen::VectorXd> in(x.cell(r, c).data(), x.channels());
        Eigen::VectorXd v = lift_ * in + bias;
        if (!cond.reference_features.empty()) {
          const auto ref = cond.reference_features[n].cell(r, c);
          double avg = 0.0;
          for (double value : ref) avg += value;
          v.array() += avg / static_cast<double>(ref.size());
        }
        for (int k = 0; k < hc; ++k) g.at(r, c, k) = v(k);
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

LatentVideo ToyNetDenoiser::finish(const LatentVideo& x_t, int, const Conditioning&,
                                   const std::vector<LatentGrid>& features) const {
  const int hc = options_.hidden_channels;
  const int h = x_t.frames[0].height();
  const int w = x_t.frames[0].width();
  TokenBlock tokens(static_cast<int>(x_t.size()), h, w, hc);
  for (std::size_t n = 0; n < features.size(); ++n) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        for (int k = 0; k < hc; ++k) tokens.at(static_cast<int>(n), r, c, k) = features[n].at(r, c, k);
      }
    }
  }
  const TokenBlock attended = stt_attention(tokens, options_.field, attention_);
  LatentVideo out;
  Eigen::VectorXd hidden(hc);
  for (std::size_t n = 0; n < features.size(); ++n) {
    LatentGrid eps(h, w, options_.latent_channels);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        for (int k = 0; k < hc; ++k) {
          hidden(k) = std::tanh(tokens.at(static_cast<int>(n), r, c, k) + attended.at(static_cast<int>(n), r, c, k));
        }
        const Eigen::VectorXd e = head_ * hidden + head_bias_;
        for (int k = 0; k < options_.latent_channels; ++k) eps.at(r, c, k) = e(k);
      }
    }
    out.frames.push_back(std::move(eps));
  }
  return out;
}

std::unique_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec, const DiffusionSchedule& schedule,
                                        const LatentVideo* targets, std::vector<FeatureGrid> known) {
  if (spec.name == "oracle") {
    if (targets == nullptr) throw ConfigError("oracle denoiser needs target frames");
    return std::make_unique<OracleDenoiser>(schedule, *targets, std::move(known), spec.prior_mean, spec.prior_std);
  }
  if (spec.name == "zero") return std::make_unique<ZeroDenoiser>();
  if (spec.name == "gaussian") return std::make_unique<GaussianAnalyticDenoiser>(schedule, spec.prior_mean, spec.prior_std);
  if (spec.name == "toynet") return std::make_unique<ToyNetDenoiser>(spec.toynet);
  throw ConfigError("unknown denoiser '" + spec.name + "' (expected oracle, zero, gaussian or toynet)");
}

}  // namespace mvgeom

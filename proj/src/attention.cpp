#include "mvgeom/attention.hpp"

#include "mvgeom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mvgeom {

TokenBlock::TokenBlock(int frames, int height, int width, int channels, double fill)
    : frames_(frames), height_(height), width_(width), channels_(channels) {
  if (frames < 1 || height < 1 || width < 1 || channels < 1) {
    throw DomainError("token block: dimensions must be positive");
  }
  data_.assign(tokens() * static_cast<std::size_t>(channels), fill);
}

void AttentionParams::validate(int channels) const {
  for (const Eigen::MatrixXd* m : {&query, &key, &value}) {
    if (m->rows() != channels || m->cols() != channels) {
      throw DomainError("attention: projection size does not match channel count");
    }
    if (!m->allFinite()) throw DomainError("attention: non-finite projection weights");
  }
}

AttentionParams AttentionParams::random(int channels, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale / std::sqrt(static_cast<double>(channels)));
  auto draw = [&] {
    Eigen::MatrixXd m(channels, channels);
    for (int r = 0; r < channels; ++r) {
      for (int c = 0; c < channels; ++c) m(r, c) = normal(rng);
    }
    return m;
  };
  AttentionParams p;
  p.query = draw();
  p.key = draw();
  p.value = draw();
  return p;
}

AttentionParams AttentionParams::identity(int channels) {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(channels, channels);
  return {eye, eye, eye, 1.0};
}

std::vector<double> positional_encoding(int frame, int row, int col, int channels) {
  std::vector<double> pe(static_cast<std::size_t>(channels));
  const int pos[3] = {frame, row, col};
  for (int k = 0; k < channels; ++k) {
    const int octave = k / 3;
    const double freq = std::ldexp(1.0, -octave);
    const double phase = (octave % 2 == 1) ? 0.5 * std::numbers::pi : 0.0;
    pe[static_cast<std::size_t>(k)] = std::sin(pos[k % 3] * freq + phase);
  }
  return pe;
}

bool same_window(int r1, int c1, int r2, int c2, int field) {
  return r1 / field == r2 / field && c1 / field == c2 / field;
}

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

struct Projected {
  Eigen::MatrixXd q;  // channels x tokens
  Eigen::MatrixXd k;
  Eigen::MatrixXd v;
};

Projected project_tokens(const TokenBlock& x, const AttentionParams& params) {
  params.validate(x.channels());
  const int ch = x.channels();
  const auto n = static_cast<Eigen::Index>(x.tokens());
  Eigen::MatrixXd raw(ch, n);
  Eigen::MatrixXd with_pe(ch, n);
  for (int f = 0; f < x.frames(); ++f) {
    for (int r = 0; r < x.height(); ++r) {
      for (int c = 0; c < x.width(); ++c) {
        const auto t = static_cast<Eigen::Index>(x.token_index(f, r, c));
        const std::vector<double> pe = positional_encoding(f, r, c, ch);
        for (int k = 0; k < ch; ++k) {
          raw(k, t) = x.at(f, r, c, k);
          with_pe(k, t) = raw(k, t) + params.positional_scale * pe[static_cast<std::size_t>(k)];
        }
      }
    }
  }
  return {params.query * with_pe, params.key * with_pe, params.value * raw};
}

// Softmax-weighted value sum for query `qi` over key indices `keys`.
void attend(const Projected& p, Eigen::Index qi, const std::vector<Eigen::Index>& keys, double scale,
            TokenBlock& out, std::vector<double>* weights_out = nullptr) {
  std::vector<double> logits(keys.size());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < keys.size(); ++j) {
    logits[j] = scale * p.q.col(qi).dot(p.k.col(keys[j]));
    max_logit = std::max(max_logit, logits[j]);
  }
  double total = 0.0;
  for (double& l : logits) {
    l = std::exp(l - max_logit);
    total += l;
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.v.rows());
  for (std::size_t j = 0; j < keys.size(); ++j) {
    logits[j] /= total;
    acc += logits[j] * p.v.col(keys[j]);
  }
  for (Eigen::Index k = 0; k < acc.size(); ++k) {
    out.data()[static_cast<std::size_t>(qi * acc.size() + k)] = acc(k);
  }
  if (weights_out != nullptr) {
    for (std::size_t j = 0; j < keys.size(); ++j) (*weights_out)[static_cast<std::size_t>(keys[j])] = logits[j];
  }
}

void check_field(int field) {
  if (!is_power_of_two(field)) throw DomainError("attention: field must be a positive power of two");
}

std::vector<Eigen::Index> window_keys(const TokenBlock& x, int field, int row, int col) {
  std::vector<Eigen::Index> keys;
  const int r0 = (row / field) * field;
  const int c0 = (col / field) * field;
  const int r1 = std::min(x.height(), r0 + field);
  const int c1 = std::min(x.width(), c0 + field);
  for (int f = 0; f < x.frames(); ++f) {
    for (int r = r0; r < r1; ++r) {
      for (int c = c0; c < c1; ++c) keys.push_back(static_cast<Eigen::Index>(x.token_index(f, r, c)));
    }
  }
  return keys;
}

}  // namespace

TokenBlock stt_attention(const TokenBlock& x, int field, const AttentionParams& params) {
  check_field(field);
  const Projected p = project_tokens(x, params);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.channels()));
  TokenBlock out(x.frames(), x.height(), x.width(), x.channels());
  for (int r = 0; r < x.height(); ++r) {
    for (int c = 0; c < x.width(); ++c) {
      const std::vector<Eigen::Index> keys = window_keys(x, field, r, c);
      for (int f = 0; f < x.frames(); ++f) {
        attend(p, static_cast<Eigen::Index>(x.token_index(f, r, c)), keys, scale, out);
      }
    }
  }
  return out;
}

std::vector<double> stt_attention_weights(const TokenBlock& x, int field, const AttentionParams& params,
                                          int frame, int row, int col) {
  check_field(field);
  if (frame < 0 || frame >= x.frames() || row < 0 || row >= x.height() || col < 0 || col >= x.width()) {
    throw DomainError("attention: query token out of range");
  }
  const Projected p = project_tokens(x, params);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.channels()));
  TokenBlock scratch(x.frames(), x.height(), x.width(), x.channels());
  std::vector<double> weights(x.tokens(), 0.0);
  attend(p, static_cast<Eigen::Index>(x.token_index(frame, row, col)), window_keys(x, field, row, col), scale,
         scratch, &weights);
  return weights;
}

TokenBlock temporal_attention_1d(const TokenBlock& x, const AttentionParams& params) {
  const Projected p = project_tokens(x, params);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.channels()));
  TokenBlock out(x.frames(), x.height(), x.width(), x.channels());
  std::vector<Eigen::Index> keys(static_cast<std::size_t>(x.frames()));
  for (int r = 0; r < x.height(); ++r) {
    for (int c = 0; c < x.width(); ++c) {
      for (int f = 0; f < x.frames(); ++f) keys[static_cast<std::size_t>(f)] = static_cast<Eigen::Index>(x.token_index(f, r, c));
      for (int f = 0; f < x.frames(); ++f) attend(p, keys[static_cast<std::size_t>(f)], keys, scale, out);
    }
  }
  return out;
}

TokenBlock dense_attention(const TokenBlock& x, const AttentionParams& params) {
  const Projected p = project_tokens(x, params);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.channels()));
  TokenBlock out(x.frames(), x.height(), x.width(), x.channels());
  std::vector<Eigen::Index> keys(x.tokens());
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = static_cast<Eigen::Index>(i);
  for (std::size_t i = 0; i < keys.size(); ++i) attend(p, keys[i], keys, scale, out);
  return out;
}

void AttentionFieldSchedule::validate() const {
  if (!is_power_of_two(start_resolution) || !is_power_of_two(end_resolution)) {
    throw DomainError("field schedule: resolutions must be powers of two");
  }
  if (start_resolution > end_resolution) throw DomainError("field schedule: start exceeds end");
  if (steps_per_doubling < 1) throw DomainError("field schedule: steps_per_doubling must be positive");
}

int field_at_step(const AttentionFieldSchedule& schedule, long long train_step) {
  schedule.validate();
  if (train_step < 0) throw DomainError("field schedule: negative training step");
  const long long doublings = train_step / schedule.steps_per_doubling;
  long long field = schedule.start_resolution;
  for (long long i = 0; i < doublings && field < schedule.end_resolution; ++i) field *= 2;
  return static_cast<int>(std::min<long long>(field, schedule.end_resolution));
}

}  // namespace mvgeom

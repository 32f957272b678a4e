#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace mvgeom {

/// Frames x rows x cols x channels tokens, channel fastest.
class TokenBlock {
 public:
  TokenBlock() = default;
  TokenBlock(int frames, int height, int width, int channels, double fill = 0.0);

  int frames() const { return frames_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t tokens() const { return static_cast<std::size_t>(frames_) * height_ * width_; }

  std::size_t token_index(int n, int r, int c) const {
    return (static_cast<std::size_t>(n) * height_ + r) * width_ + c;
  }
  double& at(int n, int r, int c, int ch) { return data_[token_index(n, r, c) * channels_ + ch]; }
  double at(int n, int r, int c, int ch) const { return data_[token_index(n, r, c) * channels_ + ch]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const TokenBlock& o) const {
    return frames_ == o.frames_ && height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  bool operator==(const TokenBlock& o) const = default;

 private:
  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Single-head projections. Queries and keys see the input plus the scaled
/// positional encoding; values see the raw input.
struct AttentionParams {
  Eigen::MatrixXd query;
  Eigen::MatrixXd key;
  Eigen::MatrixXd value;
  double positional_scale = 1.0;

  int channels() const { return static_cast<int>(value.rows()); }
  void validate(int channels) const;

  /// Entries drawn from N(0, scale^2 / C) with a fixed seed.
  static AttentionParams random(int channels, std::uint64_t seed, double scale = 1.0);
  static AttentionParams identity(int channels);
};

/// Fixed sinusoidal encoding of (frame, row, col) into `channels` values:
/// channel k encodes axis k % 3 at frequency 2^-(k / 3).
std::vector<double> positional_encoding(int frame, int row, int col, int channels);

/// True when two spatial positions share a field x field window.
bool same_window(int r1, int c1, int r2, int c2, int field);

/// Dense spatio-temporal attention restricted to field-sized spatial
/// windows: each token attends to every token, in any frame, whose position
/// falls in its window. field must be a power of two; fields at or above
/// max(H, W) give fully dense attention.
TokenBlock stt_attention(const TokenBlock& x, int field, const AttentionParams& params);

/// Attention across frames at each spatial position independently.
TokenBlock temporal_attention_1d(const TokenBlock& x, const AttentionParams& params);

/// Unmasked attention over all frame-position tokens.
TokenBlock dense_attention(const TokenBlock& x, const AttentionParams& params);

/// Softmax weights of one query token over all tokens under stt_attention;
/// masked entries are 0.
std::vector<double> stt_attention_weights(const TokenBlock& x, int field, const AttentionParams& params,
                                          int frame, int row, int col);

/// Progressive field growth: start * 2^floor(step / steps_per_doubling),
/// capped at end.
struct AttentionFieldSchedule {
  int start_resolution = 1;
  int end_resolution = 64;
  long long steps_per_doubling = 10000;

  void validate() const;
};

int field_at_step(const AttentionFieldSchedule& schedule, long long train_step);

}  // namespace mvgeom

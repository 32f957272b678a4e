#pragma once

#include "mvgeom/errors.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mvgeom {

/// Dense H x W x C grid, row-major with the channel index fastest.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int height, int width, int channels, T fill = T(0))
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 0) {
      throw DomainError("grid: negative dimension");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }
  Grid(int height, int width, int channels, std::vector<T> data)
      : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (height < 0 || width < 0 || channels < 0 ||
        data_.size() != static_cast<std::size_t>(height) * width * channels) {
      throw DomainError("grid: data length does not match dimensions");
    }
  }

  template <typename U>
  static Grid cast_from(const Grid<U>& other) {
    Grid g(other.height(), other.width(), other.channels());
    for (std::size_t i = 0; i < other.size(); ++i) g.data_[i] = static_cast<T>(other.data()[i]);
    return g;
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }

  bool same_shape(const Grid& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

  std::size_t index(int r, int c, int ch = 0) const {
    return (static_cast<std::size_t>(r) * width_ + c) * channels_ + ch;
  }
  T& at(int r, int c, int ch = 0) { return data_[index(r, c, ch)]; }
  const T& at(int r, int c, int ch = 0) const { return data_[index(r, c, ch)]; }

  std::span<T> cell(int r, int c) { return {data_.data() + index(r, c), static_cast<std::size_t>(channels_)}; }
  std::span<const T> cell(int r, int c) const {
    return {data_.data() + index(r, c), static_cast<std::size_t>(channels_)};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool all_finite() const {
    for (const T& v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  bool operator==(const Grid& o) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

/// Storage for images, masks, depth maps and feature maps (32-bit payload).
using FeatureGrid = Grid<float>;
/// Diffusion latents; kept in double so scheduler identities hold to 1e-10.
using LatentGrid = Grid<double>;

// FGRID: ASCII header "FGRID 1\n<H> <W> <C>\n", then H*W*C little-endian
// float32 values, row-major, channel fastest.

void write_grid(const FeatureGrid& grid, const std::string& path);
FeatureGrid read_grid(const std::string& path);
std::string encode_grid(const FeatureGrid& grid);
FeatureGrid decode_grid(std::span<const char> bytes);

/// Binary PPM (P6, maxval 255) of channels 0..2, clamped to [0, 1]. A
/// single-channel grid is written as grey.
void write_ppm(const FeatureGrid& grid, const std::string& path);
/// Reads a P6 file back into a 3-channel grid with values in [0, 1].
FeatureGrid read_ppm(const std::string& path);

/// Bilinear resize with corner-aligned sampling: output cell j maps to
/// source coordinate j * (in - 1) / (out - 1). Exact for affine ramps and
/// never overshoots the input range.
template <typename T>
Grid<T> resize_bilinear(const Grid<T>& grid, int out_h, int out_w);

/// Mask reduction where an output cell is 1 only if every source cell it
/// covers is 1. Dimensions must divide evenly.
FeatureGrid min_pool_mask(const FeatureGrid& mask, int out_h, int out_w);

/// Copy of one channel range [first, first + count).
template <typename T>
Grid<T> slice_channels(const Grid<T>& grid, int first, int count);

}  // namespace mvgeom

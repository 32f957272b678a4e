#include "mvgeom/gridio.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace mvgeom {

namespace {

constexpr const char* kMagic = "FGRID 1";

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path);
}

// Parses a non-negative decimal integer at `pos`, advancing past it.
long parse_uint(std::span<const char> bytes, std::size_t& pos) {
  const std::size_t start = pos;
  long value = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    if (value > (1L << 31)) throw FormatError("FGRID: dimension too large");
    ++pos;
  }
  if (pos == start) throw FormatError("FGRID: expected a dimension");
  return value;
}

void expect(std::span<const char> bytes, std::size_t& pos, char c) {
  if (pos >= bytes.size() || bytes[pos] != c) {
    throw FormatError(std::string("FGRID: malformed header, expected '") + c + "'");
  }
  ++pos;
}

}  // namespace

std::string encode_grid(const FeatureGrid& grid) {
  if (!grid.all_finite()) throw FormatError("FGRID: refusing to write non-finite values");
  std::ostringstream header;
  header << kMagic << '\n' << grid.height() << ' ' << grid.width() << ' ' << grid.channels() << '\n';
  std::string out = header.str();
  const std::size_t offset = out.size();
  out.resize(offset + grid.size() * 4);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(grid.data()[i]));
    std::memcpy(out.data() + offset + 4 * i, &bits, 4);
  }
  return out;
}

FeatureGrid decode_grid(std::span<const char> bytes) {
  const std::size_t magic_len = std::strlen(kMagic);
  if (bytes.size() < magic_len || std::memcmp(bytes.data(), kMagic, magic_len) != 0) {
    throw FormatError("FGRID: bad magic");
  }
  std::size_t pos = magic_len;
  expect(bytes, pos, '\n');
  const long h = parse_uint(bytes, pos);
  expect(bytes, pos, ' ');
  const long w = parse_uint(bytes, pos);
  expect(bytes, pos, ' ');
  const long c = parse_uint(bytes, pos);
  expect(bytes, pos, '\n');

  const std::size_t count = static_cast<std::size_t>(h) * w * c;
  if (bytes.size() - pos != count * 4) {
    throw FormatError("FGRID: payload has " + std::to_string(bytes.size() - pos) + " bytes, header implies " +
                      std::to_string(count * 4));
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + pos + 4 * i, 4);
    data[i] = std::bit_cast<float>(to_little_endian(bits));
    if (!std::isfinite(data[i])) throw FormatError("FGRID: non-finite value in payload");
  }
  return FeatureGrid(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), std::move(data));
}

void write_grid(const FeatureGrid& grid, const std::string& path) { write_file(path, encode_grid(grid)); }

FeatureGrid read_grid(const std::string& path) {
  const std::string bytes = read_file(path);
  return decode_grid({bytes.data(), bytes.size()});
}

void write_ppm(const FeatureGrid& grid, const std::string& path) {
  if (grid.channels() < 1) throw DomainError("PPM: grid has no channels");
  std::ostringstream os;
  os << "P6\n" << grid.width() << ' ' << grid.height() << "\n255\n";
  std::string out = os.str();
  out.reserve(out.size() + grid.pixels() * 3);
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const float v = grid.at(r, c, std::min(ch, grid.channels() - 1));
        const float clamped = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(clamped * 255.0f))));
      }
    }
  }
  write_file(path, out);
}

FeatureGrid read_ppm(const std::string& path) {
  const std::string bytes = read_file(path);
  std::istringstream is(bytes);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  if (!(is >> magic >> w >> h >> maxval) || magic != "P6" || w < 1 || h < 1 || maxval != 255) {
    throw FormatError("PPM: unsupported header in " + path);
  }
  const std::size_t offset = static_cast<std::size_t>(is.tellg()) + 1;
  if (bytes.size() != offset + static_cast<std::size_t>(w) * h * 3) {
    throw FormatError("PPM: payload size mismatch in " + path);
  }
  FeatureGrid g(h, w, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.data()[i] = static_cast<unsigned char>(bytes[offset + i]) / 255.0f;
  }
  return g;
}

template <typename T>
Grid<T> resize_bilinear(const Grid<T>& grid, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw DomainError("resize_bilinear: output size must be >= 1");
  if (grid.height() < 1 || grid.width() < 1) throw DomainError("resize_bilinear: empty input");
  const auto source_coord = [](int j, int in, int out) {
    if (in == 1) return 0.0;
    if (out == 1) return 0.5 * (in - 1);
    return static_cast<double>(j) * (in - 1) / (out - 1);
  };
  Grid<T> out(out_h, out_w, grid.channels());
  for (int r = 0; r < out_h; ++r) {
    const double sy = source_coord(r, grid.height(), out_h);
    const int y0 = std::min(static_cast<int>(sy), grid.height() - 1);
    const int y1 = std::min(y0 + 1, grid.height() - 1);
    const double fy = sy - y0;
    for (int c = 0; c < out_w; ++c) {
      const double sx = source_coord(c, grid.width(), out_w);
      const int x0 = std::min(static_cast<int>(sx), grid.width() - 1);
      const int x1 = std::min(x0 + 1, grid.width() - 1);
      const double fx = sx - x0;
      for (int ch = 0; ch < grid.channels(); ++ch) {
        const double top = (1.0 - fx) * grid.at(y0, x0, ch) + fx * grid.at(y0, x1, ch);
        const double bottom = (1.0 - fx) * grid.at(y1, x0, ch) + fx * grid.at(y1, x1, ch);
        out.at(r, c, ch) = static_cast<T>((1.0 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

template Grid<float> resize_bilinear(const Grid<float>&, int, int);
template Grid<double> resize_bilinear(const Grid<double>&, int, int);

FeatureGrid min_pool_mask(const FeatureGrid& mask, int out_h, int out_w) {
  if (mask.channels() != 1) throw DomainError("min_pool_mask: mask must have one channel");
  if (out_h < 1 || out_w < 1 || mask.height() % out_h != 0 || mask.width() % out_w != 0) {
    throw DomainError("min_pool_mask: output size must divide the mask size");
  }
  const int fy = mask.height() / out_h;
  const int fx = mask.width() / out_w;
  FeatureGrid out(out_h, out_w, 1);
  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      float m = 1.0f;
      for (int dy = 0; dy < fy; ++dy) {
        for (int dx = 0; dx < fx; ++dx) m = std::min(m, mask.at(r * fy + dy, c * fx + dx));
      }
      out.at(r, c) = m;
    }
  }
  return out;
}

template <typename T>
Grid<T> slice_channels(const Grid<T>& grid, int first, int count) {
  if (first < 0 || count < 0 || first + count > grid.channels()) {
    throw DomainError("slice_channels: channel range out of bounds");
  }
  Grid<T> out(grid.height(), grid.width(), count);
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      for (int ch = 0; ch < count; ++ch) out.at(r, c, ch) = grid.at(r, c, first + ch);
    }
  }
  return out;
}

template Grid<float> slice_channels(const Grid<float>&, int, int);
template Grid<double> slice_channels(const Grid<double>&, int, int);

}  // namespace mvgeom

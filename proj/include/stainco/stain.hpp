#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

#include "stainco/image.hpp"

namespace stainco {

// 2x3 transform from optical densities (R, G, B) to raw (H, E).
struct StainMatrix {
  std::array<std::array<double, 3>, 2> coefficients;

  static StainMatrix hematoxylin_eosin() {
    return StainMatrix{{{{1.838, 0.034, -0.760}, {-1.373, 0.772, 1.215}}}};
  }

  const std::array<double, 3>& row(int r) const { return coefficients[static_cast<std::size_t>(r)]; }
};

enum class StainChannel { hematoxylin = 0, eosin = 1 };

// Optical density of one 8-bit channel value: log10(255 / v). Zero values are
// clamped to 1 so the result stays finite.
inline double optical_density(int v) {
  const int clamped = std::clamp(v, 1, 255);
  return std::log10(255.0 / static_cast<double>(clamped));
}

// Un-normalized stain planes; kept in double while the transform runs.
struct RawStainPlanes {
  Plane<double> h;
  Plane<double> e;
};

// Per-pixel application of the deconvolution matrix to the OD-transformed
// RGB values. OD of each 8-bit value is read from a precomputed table.
inline RawStainPlanes rgb_to_he_raw(const RgbTile& tile,
                                    const StainMatrix& matrix = StainMatrix::hematoxylin_eosin()) {
  if (tile.height <= 0 || tile.width <= 0) throw ShapeError("empty tile");
  static const std::array<double, 256> od_table = [] {
    std::array<double, 256> t{};
    for (int v = 0; v < 256; ++v) t[static_cast<std::size_t>(v)] = optical_density(v);
    return t;
  }();

  RawStainPlanes out{Plane<double>(tile.height, tile.width), Plane<double>(tile.height, tile.width)};
  const auto& m = matrix.coefficients;
  const std::size_t n = static_cast<std::size_t>(tile.height) * tile.width;
  for (std::size_t i = 0; i < n; ++i) {
    const double odr = od_table[tile.pixels[i * 3 + 0]];
    const double odg = od_table[tile.pixels[i * 3 + 1]];
    const double odb = od_table[tile.pixels[i * 3 + 2]];
    out.h.v[i] = m[0][0] * odr + m[0][1] * odg + m[0][2] * odb;
    out.e.v[i] = m[1][0] * odr + m[1][1] * odg + m[1][2] * odb;
  }
  return out;
}

// Theoretical [min, max] of one raw channel, from the matrix row and the OD
// range [0, log10(255)]: min sums the negative coefficients, max the positive.
struct ChannelBounds {
  double min = 0.0;
  double max = 0.0;
};

inline ChannelBounds stain_channel_bounds(StainChannel which,
                                          const StainMatrix& matrix = StainMatrix::hematoxylin_eosin()) {
  const double od_max = std::log10(255.0);
  const auto& row = matrix.row(static_cast<int>(which));
  ChannelBounds b;
  for (double c : row) {
    if (c < 0.0)
      b.min += c * od_max;
    else
      b.max += c * od_max;
  }
  return b;
}

// Affine map of a raw channel onto [0, 1] using the fixed theoretical bounds,
// then clamp. Bounds come from the matrix, never from the image, so the map
// is identical for every tile.
inline ChannelImage normalize_stain(const Plane<double>& raw, StainChannel which,
                                    const StainMatrix& matrix = StainMatrix::hematoxylin_eosin()) {
  const ChannelBounds b = stain_channel_bounds(which, matrix);
  const double scale = 1.0 / (b.max - b.min);
  ChannelImage out(raw.height, raw.width);
  for (std::size_t i = 0; i < raw.v.size(); ++i) {
    const double t = (raw.v[i] - b.min) * scale;
    out.v[i] = static_cast<float>(std::clamp(t, 0.0, 1.0));
  }
  return out;
}

inline StainPair rgb_to_stain_pair(const RgbTile& tile,
                                   const StainMatrix& matrix = StainMatrix::hematoxylin_eosin()) {
  const RawStainPlanes raw = rgb_to_he_raw(tile, matrix);
  StainPair pair;
  pair.h = normalize_stain(raw.h, StainChannel::hematoxylin, matrix);
  pair.e = normalize_stain(raw.e, StainChannel::eosin, matrix);
  return pair;
}

// Per-stain optical-density absorbance profiles: the Moore-Penrose
// pseudo-inverse of the deconvolution matrix, columns a_h and a_e. Rendering
// OD = h*a_h + e*a_e makes rgb_to_he_raw recover (h, e) exactly; for the
// default matrix all entries are positive, so non-negative stain amounts map
// to valid optical densities.
struct StainOdProfiles {
  std::array<double, 3> a_h;
  std::array<double, 3> a_e;
};

inline StainOdProfiles stain_od_profiles(const StainMatrix& matrix = StainMatrix::hematoxylin_eosin()) {
  const auto& m = matrix.coefficients;
  double g00 = 0, g01 = 0, g11 = 0;  // M * M^T
  for (int j = 0; j < 3; ++j) {
    g00 += m[0][j] * m[0][j];
    g01 += m[0][j] * m[1][j];
    g11 += m[1][j] * m[1][j];
  }
  const double det = g00 * g11 - g01 * g01;
  if (std::abs(det) < 1e-12) throw ConfigError("stain matrix rows are degenerate");
  const double i00 = g11 / det, i01 = -g01 / det, i11 = g00 / det;
  StainOdProfiles p{};
  for (int j = 0; j < 3; ++j) {
    p.a_h[static_cast<std::size_t>(j)] = m[0][j] * i00 + m[1][j] * i01;
    p.a_e[static_cast<std::size_t>(j)] = m[0][j] * i01 + m[1][j] * i11;
  }
  return p;
}

// --- stain-pair binary container ------------------------------------------
//
// Layout, little-endian: u32 height, u32 width, then H*W float32 h-channel,
// then H*W float32 e-channel.

static_assert(std::endian::native == std::endian::little,
              "stain-pair container assumes a little-endian host");

inline void write_stain_pair_file(const std::string& path, const StainPair& pair) {
  if (!pair.aligned()) throw ShapeError("stain pair channels differ in shape");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open for writing: " + path);
  const std::uint32_t h = static_cast<std::uint32_t>(pair.h.height);
  const std::uint32_t w = static_cast<std::uint32_t>(pair.h.width);
  bool ok = std::fwrite(&h, sizeof(h), 1, f) == 1 && std::fwrite(&w, sizeof(w), 1, f) == 1;
  ok = ok && std::fwrite(pair.h.v.data(), sizeof(float), pair.h.v.size(), f) == pair.h.v.size();
  ok = ok && std::fwrite(pair.e.v.data(), sizeof(float), pair.e.v.size(), f) == pair.e.v.size();
  std::fclose(f);
  if (!ok) throw IoError("short write: " + path);
}

inline StainPair read_stain_pair_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open for reading: " + path);
  std::uint32_t h = 0, w = 0;
  if (std::fread(&h, sizeof(h), 1, f) != 1 || std::fread(&w, sizeof(w), 1, f) != 1) {
    std::fclose(f);
    throw ParseError("truncated stain-pair header: " + path);
  }
  if (h == 0 || w == 0 || h > (1u << 20) || w > (1u << 20)) {
    std::fclose(f);
    throw ParseError("implausible stain-pair dimensions: " + path);
  }
  StainPair pair;
  pair.h = ChannelImage(static_cast<int>(h), static_cast<int>(w));
  pair.e = ChannelImage(static_cast<int>(h), static_cast<int>(w));
  const bool ok = std::fread(pair.h.v.data(), sizeof(float), pair.h.v.size(), f) == pair.h.v.size() &&
                  std::fread(pair.e.v.data(), sizeof(float), pair.e.v.size(), f) == pair.e.v.size();
  std::fclose(f);
  if (!ok) throw ParseError("truncated stain-pair payload: " + path);
  return pair;
}

}  // namespace stainco

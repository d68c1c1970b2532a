#pragma once

#include <cstdint>
#include <vector>

#include "stainco/common.hpp"

namespace stainco {

// Single-channel H x W raster, row-major.
template <class T>
struct Plane {
  int height = 0;
  int width = 0;
  std::vector<T> v;

  Plane() = default;
  Plane(int h, int w) : height(h), width(w), v(static_cast<std::size_t>(h) * w, T(0)) {
    if (h <= 0 || w <= 0) throw ShapeError("plane dimensions must be positive");
  }

  T& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Plane& o) const { return height == o.height && width == o.width; }
};

using ChannelImage = Plane<float>;

// H x W x 3 image with 8-bit channels, RGB interleaved.
struct RgbTile {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  RgbTile() = default;
  RgbTile(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, 0) {
    if (h <= 0 || w <= 0) throw ShapeError("tile dimensions must be positive");
  }

  std::uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

// The two aligned stain channels of one tile, values in [0, 1].
struct StainPair {
  ChannelImage h;
  ChannelImage e;

  bool aligned() const { return h.same_shape(e); }
};

// C planes of identical shape; the generic multi-channel view fed to models.
struct PlanarImage {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> v;

  PlanarImage() = default;
  PlanarImage(int c, int h, int w)
      : channels(c), height(h), width(w), v(static_cast<std::size_t>(c) * h * w, 0.0f) {
    if (c <= 0 || h <= 0 || w <= 0) throw ShapeError("image dimensions must be positive");
  }

  float* plane(int c) { return v.data() + static_cast<std::size_t>(c) * height * width; }
  const float* plane(int c) const { return v.data() + static_cast<std::size_t>(c) * height * width; }
  float& at(int c, int y, int x) {
    return v[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return v[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

inline PlanarImage to_planar(const StainPair& p) {
  if (!p.aligned()) throw ShapeError("stain pair channels differ in shape");
  PlanarImage out(2, p.h.height, p.h.width);
  std::copy(p.h.v.begin(), p.h.v.end(), out.plane(0));
  std::copy(p.e.v.begin(), p.e.v.end(), out.plane(1));
  return out;
}

inline StainPair to_stain_pair(const PlanarImage& img) {
  if (img.channels != 2) throw ShapeError("expected a 2-channel image");
  StainPair p;
  p.h = ChannelImage(img.height, img.width);
  p.e = ChannelImage(img.height, img.width);
  std::copy(img.plane(0), img.plane(0) + p.h.size(), p.h.v.begin());
  std::copy(img.plane(1), img.plane(1) + p.e.size(), p.e.v.begin());
  return p;
}

}  // namespace stainco

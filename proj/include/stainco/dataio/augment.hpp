#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "stainco/dataio/standardize.hpp"
#include "stainco/image.hpp"
#include "stainco/rng.hpp"

namespace stainco {

struct AugmentationPolicy {
  int crop_size = 32;
  double jitter_strength = 0.0;
  bool shared_geometric = true;        // one geometric draw for all channels
  bool independent_photometric = true; // per-view photometric draws
  std::uint64_t rng_seed = 0;
};

// A fully recorded geometric draw: continuous rotation about the source
// centre, crop window in the rotated frame, optional flips. Applying it again
// to any plane of the same source reproduces the output exactly.
struct GeometricTransform {
  double angle = 0.0;  // radians
  int crop_y = 0;
  int crop_x = 0;
  bool flip_h = false;
  bool flip_v = false;
  int crop_size = 0;

  static GeometricTransform identity(int src_h, int src_w, int crop) {
    GeometricTransform t;
    t.crop_size = crop;
    t.crop_y = (src_h - crop) / 2;
    t.crop_x = (src_w - crop) / 2;
    return t;
  }
};

namespace detail {

// Reflection padding index (period 2n, mirror at the borders).
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

// Bilinear sample at continuous coordinates (pixel-centre convention) with
// reflection padding. Exact pass-through when the coordinate hits a centre.
inline float sample_bilinear(const float* plane, int h, int w, double y, double x) {
  const double fy = y - 0.5, fx = x - 0.5;
  const int y0 = static_cast<int>(std::floor(fy));
  const int x0 = static_cast<int>(std::floor(fx));
  const double wy = fy - y0, wx = fx - x0;
  const int ya = reflect_index(y0, h), yb = reflect_index(y0 + 1, h);
  const int xa = reflect_index(x0, w), xb = reflect_index(x0 + 1, w);
  const double v00 = plane[ya * w + xa], v01 = plane[ya * w + xb];
  const double v10 = plane[yb * w + xa], v11 = plane[yb * w + xb];
  return static_cast<float>((1 - wy) * ((1 - wx) * v00 + wx * v01) +
                            wy * ((1 - wx) * v10 + wx * v11));
}

}  // namespace detail

// Applies a recorded geometric transform to one plane of the source size it
// was drawn for.
inline void apply_geometric_plane(const float* src, int src_h, int src_w,
                                  const GeometricTransform& t, float* dst) {
  const int cs = t.crop_size;
  const double cy = src_h / 2.0, cx = src_w / 2.0;
  const double ca = std::cos(-t.angle), sa = std::sin(-t.angle);
  const bool identity_rot = t.angle == 0.0;
  for (int oy = 0; oy < cs; ++oy) {
    for (int ox = 0; ox < cs; ++ox) {
      const int ty = t.flip_v ? cs - 1 - oy : oy;
      const int tx = t.flip_h ? cs - 1 - ox : ox;
      const double py = t.crop_y + ty + 0.5;
      const double px = t.crop_x + tx + 0.5;
      double sy = py, sx = px;
      if (!identity_rot) {
        const double dy = py - cy, dx = px - cx;
        sy = cy + sa * dx + ca * dy;
        sx = cx + ca * dx - sa * dy;
      }
      dst[oy * cs + ox] = detail::sample_bilinear(src, src_h, src_w, sy, sx);
    }
  }
}

inline PlanarImage apply_geometric(const PlanarImage& img, const GeometricTransform& t) {
  PlanarImage out(img.channels, t.crop_size, t.crop_size);
  for (int c = 0; c < img.channels; ++c)
    apply_geometric_plane(img.plane(c), img.height, img.width, t, out.plane(c));
  return out;
}

inline GeometricTransform draw_geometric(int src_h, int src_w, int crop, Rng& rng) {
  if (crop > src_h || crop > src_w) throw ConfigError("crop_size exceeds tile size");
  GeometricTransform t;
  t.crop_size = crop;
  t.angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  t.crop_y = static_cast<int>(rng.below(static_cast<std::uint64_t>(src_h - crop + 1)));
  t.crop_x = static_cast<int>(rng.below(static_cast<std::uint64_t>(src_w - crop + 1)));
  t.flip_h = rng.bernoulli(0.5);
  t.flip_v = rng.bernoulli(0.5);
  return t;
}

// Brightness/contrast jitter of one view (all planes share the draw), then
// clamp to [0, 1].
inline void apply_photometric(PlanarImage& img, double brightness, double contrast) {
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  for (int c = 0; c < img.channels; ++c) {
    float* p = img.plane(c);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += p[i];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = static_cast<double>(p[i]) * brightness;
      v = mean + (v - mean) * contrast;
      p[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
}

// Training-time augmentation of a set of views of one tile: a single
// geometric draw shared by every view, then photometric jitter drawn
// independently per view (or once, when the policy says shared). Optional
// standardization runs last.
inline std::vector<PlanarImage> augment_views(const std::vector<PlanarImage>& views,
                                              const std::vector<std::string>& view_letters,
                                              const AugmentationPolicy& policy, Rng& rng,
                                              const ChannelStats* stats = nullptr,
                                              GeometricTransform* geo_out = nullptr) {
  if (views.empty()) throw ConfigError("no views to augment");
  const int src_h = views.front().height, src_w = views.front().width;
  for (const auto& v : views)
    if (v.height != src_h || v.width != src_w) throw ShapeError("views must share tile size");

  const GeometricTransform geo = draw_geometric(src_h, src_w, policy.crop_size, rng);
  if (geo_out) *geo_out = geo;

  const double s = policy.jitter_strength;
  double shared_b = 1.0, shared_c = 1.0;
  if (!policy.independent_photometric && s > 0.0) {
    shared_b = rng.uniform(1.0 - s, 1.0 + s);
    shared_c = rng.uniform(1.0 - s, 1.0 + s);
  }

  std::vector<PlanarImage> out;
  out.reserve(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    PlanarImage v = apply_geometric(views[i], geo);
    if (s > 0.0) {
      double b = shared_b, c = shared_c;
      if (policy.independent_photometric) {
        b = rng.uniform(1.0 - s, 1.0 + s);
        c = rng.uniform(1.0 - s, 1.0 + s);
      }
      apply_photometric(v, b, c);
    }
    if (stats) standardize_planar(v, view_letters[i], *stats);
    out.push_back(std::move(v));
  }
  return out;
}

// Stain-pair specialization: the H and E channels are the two views, so each
// gets its own photometric draw. The policy's rng_seed makes repeated calls
// bit-identical.
inline StainPair augment_stain_pair(const StainPair& pair, const AugmentationPolicy& policy,
                                    const ChannelStats* stats = nullptr,
                                    GeometricTransform* geo_out = nullptr) {
  if (!pair.aligned()) throw ShapeError("stain pair channels differ in shape");
  Rng rng(policy.rng_seed);
  std::vector<PlanarImage> views(2);
  views[0] = PlanarImage(1, pair.h.height, pair.h.width);
  views[1] = PlanarImage(1, pair.e.height, pair.e.width);
  std::copy(pair.h.v.begin(), pair.h.v.end(), views[0].plane(0));
  std::copy(pair.e.v.begin(), pair.e.v.end(), views[1].plane(0));
  const std::vector<std::string> letters{"H", "E"};
  auto aug = augment_views(views, letters, policy, rng, stats, geo_out);
  StainPair out;
  out.h = ChannelImage(policy.crop_size, policy.crop_size);
  out.e = ChannelImage(policy.crop_size, policy.crop_size);
  std::copy(aug[0].plane(0), aug[0].plane(0) + out.h.size(), out.h.v.begin());
  std::copy(aug[1].plane(0), aug[1].plane(0) + out.e.size(), out.e.v.begin());
  return out;
}

// Deterministic evaluation transform: center crop plus standardization.
inline PlanarImage eval_transform(const PlanarImage& img, int crop_size,
                                  const std::string& letters, const ChannelStats* stats = nullptr) {
  if (img.height < crop_size || img.width < crop_size)
    throw ConfigError("input smaller than crop size");
  const GeometricTransform t = GeometricTransform::identity(img.height, img.width, crop_size);
  PlanarImage out = apply_geometric(img, t);
  if (stats) standardize_planar(out, letters, *stats);
  return out;
}

inline StainPair eval_transform(const StainPair& pair, int crop_size,
                                const ChannelStats* stats = nullptr) {
  PlanarImage img = to_planar(pair);
  return to_stain_pair(eval_transform(img, crop_size, "HE", stats));
}

}  // namespace stainco

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "stainco/dataio/manifest.hpp"
#include "stainco/png_io.hpp"
#include "stainco/rng.hpp"
#include "stainco/stain.hpp"

namespace stainco {

// Synthetic two-stain corpus. Tiles are rendered as stain-amount fields
// (hematoxylin ~ nuclei, eosin ~ architecture and matrix) pushed through the
// inverse absorbance model of the deconvolution matrix, so the stain module
// recovers the fields up to 8-bit quantization.
//
// Class 0 draws a few large compact "nested" structures; class 1 scatters
// many small "diffuse" blobs. The architecture field enters the eosin channel
// strongly and the hematoxylin channel weakly, so the class signal lives
// predominantly in the eosin view. Tiles belong to "polygon" groups that
// share nuisance draws (stain intensities, texture frequency, blob scale),
// mimicking the annotated-polygon protocol: labeled subsets drawn from few
// polygons see a narrow slice of the nuisance variation.
struct SynthParams {
  int n_tiles = 2000;
  double class_balance = 0.5;
  int tile_size = 40;
  std::uint64_t seed = 7;
  int tiles_per_polygon = 25;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
};

struct SynthResult {
  std::vector<TileRecord> records;
  std::string manifest_path;
};

namespace synth_detail {

struct PolygonParams {
  int cls = 0;
  double s_h = 1.0, s_e = 1.0;      // per-polygon stain intensity scales
  double b_h = 0.05, b_e = 0.08;    // background offsets
  double noise_freq = 4.0;          // matrix texture cells across the tile
  double noise_amp = 0.25;          // matrix texture amplitude (eosin)
  double blob_scale = 1.0;          // architecture size jitter
};

inline PolygonParams draw_polygon_params(int cls, std::uint64_t seed, long gid) {
  Rng rng(derive_seed(seed, "polygon", static_cast<std::uint64_t>(gid)));
  PolygonParams p;
  p.cls = cls;
  p.s_h = rng.uniform(0.55, 1.0);
  p.s_e = rng.uniform(0.55, 1.0);
  p.b_h = rng.uniform(0.02, 0.08);
  p.b_e = rng.uniform(0.04, 0.12);
  p.noise_freq = rng.uniform(2.5, 6.0);
  p.noise_amp = rng.uniform(0.16, 0.34);
  p.blob_scale = rng.uniform(0.85, 1.15);
  return p;
}

// Two-octave value noise in [0, 1], deterministic in the rng stream.
inline void add_value_noise(Plane<double>& field, double cells, double amp, Rng& rng) {
  const int s = field.width;
  for (int octave = 0; octave < 2; ++octave) {
    const double freq = cells * (octave + 1);
    const int g = std::max(2, static_cast<int>(freq) + 1);
    std::vector<double> grid(static_cast<std::size_t>((g + 1) * (g + 1)));
    for (auto& v : grid) v = rng.uniform();
    const double oct_amp = amp * (octave == 0 ? 0.7 : 0.3);
    for (int y = 0; y < field.height; ++y) {
      const double gy = static_cast<double>(y) / s * g;
      const int y0 = std::min(static_cast<int>(gy), g - 1);
      const double wy = gy - y0;
      for (int x = 0; x < field.width; ++x) {
        const double gx = static_cast<double>(x) / s * g;
        const int x0 = std::min(static_cast<int>(gx), g - 1);
        const double wx = gx - x0;
        const double v00 = grid[static_cast<std::size_t>(y0 * (g + 1) + x0)];
        const double v01 = grid[static_cast<std::size_t>(y0 * (g + 1) + x0 + 1)];
        const double v10 = grid[static_cast<std::size_t>((y0 + 1) * (g + 1) + x0)];
        const double v11 = grid[static_cast<std::size_t>((y0 + 1) * (g + 1) + x0 + 1)];
        field.at(y, x) +=
            oct_amp * ((1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11));
      }
    }
  }
}

inline void add_gaussian_bump(Plane<double>& field, double cy, double cx, double radius,
                              double amp) {
  const double inv2r2 = 1.0 / (2.0 * radius * radius);
  const int win = std::max(1, static_cast<int>(std::ceil(3.0 * radius)));
  const int y0 = std::max(0, static_cast<int>(cy) - win);
  const int y1 = std::min(field.height - 1, static_cast<int>(cy) + win);
  const int x0 = std::max(0, static_cast<int>(cx) - win);
  const int x1 = std::min(field.width - 1, static_cast<int>(cx) + win);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
      field.at(y, x) += amp * std::exp(-(dy * dy + dx * dx) * inv2r2);
    }
}

// Renders one tile into stain-amount fields, then to RGB through the inverse
// absorbance model.
inline RgbTile render_tile(const PolygonParams& poly, int tile_size, std::uint64_t seed,
                           std::uint64_t tile_index, const StainMatrix& matrix) {
  Rng rng(derive_seed(seed, "tile", tile_index));
  const int s = tile_size;
  const double scale = s / 40.0;

  Plane<double> arch(s, s);    // architecture: the class-bearing structure
  Plane<double> nuclei(s, s);  // nuclei layout, shared across views
  Plane<double> cyto(s, s);    // cytoplasm halo around nuclei

  struct Pt {
    double y, x;
  };
  std::vector<Pt> cells;

  if (poly.cls == 0) {
    // nested: few large compact structures with clustered cells
    const int n_nests = 2 + static_cast<int>(rng.below(3));
    for (int k = 0; k < n_nests; ++k) {
      const double cy = rng.uniform(0.22 * s, 0.78 * s);
      const double cx = rng.uniform(0.22 * s, 0.78 * s);
      const double r = rng.uniform(0.13, 0.20) * s * poly.blob_scale;
      add_gaussian_bump(arch, cy, cx, r, rng.uniform(0.55, 0.85));
      const int n_cells = 7 + static_cast<int>(rng.below(5));
      for (int c = 0; c < n_cells; ++c)
        cells.push_back({cy + rng.normal(0.0, r / 1.9), cx + rng.normal(0.0, r / 1.9)});
    }
  } else {
    // diffuse: many small scattered blobs, cells loosely attached
    const int n_blobs = 9 + static_cast<int>(rng.below(6));
    for (int k = 0; k < n_blobs; ++k) {
      const double cy = rng.uniform(0.08 * s, 0.92 * s);
      const double cx = rng.uniform(0.08 * s, 0.92 * s);
      const double r = rng.uniform(0.05, 0.085) * s * poly.blob_scale;
      add_gaussian_bump(arch, cy, cx, r, rng.uniform(0.55, 0.85));
      const int n_cells = 1 + static_cast<int>(rng.below(3));
      for (int c = 0; c < n_cells; ++c)
        cells.push_back({cy + rng.normal(0.0, 2.2 * scale), cx + rng.normal(0.0, 2.2 * scale)});
    }
    const int extra = 4 + static_cast<int>(rng.below(4));
    for (int c = 0; c < extra; ++c)
      cells.push_back({rng.uniform(0.0, static_cast<double>(s)), rng.uniform(0.0, static_cast<double>(s))});
  }

  for (const auto& c : cells) {
    const double r_n = rng.uniform(1.1, 1.7) * scale;
    const double amp = rng.uniform(0.55, 0.95);
    add_gaussian_bump(nuclei, c.y, c.x, r_n, amp);
    add_gaussian_bump(cyto, c.y, c.x, r_n * rng.uniform(2.0, 2.6), amp * 0.35);
  }

  Plane<double> h_noise(s, s), e_noise(s, s);
  add_value_noise(h_noise, poly.noise_freq, 0.10, rng);
  add_value_noise(e_noise, poly.noise_freq, poly.noise_amp, rng);

  const StainOdProfiles prof = stain_od_profiles(matrix);
  RgbTile tile(s, s);
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      double h = poly.b_h + poly.s_h * (0.85 * nuclei.at(y, x) + 0.25 * arch.at(y, x) +
                                        h_noise.at(y, x));
      double e = poly.b_e + poly.s_e * (0.75 * arch.at(y, x) + 0.30 * cyto.at(y, x) +
                                        e_noise.at(y, x));
      h = std::clamp(h, 0.0, 1.35);
      e = std::clamp(e, 0.0, 1.35);
      for (int ch = 0; ch < 3; ++ch) {
        const double od = h * prof.a_h[static_cast<std::size_t>(ch)] +
                          e * prof.a_e[static_cast<std::size_t>(ch)];
        const double v = 255.0 * std::pow(10.0, -od);
        tile.at(y, x, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  return tile;
}

}  // namespace synth_detail

// Generates the corpus under out_dir: PNG tiles in out_dir/tiles/, the
// manifest CSV beside them, and a synth_meta.json recording the parameters.
// Identical parameters produce identical bytes.
inline SynthResult generate_synthetic_dataset(const SynthParams& params,
                                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (params.n_tiles < 1) throw ConfigError("n_tiles must be >= 1");
  if (params.class_balance < 0.0 || params.class_balance > 1.0)
    throw ConfigError("class_balance must lie in [0, 1]");
  if (params.tile_size < 8) throw ConfigError("tile_size must be >= 8");
  fs::create_directories(fs::path(out_dir) / "tiles");

  const int n0 = static_cast<int>(std::lround(params.n_tiles * params.class_balance));
  const int counts[2] = {n0, params.n_tiles - n0};
  const StainMatrix matrix = StainMatrix::hematoxylin_eosin();

  // polygons per class, then per-class split assignment over polygons
  struct Polygon {
    long gid;
    int cls;
    int n_tiles;
    Split split;
  };
  std::vector<Polygon> polygons;
  long next_gid = 0;
  for (int cls = 0; cls < 2; ++cls) {
    int remaining = counts[cls];
    std::vector<std::size_t> idx;
    while (remaining > 0) {
      const int take = std::min(params.tiles_per_polygon, remaining);
      idx.push_back(polygons.size());
      polygons.push_back({next_gid++, cls, take, Split::train});
      remaining -= take;
    }
    Rng split_rng(derive_seed(params.seed, "splits", static_cast<std::uint64_t>(cls)));
    split_rng.shuffle(idx);
    const int np = static_cast<int>(idx.size());
    int n_test = static_cast<int>(std::lround(params.test_fraction * np));
    int n_val = static_cast<int>(std::lround(params.val_fraction * np));
    if (np >= 3) {
      n_test = std::max(n_test, 1);
      n_val = std::max(n_val, 1);
    }
    while (n_test + n_val >= np) {
      if (n_test > n_val)
        --n_test;
      else
        --n_val;
    }
    for (int i = 0; i < n_test; ++i) polygons[idx[static_cast<std::size_t>(i)]].split = Split::test;
    for (int i = n_test; i < n_test + n_val; ++i)
      polygons[idx[static_cast<std::size_t>(i)]].split = Split::val;
  }

  SynthResult result;
  std::uint64_t tile_index = 0;
  char name[32];
  for (const auto& poly : polygons) {
    const auto pp = synth_detail::draw_polygon_params(poly.cls, params.seed, poly.gid);
    for (int t = 0; t < poly.n_tiles; ++t, ++tile_index) {
      std::snprintf(name, sizeof(name), "t%06llu",
                    static_cast<unsigned long long>(tile_index));
      const RgbTile tile =
          synth_detail::render_tile(pp, params.tile_size, params.seed, tile_index, matrix);
      const std::string rel = std::string("tiles/") + name + ".png";
      write_png_rgb8((fs::path(out_dir) / rel).string(), tile);

      TileRecord r;
      r.tile_id = name;
      r.locator = rel;
      r.label = poly.cls;
      r.group_id = poly.gid;
      r.split = poly.split;
      result.records.push_back(std::move(r));
    }
  }

  result.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
  write_manifest(result.manifest_path, result.records);

  nlohmann::json meta = {{"n_tiles", params.n_tiles},
                         {"class_balance", params.class_balance},
                         {"tile_size", params.tile_size},
                         {"seed", params.seed},
                         {"tiles_per_polygon", params.tiles_per_polygon},
                         {"val_fraction", params.val_fraction},
                         {"test_fraction", params.test_fraction}};
  std::ofstream meta_out((fs::path(out_dir) / "synth_meta.json").string());
  meta_out << meta.dump(2) << "\n";
  return result;
}

}  // namespace stainco

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "stainco/rng.hpp"
#include "stainco/stain.hpp"

using namespace stainco;

namespace {

// Independent brute-force evaluation of the deconvolution transform: plain
// double arithmetic, no tables, no shared code with the implementation.
void oracle_he(int r, int g, int b, double& h, double& e) {
  auto od = [](int v) { return std::log10(255.0 / static_cast<double>(v < 1 ? 1 : v)); };
  const double odr = od(r), odg = od(g), odb = od(b);
  h = 1.838 * odr + 0.034 * odg + (-0.760) * odb;
  e = (-1.373) * odr + 0.772 * odg + 1.215 * odb;
}

RgbTile uniform_tile(int h, int w, int r, int g, int b) {
  RgbTile t(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      t.at(y, x, 0) = static_cast<std::uint8_t>(r);
      t.at(y, x, 1) = static_cast<std::uint8_t>(g);
      t.at(y, x, 2) = static_cast<std::uint8_t>(b);
    }
  return t;
}

}  // namespace

TEST_CASE("optical density endpoints and frozen values") {
  CHECK(optical_density(255) == 0.0);
  CHECK_THAT(optical_density(1), Catch::Matchers::WithinAbs(std::log10(255.0), 1e-12));
  // 64-bit oracle: log10(255/128)
  CHECK_THAT(optical_density(128), Catch::Matchers::WithinAbs(0.2993302107860868, 1e-12));
  // clamped at zero
  CHECK(optical_density(0) == optical_density(1));
}

TEST_CASE("optical density is monotone non-increasing over 1..255") {
  for (int v = 2; v <= 255; ++v) CHECK(optical_density(v) <= optical_density(v - 1));
}

TEST_CASE("raw deconvolution matches the brute-force oracle") {
  SECTION("all-white tile maps to exactly zero") {
    const auto raw = rgb_to_he_raw(uniform_tile(4, 5, 255, 255, 255));
    for (double v : raw.h.v) CHECK(v == 0.0);
    for (double v : raw.e.v) CHECK(v == 0.0);
  }
  SECTION("frozen single-pixel values") {
    const auto raw = rgb_to_he_raw(uniform_tile(1, 1, 128, 64, 192));
    CHECK_THAT(raw.h.v[0], Catch::Matchers::WithinAbs(0.47691957, 1e-7));
    CHECK_THAT(raw.e.v[0], Catch::Matchers::WithinAbs(0.20223303, 1e-7));

    const auto dark = rgb_to_he_raw(uniform_tile(1, 1, 1, 1, 1));
    CHECK_THAT(dark.h.v[0], Catch::Matchers::WithinAbs(2.67607268, 1e-7));
    CHECK_THAT(dark.e.v[0], Catch::Matchers::WithinAbs(1.47761567, 1e-7));
  }
  SECTION("random pixels agree within 1e-9 absolute") {
    Rng rng(42);
    RgbTile t(16, 16);
    for (auto& p : t.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    const auto raw = rgb_to_he_raw(t);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        double h = 0, e = 0;
        oracle_he(t.at(y, x, 0), t.at(y, x, 1), t.at(y, x, 2), h, e);
        CHECK_THAT(raw.h.at(y, x), Catch::Matchers::WithinAbs(h, 1e-9));
        CHECK_THAT(raw.e.at(y, x), Catch::Matchers::WithinAbs(e, 1e-9));
      }
  }
}

TEST_CASE("channel bounds derive from the matrix rows") {
  const double L = std::log10(255.0);
  const auto hb = stain_channel_bounds(StainChannel::hematoxylin);
  const auto eb = stain_channel_bounds(StainChannel::eosin);
  CHECK_THAT(hb.min, Catch::Matchers::WithinAbs(-0.760 * L, 1e-12));
  CHECK_THAT(hb.max, Catch::Matchers::WithinAbs((1.838 + 0.034) * L, 1e-12));
  CHECK_THAT(eb.min, Catch::Matchers::WithinAbs(-1.373 * L, 1e-12));
  CHECK_THAT(eb.max, Catch::Matchers::WithinAbs((0.772 + 1.215) * L, 1e-12));
}

TEST_CASE("normalization maps the theoretical range onto [0,1]") {
  Plane<double> raw(1, 3);
  const auto hb = stain_channel_bounds(StainChannel::hematoxylin);
  raw.v = {hb.min, 0.0, hb.max};
  const auto out = normalize_stain(raw, StainChannel::hematoxylin);
  CHECK(out.v[0] == 0.0f);
  CHECK(out.v[2] == 1.0f);
  // oracle: direct affine computation from the Eq-level coefficients
  CHECK_THAT(out.v[1], Catch::Matchers::WithinAbs(0.2887537993920972, 1e-7));
}

TEST_CASE("normalization is order-preserving inside the range") {
  Rng rng(7);
  const auto hb = stain_channel_bounds(StainChannel::hematoxylin);
  Plane<double> raw(1, 64);
  for (auto& v : raw.v) v = rng.uniform(hb.min, hb.max);
  const auto out = normalize_stain(raw, StainChannel::hematoxylin);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j)
      if (raw.v[i] < raw.v[j]) CHECK(out.v[i] <= out.v[j]);
}

TEST_CASE("full stain pair of a white tile") {
  const auto pair = rgb_to_stain_pair(uniform_tile(3, 4, 255, 255, 255));
  REQUIRE(pair.aligned());
  CHECK(pair.h.height == 3);
  CHECK(pair.h.width == 4);
  for (float v : pair.h.v) CHECK_THAT(v, Catch::Matchers::WithinAbs(0.2887537993920972, 1e-6));
  for (float v : pair.e.v) CHECK_THAT(v, Catch::Matchers::WithinAbs(0.4086309523809524, 1e-6));
}

TEST_CASE("stain pair preserves shape, bounds and determinism") {
  Rng rng(11);
  RgbTile t(40, 37);
  for (auto& p : t.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  const auto a = rgb_to_stain_pair(t);
  const auto b = rgb_to_stain_pair(t);
  CHECK(a.h.height == 40);
  CHECK(a.e.width == 37);
  for (float v : a.h.v) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  // bit-identical across calls
  CHECK(a.h.v == b.h.v);
  CHECK(a.e.v == b.e.v);
}

TEST_CASE("stain-pair container round trip") {
  Rng rng(3);
  RgbTile t(9, 13);
  for (auto& p : t.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  const auto pair = rgb_to_stain_pair(t);
  const std::string path = "stain_pair_roundtrip.bin";
  write_stain_pair_file(path, pair);
  const auto back = read_stain_pair_file(path);
  CHECK(back.h.v == pair.h.v);
  CHECK(back.e.v == pair.e.v);
  CHECK(back.h.height == 9);
  CHECK(back.h.width == 13);
  std::remove(path.c_str());
}

#pragma once

#include <string>

#include "stainco/stain.hpp"

namespace stainco {

inline bool is_channel_letter(char c) {
  return c == 'R' || c == 'G' || c == 'B' || c == 'H' || c == 'E';
}

// One channel of a tile as an H x W plane in [0, 1]. R/G/B are the 8-bit
// values over 255; H/E go through stain deconvolution.
inline ChannelImage extract_channel(const RgbTile& tile, char which) {
  switch (which) {
    case 'R':
    case 'G':
    case 'B': {
      const int c = which == 'R' ? 0 : which == 'G' ? 1 : 2;
      ChannelImage out(tile.height, tile.width);
      const std::size_t n = out.size();
      for (std::size_t i = 0; i < n; ++i)
        out.v[i] = static_cast<float>(tile.pixels[i * 3 + c]) / 255.0f;
      return out;
    }
    case 'H':
      return rgb_to_stain_pair(tile).h;
    case 'E':
      return rgb_to_stain_pair(tile).e;
    default:
      throw ConfigError(std::string("unknown channel letter: ") + which);
  }
}

// Stacks the named channels into one planar image. The stain pair is
// deconvolved once when both H and E are requested.
inline PlanarImage extract_channels(const RgbTile& tile, const std::string& letters) {
  if (letters.empty()) throw ConfigError("empty channel list");
  PlanarImage out(static_cast<int>(letters.size()), tile.height, tile.width);
  const bool wants_h = letters.find('H') != std::string::npos;
  const bool wants_e = letters.find('E') != std::string::npos;
  StainPair pair;
  if (wants_h && wants_e)
    pair = rgb_to_stain_pair(tile);
  for (int c = 0; c < out.channels; ++c) {
    const char which = letters[static_cast<std::size_t>(c)];
    if (wants_h && wants_e && (which == 'H' || which == 'E')) {
      const ChannelImage& src = which == 'H' ? pair.h : pair.e;
      std::copy(src.v.begin(), src.v.end(), out.plane(c));
    } else {
      const ChannelImage src = extract_channel(tile, which);
      std::copy(src.v.begin(), src.v.end(), out.plane(c));
    }
  }
  return out;
}

}  // namespace stainco

#pragma once

#include <string>
#include <vector>

#include "stainco/image.hpp"

namespace stainco {

// Per-channel standardization statistics, computed once over the training
// split and recorded in the run config and checkpoint. `channels` names the
// channel letters in order (e.g. "HE", "RGB").
struct ChannelStats {
  std::string channels;
  std::vector<double> mean;
  std::vector<double> stddev;

  bool empty() const { return channels.empty(); }

  int index_of(char c) const {
    const auto pos = channels.find(c);
    if (pos == std::string::npos) throw ConfigError(std::string("no stats for channel ") + c);
    return static_cast<int>(pos);
  }
};

// (v - mean) / std in place, channel by channel. `letters` gives the channel
// letter of each plane of `img`.
inline void standardize_planar(PlanarImage& img, const std::string& letters,
                               const ChannelStats& stats) {
  if (static_cast<int>(letters.size()) != img.channels)
    throw ShapeError("channel letter count does not match image planes");
  for (int c = 0; c < img.channels; ++c) {
    const int si = stats.index_of(letters[static_cast<std::size_t>(c)]);
    const float mu = static_cast<float>(stats.mean[static_cast<std::size_t>(si)]);
    const float inv = static_cast<float>(1.0 / stats.stddev[static_cast<std::size_t>(si)]);
    float* p = img.plane(c);
    const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
    for (std::size_t i = 0; i < n; ++i) p[i] = (p[i] - mu) * inv;
  }
}

}  // namespace stainco

#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "stainco/dataio/manifest.hpp"
#include "stainco/png_io.hpp"

namespace stainco {

// In-memory tile cache keyed by tile_id. Desk-scale corpora fit comfortably;
// after preload() the store is read-only and safe to share across workers.
class TileStore {
public:
  explicit TileStore(std::string manifest_path) : manifest_path_(std::move(manifest_path)) {}

  void preload(const std::vector<TileRecord>& records) {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& r : records)
      if (!tiles_.count(r.tile_id))
        tiles_.emplace(r.tile_id,
                       read_png_rgb8(resolve_locator(r.locator, manifest_path_)));
  }

  const RgbTile& get(const TileRecord& record) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = tiles_.find(record.tile_id);
      if (it != tiles_.end()) return it->second;
    }
    RgbTile tile = read_png_rgb8(resolve_locator(record.locator, manifest_path_));
    std::lock_guard<std::mutex> lock(mu_);
    return tiles_.emplace(record.tile_id, std::move(tile)).first->second;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return tiles_.size();
  }

private:
  std::string manifest_path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, RgbTile> tiles_;
};

}  // namespace stainco

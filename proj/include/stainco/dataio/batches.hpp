#pragma once

#include <vector>

#include "stainco/dataio/manifest.hpp"
#include "stainco/rng.hpp"

namespace stainco {

// One training batch. Slots are ordered labeled-first, then the co-training
// draw; negative_index_map is a derangement over all slots.
struct Batch {
  std::vector<TileRecord> labeled;
  std::vector<int> labels;
  std::vector<TileRecord> cotrain;
  std::vector<int> negative_index_map;

  std::size_t size() const { return labeled.size() + cotrain.size(); }
};

// Batches for one epoch.
//
// Mixed mode (labeled_per_batch < batch_size): an epoch is one pass over the
// co-training universe (labeled ∪ unlabeled); the labeled stream cycles with
// a reshuffle whenever it runs out. Pure supervised mode
// (labeled_per_batch == batch_size): one pass over the labeled set.
// Incomplete trailing batches are dropped, except that at least one batch is
// always emitted.
inline std::vector<Batch> make_batches(const std::vector<TileRecord>& labeled,
                                       const std::vector<TileRecord>& unlabeled, int batch_size,
                                       int labeled_per_batch, std::uint64_t seed) {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (negatives need a partner)");
  if (labeled.empty()) throw ConfigError("labeled set must be non-empty");
  if (labeled_per_batch < 1 || labeled_per_batch > batch_size)
    throw ConfigError("labeled_per_batch must lie in [1, batch_size]");
  for (const auto& r : labeled)
    if (!r.has_label()) throw ConfigError("unlabeled record in the labeled set: " + r.tile_id);

  Rng order_rng(derive_seed(seed, "batch-order"));
  Rng neg_rng(derive_seed(seed, "batch-negatives"));

  std::vector<Batch> out;
  const bool pure_supervised = labeled_per_batch == batch_size;

  auto finish_batch = [&](Batch& b) {
    const int n = static_cast<int>(b.size());
    b.negative_index_map = neg_rng.derangement(n);
    out.push_back(std::move(b));
  };

  if (pure_supervised) {
    std::vector<int> order = order_rng.permutation(static_cast<int>(labeled.size()));
    const int n_batches = std::max<int>(1, static_cast<int>(labeled.size()) / batch_size);
    const int per = static_cast<int>(labeled.size()) < batch_size
                        ? static_cast<int>(labeled.size())
                        : batch_size;
    if (per < 2) throw ConfigError("labeled set too small for a batch");
    for (int bi = 0; bi < n_batches; ++bi) {
      Batch b;
      for (int j = 0; j < per; ++j) {
        const auto& r = labeled[static_cast<std::size_t>(order[static_cast<std::size_t>(bi * per + j)])];
        b.labeled.push_back(r);
        b.labels.push_back(r.label);
      }
      finish_batch(b);
    }
    return out;
  }

  if (unlabeled.empty()) throw ConfigError("mixed batches need a co-training universe");
  const int cotrain_per_batch = batch_size - labeled_per_batch;
  const int n_batches =
      std::max<int>(1, static_cast<int>(unlabeled.size()) / cotrain_per_batch);

  std::vector<int> cotrain_order = order_rng.permutation(static_cast<int>(unlabeled.size()));
  std::vector<int> labeled_order = order_rng.permutation(static_cast<int>(labeled.size()));
  std::size_t labeled_pos = 0;

  std::size_t cotrain_pos = 0;
  for (int bi = 0; bi < n_batches; ++bi) {
    Batch b;
    for (int j = 0; j < labeled_per_batch; ++j) {
      if (labeled_pos == labeled_order.size()) {
        labeled_order = order_rng.permutation(static_cast<int>(labeled.size()));
        labeled_pos = 0;
      }
      const auto& r = labeled[static_cast<std::size_t>(labeled_order[labeled_pos++])];
      b.labeled.push_back(r);
      b.labels.push_back(r.label);
    }
    for (int j = 0; j < cotrain_per_batch && cotrain_pos < cotrain_order.size(); ++j)
      b.cotrain.push_back(unlabeled[static_cast<std::size_t>(cotrain_order[cotrain_pos++])]);
    if (static_cast<int>(b.size()) < 2) throw ConfigError("batch too small for negatives");
    finish_batch(b);
  }
  return out;
}

}  // namespace stainco

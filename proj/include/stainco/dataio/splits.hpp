#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "stainco/dataio/manifest.hpp"
#include "stainco/rng.hpp"

namespace stainco {

// Buckets of group ids used to pick the labeled subset. Groups are ordered by
// a fixed hash of their id and dealt round-robin, so every bucket is
// non-empty and bucket membership is independent of the run seed.
inline std::vector<std::vector<long>> group_buckets(const std::vector<TileRecord>& train_records,
                                                    int n_groups) {
  if (n_groups < 1) throw ConfigError("n_groups must be >= 1");
  std::set<long> distinct;
  for (const auto& r : train_records) {
    if (r.split != Split::train) throw ConfigError("labeled-subset selection expects train records");
    distinct.insert(r.group_id);
  }
  if (static_cast<int>(distinct.size()) < n_groups)
    throw ConfigError("need at least " + std::to_string(n_groups) + " distinct group_ids, have " +
                      std::to_string(distinct.size()));

  std::vector<std::pair<std::uint64_t, long>> hashed;
  hashed.reserve(distinct.size());
  for (long gid : distinct)
    hashed.emplace_back(splitmix64(static_cast<std::uint64_t>(gid) ^ 0xa24baed4963ee407ULL), gid);
  std::sort(hashed.begin(), hashed.end());

  std::vector<std::vector<long>> buckets(static_cast<std::size_t>(n_groups));
  for (std::size_t i = 0; i < hashed.size(); ++i)
    buckets[i % static_cast<std::size_t>(n_groups)].push_back(hashed[i].second);
  return buckets;
}

struct LabeledSplit {
  std::vector<TileRecord> labeled;    // tiles of the chosen bucket
  std::vector<TileRecord> unlabeled;  // the whole train set (co-training universe)
  int chosen_bucket = -1;
  double label_fraction = 0.0;
};

// Partitions the train groups into n_groups buckets and picks one, seeded, as
// the labeled set. The unlabeled universe is all train records, so the
// labeled tiles also feed the co-training term.
inline LabeledSplit select_labeled_subset(const std::vector<TileRecord>& train_records,
                                          int n_groups, std::uint64_t seed) {
  const auto buckets = group_buckets(train_records, n_groups);
  Rng rng(derive_seed(seed, "labeled-bucket"));
  const int chosen = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_groups)));

  std::set<long> chosen_groups(buckets[static_cast<std::size_t>(chosen)].begin(),
                               buckets[static_cast<std::size_t>(chosen)].end());
  LabeledSplit out;
  out.chosen_bucket = chosen;
  out.unlabeled = train_records;
  for (const auto& r : train_records)
    if (chosen_groups.count(r.group_id)) {
      if (!r.has_label())
        throw ConfigError("tile " + r.tile_id + " was selected as labeled but carries no label");
      out.labeled.push_back(r);
    }
  if (out.labeled.empty()) throw ConfigError("labeled bucket selected no tiles");
  out.label_fraction =
      static_cast<double>(out.labeled.size()) / static_cast<double>(train_records.size());
  return out;
}

inline std::vector<TileRecord> records_of_split(const std::vector<TileRecord>& records, Split s) {
  std::vector<TileRecord> out;
  for (const auto& r : records)
    if (r.split == s) out.push_back(r);
  return out;
}

}  // namespace stainco

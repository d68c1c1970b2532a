#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stainco {

// Error hierarchy. Everything user-facing derives from Error so the CLI can
// map failures onto exit codes in one place.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Filesystem / stream failures.
class IoError : public Error {
public:
  using Error::Error;
};

// Malformed input data (manifests, checkpoints, containers).
class ParseError : public Error {
public:
  using Error::Error;
};

// Invalid configuration or precondition violation.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Tensor/image dimension mismatches.
class ShapeError : public Error {
public:
  using Error::Error;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Deterministic seed derivation for independent RNG streams. Streams are
// identified by a tag plus up to three indices (epoch, batch, slot, ...), so
// results never depend on evaluation order or worker count.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(base ^ fnv1a64(tag));
  h = splitmix64(h ^ (a + 0x165667b19e3779f9ULL));
  h = splitmix64(h ^ (b + 0x27220a95fe791999ULL));
  h = splitmix64(h ^ (c + 0x87c37b91114253d5ULL));
  return h;
}

}  // namespace stainco

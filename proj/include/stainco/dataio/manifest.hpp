#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stainco/common.hpp"

namespace stainco {

enum class Split { train, val, test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  throw ConfigError("bad split");
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ParseError("unknown split: " + s);
}

// One manifest row. label -1 means unlabeled; group_id -1 means absent
// (allowed only outside the train split).
struct TileRecord {
  std::string tile_id;
  std::string locator;
  int label = -1;
  long group_id = -1;
  Split split = Split::train;

  bool has_label() const { return label >= 0; }
};

inline constexpr const char* kManifestHeader = "tile_id,locator,label,group_id,split";

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline long parse_long(const std::string& s, const char* what, int line_no) {
  long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  return v;
}

}  // namespace detail

// Reads a manifest CSV. Rejects rows that violate the record invariants,
// naming the offending line.
inline std::vector<TileRecord> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty manifest: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader)
    throw ParseError("line 1: expected header '" + std::string(kManifestHeader) + "', got '" +
                     line + "'");

  std::vector<TileRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 5)
      throw ParseError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                       std::to_string(fields.size()));
    TileRecord r;
    r.tile_id = fields[0];
    r.locator = fields[1];
    if (r.tile_id.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty tile_id");
    if (r.locator.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty locator");
    if (!fields[2].empty()) {
      const long label = detail::parse_long(fields[2], "label", line_no);
      if (label != 0 && label != 1)
        throw ParseError("line " + std::to_string(line_no) + ": label must be 0 or 1");
      r.label = static_cast<int>(label);
    }
    if (!fields[3].empty()) {
      const long gid = detail::parse_long(fields[3], "group_id", line_no);
      if (gid < 0)
        throw ParseError("line " + std::to_string(line_no) + ": group_id must be >= 0");
      r.group_id = gid;
    }
    r.split = split_from_string(fields[4]);

    if (r.split == Split::train && r.group_id < 0)
      throw ParseError("line " + std::to_string(line_no) + ": train rows need a group_id");
    if (r.split != Split::train && !r.has_label())
      throw ParseError("line " + std::to_string(line_no) + ": " + to_string(r.split) +
                       " rows need a label");
    records.push_back(std::move(r));
  }
  return records;
}

inline void write_manifest(const std::string& path, const std::vector<TileRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << kManifestHeader << "\n";
  for (const auto& r : records) {
    out << r.tile_id << ',' << r.locator << ',';
    if (r.has_label()) out << r.label;
    out << ',';
    if (r.group_id >= 0) out << r.group_id;
    out << ',' << to_string(r.split) << "\n";
  }
  if (!out) throw IoError("short write: " + path);
}

// Resolves a tile locator. Absolute paths pass through; relative ones are
// prefixed by STAINCO_DATA_ROOT when set, else by the manifest's directory.
inline std::string resolve_locator(const std::string& locator, const std::string& manifest_path) {
  namespace fs = std::filesystem;
  fs::path p(locator);
  if (p.is_absolute()) return locator;
  if (const char* root = std::getenv("STAINCO_DATA_ROOT"); root && *root)
    return (fs::path(root) / p).string();
  return (fs::path(manifest_path).parent_path() / p).string();
}

}  // namespace stainco

#pragma once

#include <cstdio>
#include <cstring>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "stainco/dataio/standardize.hpp"
#include "stainco/model.hpp"

namespace stainco {

// Single-file checkpoint container:
//   8-byte magic, u32 version, u64 JSON header length, JSON header,
//   then the raw float32 tensor payload. Floats are stored verbatim, so a
//   save/load round trip is bit-exact.
inline constexpr char kCheckpointMagic[8] = {'S', 'T', 'C', 'O', 'C', 'K', 'P', 'T'};

struct Checkpoint {
  std::string variant;
  EncoderSpec encoder_spec;
  std::string channel_pair;
  ChannelStats stats;
  std::string config_hash;
  std::map<std::string, TensorF> tensors;
};

namespace detail {

inline nlohmann::json encoder_spec_to_json(const EncoderSpec& s) {
  return {{"architecture", s.architecture}, {"in_channels", s.in_channels},
          {"feature_dim", s.feature_dim},   {"base_width", s.base_width},
          {"blocks_per_stage", s.blocks_per_stage}, {"pretrained_source", s.pretrained_source}};
}

inline EncoderSpec encoder_spec_from_json(const nlohmann::json& j) {
  EncoderSpec s;
  s.architecture = j.at("architecture").get<std::string>();
  s.in_channels = j.at("in_channels").get<int>();
  s.feature_dim = j.at("feature_dim").get<int>();
  s.base_width = j.at("base_width").get<int>();
  s.blocks_per_stage = j.at("blocks_per_stage").get<int>();
  s.pretrained_source = j.value("pretrained_source", "");
  return s;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, ModelF& model, const ChannelStats& stats,
                            const std::string& config_hash) {
  nn::ParamList<float> params = model.params();
  nlohmann::json header;
  header["variant"] = to_string(model.kind);
  header["encoder_spec"] = detail::encoder_spec_to_json(model.spec);
  header["channel_pair"] = model.channel_pair;
  header["config_hash"] = config_hash;
  header["standardization"] = {{"channels", stats.channels}, {"mean", stats.mean},
                               {"stddev", stats.stddev}};
  nlohmann::json index = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& p : params) {
    index.push_back({{"name", p.name}, {"shape", p.value->shape}, {"offset", offset}});
    offset += p.value->numel() * sizeof(float);
  }
  header["tensors"] = index;
  const std::string hs = header.dump();

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open for writing: " + path);
  bool ok = std::fwrite(kCheckpointMagic, 1, 8, f) == 8;
  const std::uint32_t version = 1;
  ok = ok && std::fwrite(&version, sizeof(version), 1, f) == 1;
  const std::uint64_t jlen = hs.size();
  ok = ok && std::fwrite(&jlen, sizeof(jlen), 1, f) == 1;
  ok = ok && std::fwrite(hs.data(), 1, hs.size(), f) == hs.size();
  for (const auto& p : params)
    ok = ok && std::fwrite(p.value->ptr(), sizeof(float), p.value->numel(), f) == p.value->numel();
  std::fclose(f);
  if (!ok) throw IoError("short write: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open for reading: " + path);
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t jlen = 0;
  if (std::fread(magic, 1, 8, f) != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    std::fclose(f);
    throw ParseError("not a checkpoint file: " + path);
  }
  if (std::fread(&version, sizeof(version), 1, f) != 1 || version != 1 ||
      std::fread(&jlen, sizeof(jlen), 1, f) != 1) {
    std::fclose(f);
    throw ParseError("unsupported checkpoint header: " + path);
  }
  std::string hs(jlen, '\0');
  if (std::fread(hs.data(), 1, jlen, f) != jlen) {
    std::fclose(f);
    throw ParseError("truncated checkpoint header: " + path);
  }
  Checkpoint ck;
  try {
    const nlohmann::json header = nlohmann::json::parse(hs);
    ck.variant = header.at("variant").get<std::string>();
    ck.encoder_spec = detail::encoder_spec_from_json(header.at("encoder_spec"));
    ck.channel_pair = header.value("channel_pair", "");
    ck.config_hash = header.value("config_hash", "");
    const auto& st = header.at("standardization");
    ck.stats.channels = st.at("channels").get<std::string>();
    ck.stats.mean = st.at("mean").get<std::vector<double>>();
    ck.stats.stddev = st.at("stddev").get<std::vector<double>>();
    for (const auto& t : header.at("tensors")) {
      TensorF tensor(t.at("shape").get<std::vector<int>>());
      ck.tensors.emplace(t.at("name").get<std::string>(), std::move(tensor));
    }
    // Payload order matches index order.
    for (const auto& t : header.at("tensors")) {
      TensorF& tensor = ck.tensors.at(t.at("name").get<std::string>());
      if (std::fread(tensor.ptr(), sizeof(float), tensor.numel(), f) != tensor.numel())
        throw ParseError("truncated checkpoint payload: " + path);
    }
  } catch (const nlohmann::json::exception& e) {
    std::fclose(f);
    throw ParseError("bad checkpoint header (" + std::string(e.what()) + "): " + path);
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  return ck;
}

// Rebuilds the model a checkpoint was saved from and restores every tensor.
// Names must match exactly; anything missing or extra is an error.
inline ModelF model_from_checkpoint(const Checkpoint& ck) {
  ModelF m = build_variant(variant_from_string(ck.variant), ck.encoder_spec, ck.channel_pair);
  nn::ParamList<float> params = m.params();
  if (params.size() != ck.tensors.size())
    throw ParseError("checkpoint tensor count does not match the model");
  for (auto& p : params) {
    auto it = ck.tensors.find(p.name);
    if (it == ck.tensors.end()) throw ParseError("checkpoint is missing tensor " + p.name);
    if (it->second.shape != p.value->shape)
      throw ParseError("checkpoint tensor shape mismatch for " + p.name);
    *p.value = it->second;
  }
  return m;
}

// Copies a pretrained 3-channel encoder (branch0 of a saved rgb_baseline
// model) into every branch of `model`, summing the stem's RGB kernels for
// 1-channel branches. Non-stem tensors must match shapes exactly.
inline void load_pretrained_encoders(ModelF& model, const std::string& pretrained_path) {
  const Checkpoint ck = load_checkpoint(pretrained_path);
  const std::string src_prefix = "branch0.enc";
  for (std::size_t b = 0; b < model.encoders.size(); ++b) {
    nn::ParamList<float> dst;
    model.encoders[b]->collect(dst, "enc");
    for (auto& p : dst) {
      const std::string src_name = src_prefix + p.name.substr(3);
      auto it = ck.tensors.find(src_name);
      if (it == ck.tensors.end()) throw ParseError("pretrained source lacks tensor " + src_name);
      if (p.name == "enc.stem.weight" && p.value->dim(1) == 1 && it->second.dim(1) == 3) {
        *p.value = nn::adapt_first_layer(it->second);
      } else {
        if (it->second.shape != p.value->shape)
          throw ParseError("pretrained tensor shape mismatch for " + src_name);
        *p.value = it->second;
      }
    }
  }
}

}  // namespace stainco

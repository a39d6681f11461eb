#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <zlib.h>

#include "swrn/model.hpp"
#include "swrn/quant.hpp"

namespace swrn {

// Checkpoint container:
//   "SWRN" | version u32 | config JSON (u32 length + bytes)
//   | float32 parameter blobs in group order (weights then bias per layer)
//   | u8 quant flag | optional quant section
//   | CRC-32 of all preceding bytes (u32)
// All integers and floats little-endian.
inline constexpr char kCheckpointMagic[4] = {'S', 'W', 'R', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

struct ByteWriter {
  std::vector<std::uint8_t> bytes;

  void raw(const void* p, std::size_t n) {
    const auto* b = (const std::uint8_t*)p;
    bytes.insert(bytes.end(), b, b + n);
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
};

struct ByteReader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void raw(void* p, std::size_t n) {
    if (pos + n > bytes.size())
      throw std::runtime_error("checkpoint: truncated file");
    std::memcpy(p, bytes.data() + pos, n);
    pos += n;
  }
  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::int32_t i32() { std::int32_t v; raw(&v, 4); return v; }
  float f32() { float v; raw(&v, 4); return v; }
  double f64() { double v; raw(&v, 8); return v; }
};

inline nlohmann::json config_json(const ModelConfig& cfg) {
  return {{"variant", variant_name(cfg.variant)},
          {"channels", cfg.channels},
          {"color_channels", cfg.color_channels},
          {"scale", cfg.scale},
          {"layers_f1", cfg.layers_f1},
          {"layers_f2", cfg.layers_f2},
          {"layers_f3", cfg.layers_f3},
          {"hidden_update_layers", cfg.hidden_update_layers}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.variant = variant_from_name(j.at("variant").get<std::string>());
  cfg.channels = j.at("channels").get<std::size_t>();
  cfg.color_channels = j.at("color_channels").get<std::size_t>();
  cfg.scale = j.at("scale").get<std::size_t>();
  cfg.layers_f1 = j.at("layers_f1").get<std::size_t>();
  cfg.layers_f2 = j.at("layers_f2").get<std::size_t>();
  cfg.layers_f3 = j.at("layers_f3").get<std::size_t>();
  cfg.hidden_update_layers = j.at("hidden_update_layers").get<std::size_t>();
  cfg.validate();
  return cfg;
}

}  // namespace detail

template <typename T>
inline std::vector<std::uint8_t> serialize_checkpoint(
    const Parameters<T>& params, const QuantModel* quant = nullptr) {
  detail::ByteWriter w;
  w.raw(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  const std::string cfg = detail::config_json(params.config).dump();
  w.u32((std::uint32_t)cfg.size());
  w.raw(cfg.data(), cfg.size());

  for (const auto* k : params.kernels()) {
    for (T v : k->weights) w.f32((float)v);
    for (T v : k->bias) w.f32((float)v);
  }

  if (quant) {
    w.u8(1);
    w.u32((std::uint32_t)quant->kernels.size());
    for (const auto& qk : quant->kernels) {
      w.raw(qk.weights.data(), qk.weights.size());
      w.f64(qk.weight_scale);
      w.f64(qk.input_scale);
      for (std::int32_t b : qk.bias_q) w.i32(b);
    }
    w.u32((std::uint32_t)quant->act_scales.size());
    for (double s : quant->act_scales) w.f64(s);
    w.f64(quant->h_fwd_scale);
    w.f64(quant->h_bwd_scale);
  } else {
    w.u8(0);
  }

  const std::uint32_t crc =
      (std::uint32_t)crc32(0, w.bytes.data(), (uInt)w.bytes.size());
  w.u32(crc);
  return std::move(w.bytes);
}

struct LoadedCheckpoint {
  Parameters<float> params;
  std::optional<QuantModel> quant;
};

inline LoadedCheckpoint deserialize_checkpoint(
    const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12)
    throw std::runtime_error("checkpoint: file too small");
  const std::uint32_t stored_crc =
      (std::uint32_t)(bytes[bytes.size() - 4] | bytes[bytes.size() - 3] << 8 |
                      bytes[bytes.size() - 2] << 16 |
                      (std::uint32_t)bytes[bytes.size() - 1] << 24);
  const std::uint32_t crc =
      (std::uint32_t)crc32(0, bytes.data(), (uInt)(bytes.size() - 4));
  if (crc != stored_crc)
    throw std::runtime_error("checkpoint: CRC mismatch (corrupt file)");

  detail::ByteReader r{bytes};
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  const std::uint32_t cfg_len = r.u32();
  std::string cfg_text(cfg_len, '\0');
  r.raw(cfg_text.data(), cfg_len);
  const ModelConfig cfg =
      detail::config_from_json(nlohmann::json::parse(cfg_text));

  LoadedCheckpoint out;
  out.params = zero_params<float>(cfg);

  // Config-implied payload length must match what the file holds.
  const std::size_t float_bytes = out.params.param_count() * 4;
  if (r.pos + float_bytes + 1 + 4 > bytes.size())
    throw std::runtime_error(
        "checkpoint: payload shorter than the config implies");

  for (auto* k : out.params.kernels()) {
    for (float& v : k->weights) v = r.f32();
    for (float& v : k->bias) v = r.f32();
  }

  if (r.u8() == 1) {
    QuantModel qm;
    qm.config = cfg;
    const std::uint32_t nk = r.u32();
    const auto ks = out.params.kernels();
    if (nk != ks.size())
      throw std::runtime_error("checkpoint: quant section kernel count " +
                               std::to_string(nk) + " != " +
                               std::to_string(ks.size()));
    for (std::uint32_t i = 0; i < nk; ++i) {
      QuantKernel qk;
      qk.out_channels = ks[i]->out_channels;
      qk.in_channels = ks[i]->in_channels;
      qk.weights.resize(ks[i]->weights.size());
      r.raw(qk.weights.data(), qk.weights.size());
      qk.weight_scale = r.f64();
      qk.input_scale = r.f64();
      qk.bias_q.resize(ks[i]->bias.size());
      for (auto& b : qk.bias_q) b = r.i32();
      qm.kernels.push_back(std::move(qk));
    }
    const std::uint32_t ns = r.u32();
    qm.act_scales.resize(ns);
    for (auto& s : qm.act_scales) s = r.f64();
    qm.h_fwd_scale = r.f64();
    qm.h_bwd_scale = r.f64();
    out.quant = std::move(qm);
  }
  if (r.pos != bytes.size() - 4)
    throw std::runtime_error("checkpoint: trailing bytes before CRC");
  return out;
}

template <typename T>
inline void save_checkpoint(const Parameters<T>& params,
                            const std::filesystem::path& path,
                            const QuantModel* quant = nullptr) {
  const auto bytes = serialize_checkpoint(params, quant);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write((const char*)bytes.data(), (std::streamsize)bytes.size());
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace swrn

#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "swrn/model.hpp"
#include "swrn/training.hpp"

namespace swrn {

/// Merged model + training + path configuration for CLI runs. Defaults are
/// the full-variant training recipe; unknown JSON keys are rejected.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::string manifest_path;
  std::string out_dir = "out";
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j,
                           const std::set<std::string>& known,
                           const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() +
                                  "' in " + where);
  }
}

template <typename T, typename J>
inline void opt(const J& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).template get<T>();
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  detail::reject_unknown(j, {"model", "train", "data", "out"}, "top level");
  RunConfig cfg;

  if (j.contains("model")) {
    const auto& m = j.at("model");
    detail::reject_unknown(m,
                           {"variant", "channels", "layers_f1", "layers_f2",
                            "layers_f3"},
                           "model");
    if (m.contains("variant"))
      cfg.model.variant = variant_from_name(m.at("variant").get<std::string>());
    detail::opt(m, "channels", cfg.model.channels);
    detail::opt(m, "layers_f1", cfg.model.layers_f1);
    detail::opt(m, "layers_f2", cfg.model.layers_f2);
    detail::opt(m, "layers_f3", cfg.model.layers_f3);
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::reject_unknown(
        t,
        {"batch_size", "crop", "clip_len", "total_iters", "base_lr",
         "lr_halving_period", "charbonnier_eps", "seed", "adam_beta1",
         "adam_beta2", "adam_eps", "log_interval", "checkpoint_interval"},
        "train");
    detail::opt(t, "batch_size", cfg.train.batch_size);
    detail::opt(t, "crop", cfg.train.crop);
    detail::opt(t, "clip_len", cfg.train.clip_len);
    detail::opt(t, "total_iters", cfg.train.total_iters);
    detail::opt(t, "base_lr", cfg.train.base_lr);
    detail::opt(t, "lr_halving_period", cfg.train.lr_halving_period);
    detail::opt(t, "charbonnier_eps", cfg.train.charbonnier_eps);
    detail::opt(t, "seed", cfg.train.seed);
    detail::opt(t, "adam_beta1", cfg.train.adam_beta1);
    detail::opt(t, "adam_beta2", cfg.train.adam_beta2);
    detail::opt(t, "adam_eps", cfg.train.adam_eps);
    detail::opt(t, "log_interval", cfg.train.log_interval);
    detail::opt(t, "checkpoint_interval", cfg.train.checkpoint_interval);
  }

  if (j.contains("data")) {
    const auto& d = j.at("data");
    detail::reject_unknown(d, {"manifest"}, "data");
    detail::opt(d, "manifest", cfg.manifest_path);
  }
  if (j.contains("out")) {
    const auto& o = j.at("out");
    detail::reject_unknown(o, {"dir"}, "out");
    detail::opt(o, "dir", cfg.out_dir);
  }

  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_run_config(nlohmann::json::parse(in));
}

}  // namespace swrn

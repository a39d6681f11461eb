#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "swrn/model.hpp"
#include "swrn/recurrence.hpp"
#include "swrn/tensor.hpp"

namespace swrn {

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t crop = 64;  // LR side
  std::size_t clip_len = 10;
  std::size_t total_iters = 250000;
  double base_lr = 1e-3;
  std::size_t lr_halving_period = 50000;
  double charbonnier_eps = 1e-6;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t log_interval = 100;
  std::size_t checkpoint_interval = 5000;

  void validate() const {
    if (batch_size < 1 || crop < 1 || clip_len < 1 || total_iters < 1 ||
        lr_halving_period < 1)
      throw std::invalid_argument("TrainConfig: counts must be >= 1");
    if (!(base_lr > 0)) throw std::invalid_argument("TrainConfig: base_lr <= 0");
    if (!(charbonnier_eps > 0))
      throw std::invalid_argument("TrainConfig: charbonnier_eps <= 0");
    if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
      throw std::invalid_argument("TrainConfig: betas must be in [0,1)");
  }
};

/// Smooth L1 surrogate: mean over elements of sqrt(d^2 + eps^2).
/// Loss accumulates in double; the gradient matches the mean reduction.
template <typename T>
inline std::pair<double, Tensor<T>> charbonnier_loss(const Tensor<T>& pred,
                                                     const Tensor<T>& target,
                                                     double eps) {
  pred.require_same_shape(target, "charbonnier_loss");
  if (!(eps > 0)) throw std::invalid_argument("charbonnier_loss: eps <= 0");
  const double inv_n = 1.0 / (double)pred.size();
  Tensor<T> grad(pred.shape());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = (double)pred[i] - (double)target[i];
    const double root = std::hypot(d, eps);  // exactly eps at d == 0
    sum += root;
    grad[i] = (T)(d / root * inv_n);
  }
  return {sum * inv_n, std::move(grad)};
}

/// Step-decay schedule: base_lr halved every lr_halving_period iterations.
inline double lr_at(std::size_t iter, const TrainConfig& cfg) {
  return cfg.base_lr * std::pow(0.5, (double)(iter / cfg.lr_halving_period));
}

template <typename T = float>
struct AdamState {
  std::vector<std::vector<T>> m_w, v_w, m_b, v_b;  // per kernel
  std::size_t step = 0;

  template <typename P>
  static AdamState shaped_like(const P& params) {
    AdamState s;
    for (const auto* k : params.kernels()) {
      s.m_w.emplace_back(k->weights.size(), T(0));
      s.v_w.emplace_back(k->weights.size(), T(0));
      s.m_b.emplace_back(k->bias.size(), T(0));
      s.v_b.emplace_back(k->bias.size(), T(0));
    }
    return s;
  }
};

namespace detail {

template <typename T>
inline void adam_update(std::vector<T>& p, const std::vector<T>& g,
                        std::vector<T>& m, std::vector<T>& v, double lr,
                        double b1, double b2, double eps, double bc1,
                        double bc2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = (double)g[i];
    const double mi = b1 * (double)m[i] + (1.0 - b1) * gi;
    const double vi = b2 * (double)v[i] + (1.0 - b2) * gi * gi;
    m[i] = (T)mi;
    v[i] = (T)vi;
    const double mhat = mi / bc1;
    const double vhat = vi / bc2;
    p[i] = (T)((double)p[i] - lr * mhat / (std::sqrt(vhat) + eps));
  }
}

}  // namespace detail

/// Standard bias-corrected Adam step over all parameter groups.
template <typename T>
inline void adam_step(Parameters<T>& params, const Parameters<T>& grads,
                      AdamState<T>& state, double lr, const TrainConfig& cfg) {
  auto pk = params.kernels();
  auto gk = grads.kernels();
  const auto names = params.kernel_names();
  if (pk.size() != gk.size() || pk.size() != state.m_w.size())
    throw std::invalid_argument("adam_step: mismatched parameter layouts");

  for (std::size_t k = 0; k < gk.size(); ++k) {
    for (T v : gk[k]->weights)
      if (!std::isfinite(v))
        throw std::runtime_error("adam_step: non-finite gradient in " + names[k]);
    for (T v : gk[k]->bias)
      if (!std::isfinite(v))
        throw std::runtime_error("adam_step: non-finite gradient in " + names[k]);
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, (double)state.step);
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, (double)state.step);
  for (std::size_t k = 0; k < pk.size(); ++k) {
    detail::adam_update(pk[k]->weights, gk[k]->weights, state.m_w[k],
                        state.v_w[k], lr, cfg.adam_beta1, cfg.adam_beta2,
                        cfg.adam_eps, bc1, bc2);
    detail::adam_update(pk[k]->bias, gk[k]->bias, state.m_b[k], state.v_b[k],
                        lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bc1,
                        bc2);
  }
}

/// One aligned LR/HR clip pair (HR dims are 4x the LR dims).
template <typename T = float>
struct TrainClip {
  FrameSequence<T> lr;
  FrameSequence<T> hr;
};

template <typename T = float>
struct TrainBatch {
  FrameSequence<T> lr;  // clip_len frames of (B,3,crop,crop)
  FrameSequence<T> hr;  // clip_len frames of (B,3,4*crop,4*crop)
};

/// Each batch element picks a random clip, start frame, and one LR crop
/// position shared by all clip_len frames; the HR crop is the same window
/// at 4x coordinates.
template <typename T>
inline TrainBatch<T> sample_batch(const std::vector<TrainClip<T>>& dataset,
                                  const TrainConfig& cfg, std::mt19937_64& rng) {
  if (dataset.empty())
    throw std::invalid_argument("sample_batch: empty dataset");
  for (const auto& c : dataset) {
    if (c.lr.size() < cfg.clip_len)
      throw std::invalid_argument("sample_batch: clip '" + c.lr.clip_id +
                                  "' shorter than clip_len");
    const Shape4& s = c.lr.frames.front().shape();
    if (s.h < cfg.crop || s.w < cfg.crop)
      throw std::invalid_argument("sample_batch: clip '" + c.lr.clip_id +
                                  "' smaller than crop size");
  }

  const std::size_t B = cfg.batch_size, cl = cfg.clip_len, cr = cfg.crop;
  TrainBatch<T> batch;
  batch.lr.clip_id = "batch";
  batch.hr.clip_id = "batch";
  for (std::size_t t = 0; t < cl; ++t) {
    batch.lr.frames.emplace_back(Shape4{B, 3, cr, cr});
    batch.hr.frames.emplace_back(Shape4{B, 3, 4 * cr, 4 * cr});
  }

  std::uniform_int_distribution<std::size_t> pick_clip(0, dataset.size() - 1);
  for (std::size_t b = 0; b < B; ++b) {
    const TrainClip<T>& clip = dataset[pick_clip(rng)];
    const Shape4& s = clip.lr.frames.front().shape();
    std::uniform_int_distribution<std::size_t> pick_t(0, clip.lr.size() - cl);
    std::uniform_int_distribution<std::size_t> pick_y(0, s.h - cr);
    std::uniform_int_distribution<std::size_t> pick_x(0, s.w - cr);
    const std::size_t t0 = pick_t(rng), y0 = pick_y(rng), x0 = pick_x(rng);
    for (std::size_t t = 0; t < cl; ++t) {
      const Tensor<T>& lf = clip.lr.frames[t0 + t];
      const Tensor<T>& hf = clip.hr.frames[t0 + t];
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t y = 0; y < cr; ++y)
          std::copy_n(&lf.at(0, c, y0 + y, x0), cr,
                      &batch.lr.frames[t].at(b, c, y, 0));
        for (std::size_t y = 0; y < 4 * cr; ++y)
          std::copy_n(&hf.at(0, c, 4 * y0 + y, 4 * x0), 4 * cr,
                      &batch.hr.frames[t].at(b, c, y, 0));
      }
    }
  }
  return batch;
}

/// One optimization step on a fixed batch: forward sweep, mean Charbonnier
/// over all frames, BPTT, Adam. Returns the batch loss before the update.
template <typename T>
inline double train_step(Parameters<T>& params, AdamState<T>& adam,
                         const TrainBatch<T>& batch, const TrainConfig& cfg,
                         double lr) {
  ClipRun<T> run = run_clip(params, batch.lr, RunMode::train);
  const double inv_t = 1.0 / (double)run.steps;
  double loss = 0.0;
  std::vector<Tensor<T>> grad_outputs;
  grad_outputs.reserve(run.steps);
  for (std::size_t t = 0; t < run.steps; ++t) {
    auto [l, g] = charbonnier_loss(run.outputs[t], batch.hr.frames[t],
                                   cfg.charbonnier_eps);
    loss += l * inv_t;
    g *= (T)inv_t;
    grad_outputs.push_back(std::move(g));
  }
  if (!std::isfinite(loss)) {
    throw std::runtime_error("train_step: non-finite loss " +
                             std::to_string(loss));
  }
  Parameters<T> grads = bptt(params, run, grad_outputs);
  adam_step(params, grads, adam, lr, cfg);
  return loss;
}

struct LossRecord {
  std::size_t iter;
  double lr;
  double loss;
};

template <typename T = float>
struct TrainResult {
  Parameters<T> params;
  std::vector<LossRecord> records;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

template <typename T = float>
struct TrainHooks {
  // Called per logging interval with the freshly appended record.
  std::function<void(const LossRecord&)> on_record;
  // Called per checkpoint interval and once at the end.
  std::function<void(std::size_t iter, const Parameters<T>&)> on_checkpoint;
};

/// Full training loop, deterministic for a fixed seed.
template <typename T = float>
inline TrainResult<T> train(const ModelConfig& model_cfg,
                            const TrainConfig& train_cfg,
                            const std::vector<TrainClip<T>>& dataset,
                            const TrainHooks<T>& hooks = {}) {
  model_cfg.validate();
  train_cfg.validate();
  std::mt19937_64 rng(train_cfg.seed);

  TrainResult<T> result;
  result.params = init_params<T>(model_cfg, train_cfg.seed);
  AdamState<T> adam = AdamState<T>::shaped_like(result.params);

  for (std::size_t iter = 0; iter < train_cfg.total_iters; ++iter) {
    const TrainBatch<T> batch = sample_batch(dataset, train_cfg, rng);
    const double lr = lr_at(iter, train_cfg);
    const double loss = train_step(result.params, adam, batch, train_cfg, lr);
    if (iter == 0) result.initial_loss = loss;
    result.final_loss = loss;
    if (iter % train_cfg.log_interval == 0 ||
        iter + 1 == train_cfg.total_iters) {
      result.records.push_back({iter, lr, loss});
      if (hooks.on_record) hooks.on_record(result.records.back());
    }
    if (hooks.on_checkpoint && ((iter + 1) % train_cfg.checkpoint_interval == 0 ||
                                iter + 1 == train_cfg.total_iters)) {
      hooks.on_checkpoint(iter + 1, result.params);
    }
  }
  return result;
}

inline std::string loss_record_csv(const LossRecord& r) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g", r.iter, r.lr, r.loss);
  return buf;
}

}  // namespace swrn

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "swrn/model.hpp"
#include "swrn/tensor.hpp"

namespace swrn {

/// Ordered frames of one clip. Frames are (B,3,H,W); B is 1 for clips on
/// disk and may be larger for batched training clips.
template <typename T = float>
struct FrameSequence {
  std::vector<Tensor<T>> frames;
  std::string clip_id;

  std::size_t size() const { return frames.size(); }

  void validate() const {
    if (frames.empty())
      throw std::invalid_argument("FrameSequence '" + clip_id + "' is empty");
    for (const auto& f : frames) {
      if (!(f.shape() == frames.front().shape())) {
        throw std::invalid_argument("FrameSequence '" + clip_id +
                                    "': heterogeneous frame shapes " +
                                    frames.front().shape().str() + " vs " +
                                    f.shape().str());
      }
    }
  }
};

template <typename T = float>
struct HiddenPair {
  Tensor<T> h_fwd, h_bwd;
};

template <typename T = float>
struct Window {
  const Tensor<T>* x_prev;
  const Tensor<T>* x_cur;
  const Tensor<T>* x_next;
};

/// Three-frame window centered at i, replicating the clip edges.
template <typename T>
inline Window<T> window_at(const FrameSequence<T>& clip, std::size_t i) {
  if (i >= clip.size()) {
    throw std::invalid_argument("window_at: index " + std::to_string(i) +
                                " out of range for clip of length " +
                                std::to_string(clip.size()));
  }
  const std::size_t last = clip.size() - 1;
  return {&clip.frames[i > 0 ? i - 1 : 0], &clip.frames[i],
          &clip.frames[i < last ? i + 1 : last]};
}

template <typename T = float>
struct ClipRun {
  std::vector<Tensor<T>> outputs;        // HR frames, unclamped
  HiddenPair<T> final_state;
  std::size_t steps = 0;
  std::size_t model_evals = 0;
  std::vector<ActivationTrace<T>> traces;  // train mode only, one per step
};

/// Single left-to-right sweep over the clip: zero-initialized hidden states,
/// one model evaluation per frame, states carried across steps.
template <typename T>
inline ClipRun<T> run_clip(const Parameters<T>& params,
                           const FrameSequence<T>& clip,
                           RunMode mode = RunMode::infer) {
  clip.validate();
  const Shape4& fs = clip.frames.front().shape();
  const Shape4 hs{fs.n, params.config.channels, fs.h, fs.w};

  ClipRun<T> run;
  run.outputs.reserve(clip.size());
  HiddenPair<T> state{Tensor<T>(hs), Tensor<T>(hs)};
  for (std::size_t i = 0; i < clip.size(); ++i) {
    const Window<T> w = window_at(clip, i);
    ForwardResult<T> r = forward(params, *w.x_prev, *w.x_cur, *w.x_next,
                                 state.h_fwd, state.h_bwd, mode);
    ++run.model_evals;
    run.outputs.push_back(std::move(r.y));
    state.h_fwd = std::move(r.h_fwd_next);
    state.h_bwd = std::move(r.h_bwd_next);
    if (mode == RunMode::train) run.traces.push_back(std::move(r.trace));
  }
  run.final_state = std::move(state);
  run.steps = clip.size();
  return run;
}

/// Backpropagation through time over one clip run. `grad_outputs[i]` is the
/// cotangent of output frame i. Gradients flow through the hidden-state
/// chain across all steps; returns summed parameter gradients.
template <typename T>
inline Parameters<T> bptt(const Parameters<T>& params, const ClipRun<T>& run,
                          const std::vector<Tensor<T>>& grad_outputs) {
  if (run.traces.size() != run.steps) {
    throw std::invalid_argument("bptt: clip was not run in train mode");
  }
  if (grad_outputs.size() != run.steps) {
    throw std::invalid_argument("bptt: expected " + std::to_string(run.steps) +
                                " output gradients, got " +
                                std::to_string(grad_outputs.size()));
  }
  Parameters<T> grads = zero_params<T>(params.config);
  const Shape4 hs = run.final_state.h_fwd.shape();
  Tensor<T> gh_fwd(hs), gh_bwd(hs);
  for (std::size_t i = run.steps; i-- > 0;) {
    BackwardResult<T> b =
        backward(params, run.traces[i], grad_outputs[i], gh_fwd, gh_bwd);
    accumulate(grads, b.grads);
    gh_fwd = std::move(b.grad_h_fwd);
    gh_bwd = std::move(b.grad_h_bwd);
  }
  return grads;
}

}  // namespace swrn

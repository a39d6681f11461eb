#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "swrn/recurrence.hpp"
#include "swrn/tensor.hpp"

namespace swrn {

enum class SynthKind { moving_gradient, scrolling_text, bouncing_rect };

inline SynthKind synth_kind_from_name(const std::string& s) {
  if (s == "moving_gradient") return SynthKind::moving_gradient;
  if (s == "scrolling_text") return SynthKind::scrolling_text;
  if (s == "bouncing_rect") return SynthKind::bouncing_rect;
  throw std::invalid_argument("unknown synthetic clip kind: " + s);
}

/// Deterministic HR clip with sub-pixel translation between frames. Values
/// in [0,1]; frames are (1,3,size,size).
template <typename T = float>
inline FrameSequence<T> synth_clip(SynthKind kind, std::size_t frames,
                                   std::size_t size, std::uint64_t seed) {
  if (frames < 1) throw std::invalid_argument("synth_clip: frames < 1");
  if (size < 4 || size % 4 != 0)
    throw std::invalid_argument("synth_clip: size must be divisible by 4");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  constexpr double pi = std::numbers::pi;

  FrameSequence<T> clip;
  clip.clip_id = "synth_" + std::to_string(seed);

  switch (kind) {
    case SynthKind::moving_gradient: {
      // Two sinusoid octaves per channel; the finer one sits near the LR
      // Nyquist limit so multi-frame fusion has something to recover.
      double phase[3], ang[3];
      for (int c = 0; c < 3; ++c) {
        phase[c] = uni(rng) * 2.0 * pi;
        ang[c] = uni(rng) * 2.0 * pi;
      }
      const double vx = 0.30 + 0.2 * uni(rng);  // HR px per frame
      const double vy = 0.17 + 0.2 * uni(rng);
      const double wl_coarse = 20.0 + 16.0 * uni(rng);
      const double wl_fine = 6.0 + 2.0 * uni(rng);
      for (std::size_t t = 0; t < frames; ++t) {
        Tensor<T> f({1, 3, size, size});
        for (int c = 0; c < 3; ++c) {
          const double ca = std::cos(ang[c]), sa = std::sin(ang[c]);
          for (std::size_t y = 0; y < size; ++y) {
            for (std::size_t x = 0; x < size; ++x) {
              const double px = x + 0.5 - vx * (double)t;
              const double py = y + 0.5 - vy * (double)t;
              const double u = ca * px + sa * py;
              const double v = -sa * px + ca * py;
              double val = 0.5 +
                           0.28 * std::sin(2.0 * pi * u / wl_coarse + phase[c]) +
                           0.18 * std::sin(2.0 * pi * v / wl_fine);
              f.at(0, c, y, x) = (T)std::clamp(val, 0.0, 1.0);
            }
          }
        }
        clip.frames.push_back(std::move(f));
      }
      break;
    }
    case SynthKind::scrolling_text: {
      // Rows of sharp glyph-like bars scrolling horizontally with a
      // sub-pixel speed; row layout drawn from the seed.
      const double speed = 0.4 + 0.5 * uni(rng);
      const double row_h = 10.0 + 6.0 * uni(rng);
      const double bar_wl = 7.0 + 5.0 * uni(rng);
      const double row_phase = uni(rng) * 2.0 * pi;
      for (std::size_t t = 0; t < frames; ++t) {
        Tensor<T> f({1, 3, size, size});
        for (std::size_t y = 0; y < size; ++y) {
          const double ry = std::fmod(y + 0.5, row_h) / row_h;
          const bool in_row = ry > 0.25 && ry < 0.85;
          for (std::size_t x = 0; x < size; ++x) {
            double val = 0.9;  // page background
            if (in_row) {
              const double px = x + 0.5 - speed * (double)t;
              const double s = std::sin(2.0 * pi * px / bar_wl +
                                        row_phase + std::floor((y + 0.5) / row_h));
              // Sharpened but band-limited edges.
              val = 0.5 - 0.45 * std::tanh(4.0 * s);
            }
            for (int c = 0; c < 3; ++c)
              f.at(0, c, y, x) = (T)std::clamp(val, 0.0, 1.0);
          }
        }
        clip.frames.push_back(std::move(f));
      }
      break;
    }
    case SynthKind::bouncing_rect: {
      const double rw = size * (0.2 + 0.15 * uni(rng));
      const double rh = size * (0.2 + 0.15 * uni(rng));
      const double vx = 0.6 + 0.7 * uni(rng);
      const double vy = 0.45 + 0.6 * uni(rng);
      const double x0 = uni(rng) * (size - rw);
      const double y0 = uni(rng) * (size - rh);
      const double fg[3] = {0.85, 0.25 + 0.2 * uni(rng), 0.2};
      auto bounce = [](double p, double v, double t, double lim) {
        // reflect within [0, lim]
        double q = std::fmod(p + v * t, 2.0 * lim);
        if (q < 0) q += 2.0 * lim;
        return q > lim ? 2.0 * lim - q : q;
      };
      for (std::size_t t = 0; t < frames; ++t) {
        const double rx = bounce(x0, vx, (double)t, size - rw);
        const double ry = bounce(y0, vy, (double)t, size - rh);
        Tensor<T> f({1, 3, size, size});
        for (std::size_t y = 0; y < size; ++y) {
          for (std::size_t x = 0; x < size; ++x) {
            // Signed distance to the rectangle; 1-px anti-aliased edge.
            const double cx = x + 0.5, cy = y + 0.5;
            const double dx = std::min(cx - rx, rx + rw - cx);
            const double dy = std::min(cy - ry, ry + rh - cy);
            const double cover = std::clamp(std::min(dx, dy) + 0.5, 0.0, 1.0);
            const double bg = 0.15 + 0.5 * (cx + cy) / (2.0 * size);
            for (int c = 0; c < 3; ++c) {
              const double val = bg + cover * (fg[c] - bg);
              f.at(0, c, y, x) = (T)std::clamp(val, 0.0, 1.0);
            }
          }
        }
        clip.frames.push_back(std::move(f));
      }
      break;
    }
  }
  return clip;
}

}  // namespace swrn

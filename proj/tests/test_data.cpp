#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "swrn/dataset.hpp"
#include "swrn/metrics.hpp"
#include "swrn/resample.hpp"
#include "swrn/synth.hpp"
#include "test_util.hpp"

using namespace swrn;
using namespace swrn::test;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::path(::testing::TempDir()) / ("swrn_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Psnr, KnownValues) {
  Tensor<float> a(Shape4{1, 3, 4, 4}, 0.5f);
  Tensor<float> b(Shape4{1, 3, 4, 4}, 0.5f);
  EXPECT_TRUE(std::isinf(psnr(a, b)));

  Tensor<float> c(Shape4{1, 3, 4, 4}, 0.6f);  // uniform error 0.1 -> 20 dB
  EXPECT_NEAR(psnr(a, c), 20.0, 1e-5);

  Tensor<float> d(Shape4{1, 3, 4, 4}, 1.0f);  // uniform error 0.5 -> 6.0206 dB
  EXPECT_NEAR(psnr(a, d), 6.0206, 1e-4);
}

TEST(Psnr, ClampsBeforeComparing) {
  Tensor<float> a(Shape4{1, 1, 2, 2}, 1.5f);
  Tensor<float> b(Shape4{1, 1, 2, 2}, 1.0f);
  EXPECT_TRUE(std::isinf(psnr(a, b)));
  Tensor<float> c(Shape4{1, 1, 2, 3});
  EXPECT_THROW(psnr(a, c), std::invalid_argument);
}

TEST(BicubicDown, ConstantImageIsPreserved) {
  Tensor<float> hr(Shape4{1, 3, 16, 16}, 0.37f);
  Tensor<float> lr = bicubic_downsample_x4(hr);
  EXPECT_EQ(lr.shape(), (Shape4{1, 3, 4, 4}));
  for (float v : lr) EXPECT_NEAR(v, 0.37f, 1e-6f);
}

TEST(BicubicDown, LinearRampInteriorExact) {
  // A separable cubic with normalized symmetric taps reproduces linear
  // signals away from the clamped borders: out[d] = 4d + 1.5.
  Tensor<double> hr(Shape4{1, 1, 8, 32});
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 32; ++x) hr.at(0, 0, y, x) = (double)x;
  Tensor<double> lr = bicubic_downsample_x4(hr);
  ASSERT_EQ(lr.shape(), (Shape4{1, 1, 2, 8}));
  for (std::size_t d = 2; d < 6; ++d)
    EXPECT_NEAR(lr.at(0, 0, 0, d), 4.0 * d + 1.5, 1e-12);
}

TEST(BicubicDown, RectangularShapeAndErrors) {
  Tensor<float> hr(Shape4{2, 3, 16, 20});
  EXPECT_EQ(bicubic_downsample_x4(hr).shape(), (Shape4{2, 3, 4, 5}));
  Tensor<float> bad(Shape4{1, 3, 18, 20});
  try {
    bicubic_downsample_x4(bad);
    FAIL() << "expected throw";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("crop"), std::string::npos);
  }
}

TEST(ImageIo, PngRoundTripQuantized) {
  const fs::path dir = temp_dir("png_rt");
  std::mt19937_64 rng(5);
  Tensor<float> img = random_tensor({1, 3, 9, 13}, rng, 0.0, 1.0);
  // snap every value to the 8-bit grid so the round trip is exact
  for (float& v : img) v = std::round(v * 255.0f) / 255.0f;
  save_png(img, dir / "a.png");
  Tensor<float> back = load_png<float>(dir / "a.png");
  EXPECT_TRUE(bitwise_equal(img, back));
}

TEST(ImageIo, OutOfRangeValuesAreClampedOnSave) {
  const fs::path dir = temp_dir("png_clamp");
  Tensor<float> img(Shape4{1, 3, 2, 2}, std::vector<float>(12, 0.0f));
  img[0] = -0.4f;
  img[1] = 1.7f;
  save_png(img, dir / "a.png");
  Tensor<float> back = load_png<float>(dir / "a.png");
  EXPECT_EQ(back[0], 0.0f);
  EXPECT_EQ(back[1], 1.0f);
}

TEST(ClipIo, SaveLoadRoundTrip) {
  const fs::path dir = temp_dir("clip_rt");
  FrameSequence<float> clip = synth_clip(SynthKind::bouncing_rect, 3, 16, 2);
  for (auto& f : clip.frames)
    for (float& v : f) v = std::round(v * 255.0f) / 255.0f;
  save_clip(clip, dir / "c0");
  FrameSequence<float> back = load_clip<float>(dir / "c0");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.clip_id, "c0");
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_TRUE(bitwise_equal(back.frames[i], clip.frames[i]));
}

TEST(ClipIo, GappedSequenceNamesMissingIndices) {
  const fs::path dir = temp_dir("clip_gap");
  FrameSequence<float> clip = synth_clip(SynthKind::moving_gradient, 4, 16, 3);
  save_clip(clip, dir / "c0");
  fs::remove(dir / "c0" / frame_name(2));
  try {
    load_clip<float>(dir / "c0");
    FAIL() << "expected throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("[2]"), std::string::npos) << e.what();
  }
}

TEST(ClipIo, EmptyDirectoryThrows) {
  const fs::path dir = temp_dir("clip_empty");
  EXPECT_THROW(load_clip<float>(dir), std::runtime_error);
  EXPECT_THROW(load_clip<float>(dir / "nope"), std::runtime_error);
}

TEST(Manifest, SaveLoadRoundTrip) {
  const fs::path dir = temp_dir("manifest_rt");
  DatasetManifest m;
  m.clips.push_back({"clip_b", "lr/clip_b", "hr/clip_b", 10});
  m.clips.push_back({"clip_a", "lr/clip_a", "hr/clip_a", 7});
  save_manifest(m, dir / "manifest.json");
  DatasetManifest back = load_manifest(dir / "manifest.json");
  EXPECT_EQ(back.scale, 4u);
  ASSERT_EQ(back.clips.size(), 2u);
  EXPECT_EQ(back.clips[0].id, "clip_b");
  EXPECT_EQ(back.clips[1].lr_dir, "lr/clip_a");
  EXPECT_EQ(back.clips[1].frames, 7u);
}

TEST(Manifest, ValidateCatchesProblems) {
  const fs::path dir = temp_dir("manifest_val");
  DatasetManifest wrong_scale;
  wrong_scale.scale = 2;
  EXPECT_THROW(wrong_scale.validate(dir), std::runtime_error);

  DatasetManifest m;
  m.clips.push_back({"c0", "lr/c0", "hr/c0", 2});
  EXPECT_THROW(m.validate(dir), std::runtime_error);  // dirs missing

  FrameSequence<float> clip = synth_clip(SynthKind::bouncing_rect, 2, 16, 4);
  save_clip(clip, dir / "hr" / "c0");
  FrameSequence<float> lr;
  lr.clip_id = "c0";
  for (const auto& f : clip.frames)
    lr.frames.push_back(bicubic_downsample_x4(f));
  save_clip(lr, dir / "lr" / "c0");
  EXPECT_NO_THROW(m.validate(dir));

  m.clips[0].frames = 3;  // one more frame than exists
  EXPECT_THROW(m.validate(dir), std::runtime_error);
}

TEST(Manifest, MalformedJsonThrows) {
  const fs::path dir = temp_dir("manifest_bad");
  std::ofstream(dir / "m.json") << "{\"scale\": 4, \"clips\": ";
  EXPECT_THROW(load_manifest(dir / "m.json"), std::exception);
  EXPECT_THROW(load_manifest(dir / "absent.json"), std::runtime_error);
}

TEST(Synth, DeterministicAndSeedSensitive) {
  for (SynthKind kind : {SynthKind::moving_gradient, SynthKind::scrolling_text,
                         SynthKind::bouncing_rect}) {
    FrameSequence<float> a = synth_clip(kind, 3, 16, 7);
    FrameSequence<float> b = synth_clip(kind, 3, 16, 7);
    FrameSequence<float> c = synth_clip(kind, 3, 16, 8);
    for (std::size_t i = 0; i < 3; ++i)
      EXPECT_TRUE(bitwise_equal(a.frames[i], b.frames[i]));
    bool differs = false;
    for (std::size_t i = 0; i < 3 && !differs; ++i)
      differs = !bitwise_equal(a.frames[i], c.frames[i]);
    EXPECT_TRUE(differs);
  }
}

TEST(Synth, FramesMoveAndStayInRange) {
  for (SynthKind kind : {SynthKind::moving_gradient, SynthKind::scrolling_text,
                         SynthKind::bouncing_rect}) {
    FrameSequence<float> clip = synth_clip(kind, 4, 32, 11);
    for (const auto& f : clip.frames) {
      for (float v : f) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
      }
    }
    for (std::size_t i = 1; i < clip.size(); ++i)
      EXPECT_FALSE(bitwise_equal(clip.frames[i], clip.frames[i - 1]));
  }
}

TEST(Synth, RejectsBadArguments) {
  EXPECT_THROW(synth_clip(SynthKind::bouncing_rect, 0, 16, 1),
               std::invalid_argument);
  EXPECT_THROW(synth_clip(SynthKind::bouncing_rect, 2, 18, 1),
               std::invalid_argument);
  EXPECT_THROW(synth_kind_from_name("squiggle"), std::invalid_argument);
}

TEST(Evaluate, ZeroParamsMatchesBilinearBaseline) {
  const fs::path dir = temp_dir("eval_zero");
  DatasetManifest m;
  const std::uint64_t seeds[2] = {21, 22};
  const char* ids[2] = {"clip_y", "clip_x"};
  for (int i = 0; i < 2; ++i) {
    FrameSequence<float> hr = synth_clip(SynthKind::moving_gradient, 3, 32,
                                         seeds[i]);
    FrameSequence<float> lr;
    for (const auto& f : hr.frames) lr.frames.push_back(bicubic_downsample_x4(f));
    save_clip(hr, dir / "hr" / ids[i]);
    save_clip(lr, dir / "lr" / ids[i]);
    m.clips.push_back({ids[i], std::string("lr/") + ids[i],
                       std::string("hr/") + ids[i], 3});
  }

  ModelConfig cfg;
  cfg.channels = 8;
  Parameters<float> zero = zero_params<float>(cfg);
  EvalReport report = evaluate(zero, m, dir);

  ASSERT_EQ(report.clips.size(), 2u);
  EXPECT_EQ(report.clips[0].clip_id, "clip_x");  // sorted by id
  EXPECT_EQ(report.clips[1].clip_id, "clip_y");
  EXPECT_EQ(report.total_frames, 6u);

  // Cross-check one clip against a hand-rolled bilinear-upsample score
  // computed from the PNGs on disk.
  FrameSequence<float> lr = load_clip<float>(dir / "lr" / "clip_x");
  FrameSequence<float> hr = load_clip<float>(dir / "hr" / "clip_x");
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    sum += psnr(bilinear_upsample_x4(lr.frames[i]).clamped(0.0f, 1.0f),
                hr.frames[i]);
  EXPECT_NEAR(report.clips[0].mean_psnr_db, sum / 3.0, 1e-9);
  EXPECT_NEAR(report.mean_psnr_db,
              (report.clips[0].mean_psnr_db + report.clips[1].mean_psnr_db) / 2.0,
              1e-12);

  const std::string csv = report.csv();
  EXPECT_EQ(csv.substr(0, 28), "clip_id,frames,mean_psnr_db\n");
  EXPECT_NE(csv.find("\nALL,6,"), std::string::npos);
}

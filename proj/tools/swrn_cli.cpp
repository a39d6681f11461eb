// Command-line front end: data preparation, training, inference, evaluation,
// quantization, benchmarking, ablation sweeps, and a gradient self-check.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swrn/swrn.hpp"

namespace fs = std::filesystem;
using namespace swrn;

namespace {

std::vector<TrainClip<float>> load_dataset(const DatasetManifest& manifest,
                                           const fs::path& base) {
  manifest.validate(base);
  if (manifest.clips.empty())
    throw std::runtime_error("manifest lists no clips");
  std::vector<TrainClip<float>> dataset;
  for (const auto& mc : manifest.clips) {
    TrainClip<float> clip;
    clip.lr = load_clip<float>(base / mc.lr_dir);
    clip.hr = load_clip<float>(base / mc.hr_dir);
    clip.lr.clip_id = clip.hr.clip_id = mc.id;
    if (clip.lr.size() != clip.hr.size())
      throw std::runtime_error("clip '" + mc.id + "': LR/HR frame counts differ");
    dataset.push_back(std::move(clip));
  }
  return dataset;
}

std::vector<FrameSequence<float>> lr_clips_of(
    const std::vector<TrainClip<float>>& dataset) {
  std::vector<FrameSequence<float>> clips;
  for (const auto& c : dataset) clips.push_back(c.lr);
  return clips;
}

struct BenchStats {
  double mean_ms = 0, min_ms = 0, max_ms = 0;
};

BenchStats bench_forward(const Parameters<float>& params, std::size_t h,
                         std::size_t w, std::size_t runs, std::size_t warmups) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  FrameSequence<float> lr;
  for (int t = 0; t < 3; ++t) {
    Tensor<float> f({1, 3, h, w});
    for (auto& v : f) v = uni(rng);
    lr.frames.push_back(std::move(f));
  }
  const Shape4 hs{1, params.config.channels, h, w};
  Tensor<float> hf(hs), hb(hs);

  auto step = [&]() {
    ForwardResult<float> r = forward(params, lr.frames[0], lr.frames[1],
                                     lr.frames[2], hf, hb);
    // keep the states realistic across timed runs
    hf = std::move(r.h_fwd_next);
    hb = std::move(r.h_bwd_next);
  };
  for (std::size_t i = 0; i < warmups; ++i) step();

  BenchStats st;
  st.min_ms = 1e300;
  for (std::size_t i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    step();
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    st.mean_ms += ms / (double)runs;
    st.min_ms = std::min(st.min_ms, ms);
    st.max_ms = std::max(st.max_ms, ms);
  }
  return st;
}

// ---------------------------------------------------------------------------

int cmd_prepare(const std::string& hr_root, const std::string& out_root,
                std::size_t scale) {
  if (scale != 4)
    throw std::runtime_error("only scale 4 is supported, got " +
                             std::to_string(scale));
  if (!fs::is_directory(hr_root))
    throw std::runtime_error("--hr is not a directory: " + hr_root);

  std::vector<fs::path> clip_dirs;
  for (const auto& e : fs::directory_iterator(hr_root))
    if (e.is_directory()) clip_dirs.push_back(e.path());
  std::sort(clip_dirs.begin(), clip_dirs.end());
  if (clip_dirs.empty())
    throw std::runtime_error("no clip directories under " + hr_root);

  const fs::path out(out_root);
  fs::create_directories(out);
  DatasetManifest manifest;
  for (const fs::path& dir : clip_dirs) {
    const std::string id = dir.filename().string();
    FrameSequence<float> hr = load_clip<float>(dir);
    const Shape4& s = hr.frames.front().shape();
    if (s.h % scale != 0 || s.w % scale != 0)
      throw std::runtime_error("clip '" + id + "': frame dims " + s.str() +
                               " not divisible by " + std::to_string(scale) +
                               "; center-crop the HR frames first");
    FrameSequence<float> lr;
    lr.clip_id = id;
    for (const auto& f : hr.frames)
      lr.frames.push_back(bicubic_downsample_x4(f));
    save_clip(lr, out / "lr" / id);

    std::error_code ec;
    fs::path hr_rel = fs::relative(dir, out, ec);
    manifest.clips.push_back({id, "lr/" + id,
                              ec ? dir.string() : hr_rel.string(), hr.size()});
    std::cout << id << ": " << hr.size() << " frames, " << s.h << "x" << s.w
              << " -> " << s.h / scale << "x" << s.w / scale << "\n";
  }
  save_manifest(manifest, out / "manifest.json");
  std::cout << "wrote " << (out / "manifest.json").string() << "\n";
  return 0;
}

int cmd_train(const std::string& config_path) {
  const RunConfig cfg = load_run_config(config_path);
  if (cfg.manifest_path.empty())
    throw std::runtime_error("config is missing data.manifest");
  const fs::path base = fs::path(cfg.manifest_path).parent_path();
  const auto dataset = load_dataset(load_manifest(cfg.manifest_path), base);

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  std::ofstream loss_csv(out / "loss.csv");
  loss_csv << "iter,lr,loss\n";

  TrainHooks<float> hooks;
  hooks.on_record = [&](const LossRecord& r) {
    loss_csv << loss_record_csv(r) << "\n";
    loss_csv.flush();
    std::cout << "iter " << r.iter << " lr " << r.lr << " loss " << r.loss
              << std::endl;
  };
  hooks.on_checkpoint = [&](std::size_t iter, const Parameters<float>& p) {
    char name[32];
    std::snprintf(name, sizeof(name), "ckpt_%08zu.ckpt", iter);
    save_checkpoint(p, out / name);
  };

  TrainResult<float> result = train(cfg.model, cfg.train, dataset, hooks);
  save_checkpoint(result.params, out / "final.ckpt");
  std::cout << "final checkpoint: " << (out / "final.ckpt").string()
            << "\ninitial loss " << result.initial_loss << ", final loss "
            << result.final_loss << "\n";
  return 0;
}

int cmd_infer(const std::string& ckpt, const std::string& in_dir,
              const std::string& out_dir, bool quantized) {
  LoadedCheckpoint lc = load_checkpoint(ckpt);
  FrameSequence<float> lr = load_clip<float>(in_dir);
  std::vector<Tensor<float>> outputs;
  if (quantized) {
    if (!lc.quant)
      throw std::runtime_error("checkpoint has no quantized section");
    outputs = quantized_run_clip(*lc.quant, lr);
  } else {
    outputs = std::move(run_clip(lc.params, lr).outputs);
  }
  FrameSequence<float> hr;
  hr.clip_id = lr.clip_id;
  for (auto& y : outputs) hr.frames.push_back(y.clamped(0.0f, 1.0f));
  save_clip(hr, out_dir);
  std::cout << "wrote " << hr.size() << " frames to " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& manifest_path,
             const std::string& out_csv) {
  LoadedCheckpoint lc = load_checkpoint(ckpt);
  const DatasetManifest manifest = load_manifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  EvalReport report = evaluate(lc.params, manifest, base);
  const std::string csv = report.csv();
  std::cout << csv;
  if (!out_csv.empty()) {
    std::ofstream f(out_csv);
    if (!f) throw std::runtime_error("cannot write " + out_csv);
    f << csv;
  }
  return 0;
}

int cmd_quantize(const std::string& ckpt, const std::string& calib_manifest,
                 const std::string& out_ckpt) {
  LoadedCheckpoint lc = load_checkpoint(ckpt);
  const DatasetManifest manifest = load_manifest(calib_manifest);
  const fs::path base = fs::path(calib_manifest).parent_path();
  const auto dataset = load_dataset(manifest, base);
  const auto clips = lr_clips_of(dataset);

  QuantModel qm = quantize_model(lc.params, calibrate(lc.params, clips));
  save_checkpoint(lc.params, out_ckpt, &qm);

  // Degradation report: quantized output vs float output per calibration clip.
  std::cout << "clip_id,frames,quant_vs_float_psnr_db\n";
  for (const auto& clip : clips) {
    ClipRun<float> fp = run_clip(lc.params, clip);
    const auto q = quantized_run_clip(qm, clip);
    double sum = 0.0;
    for (std::size_t i = 0; i < clip.size(); ++i)
      sum += psnr(q[i].clamped(0.0f, 1.0f), fp.outputs[i].clamped(0.0f, 1.0f));
    std::printf("%s,%zu,%.4f\n", clip.clip_id.c_str(), clip.size(),
                sum / (double)clip.size());
  }
  std::cout << "wrote " << out_ckpt << "\n";
  return 0;
}

int cmd_bench(const std::string& ckpt, const std::string& size,
              std::size_t runs, std::size_t warmups) {
  std::size_t h = 0, w = 0;
  if (std::sscanf(size.c_str(), "%zux%zu", &h, &w) != 2 || h < 4 || w < 4)
    throw std::runtime_error("--size must be HxW with H,W >= 4, got '" + size +
                             "'");
  LoadedCheckpoint lc = load_checkpoint(ckpt);
  const BenchStats st = bench_forward(lc.params, h, w, runs, warmups);
  std::printf("variant=%s channels=%zu params=%zu input=%zux%zu runs=%zu\n",
              variant_name(lc.params.config.variant),
              lc.params.config.channels, lc.params.param_count(), h, w, runs);
  std::printf("per-frame ms: mean %.3f  min %.3f  max %.3f\n", st.mean_ms,
              st.min_ms, st.max_ms);
  std::cout << "(host wall-clock; not comparable to mobile latencies)\n";
  return 0;
}

int cmd_ablate(const std::string& config_path) {
  const RunConfig cfg = load_run_config(config_path);
  if (cfg.manifest_path.empty())
    throw std::runtime_error("config is missing data.manifest");
  const fs::path base = fs::path(cfg.manifest_path).parent_path();
  const DatasetManifest manifest = load_manifest(cfg.manifest_path);
  const auto dataset = load_dataset(manifest, base);

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  std::ofstream table(out / "ablation.csv");
  const char* header = "variant,params,ms_per_frame,mean_psnr_db\n";
  table << header;
  std::cout << header;

  for (Variant v : {Variant::baseline, Variant::sliding_window, Variant::full}) {
    ModelConfig mc = cfg.model;
    mc.variant = v;
    TrainResult<float> r = train(mc, cfg.train, dataset);
    save_checkpoint(r.params,
                    out / (std::string("ablate_") + variant_name(v) + ".ckpt"));
    const Shape4& s = dataset.front().lr.frames.front().shape();
    const BenchStats st = bench_forward(r.params, s.h, s.w, 10, 3);
    EvalReport report = evaluate(r.params, manifest, base);
    char row[160];
    std::snprintf(row, sizeof(row), "%s,%zu,%.3f,%.4f\n", variant_name(v),
                  r.params.param_count(), st.mean_ms, report.mean_psnr_db);
    table << row;
    table.flush();
    std::cout << row << std::flush;
  }
  std::cout << "wrote " << (out / "ablation.csv").string() << "\n";
  return 0;
}

// Central finite differences against the analytic BPTT gradients, in double
// precision, reported per parameter group.
int cmd_gradcheck() {
  ModelConfig cfg;
  cfg.channels = 4;
  Parameters<double> params = init_params<double>(cfg, 123);

  FrameSequence<double> clip;
  clip.clip_id = "gradcheck";
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int t = 0; t < 3; ++t) {
    Tensor<double> f({1, 3, 8, 8});
    for (auto& v : f) v = uni(rng);
    clip.frames.push_back(std::move(f));
  }
  Tensor<double> target({1, 3, 32, 32});
  for (auto& v : target) v = uni(rng);

  const double eps = 1e-3;
  auto loss_of = [&](const Parameters<double>& p) {
    ClipRun<double> run = run_clip(p, clip);
    double loss = 0.0;
    for (const auto& y : run.outputs)
      loss += charbonnier_loss(y, target, eps).first / (double)run.steps;
    return loss;
  };

  ClipRun<double> run = run_clip(params, clip, RunMode::train);
  std::vector<Tensor<double>> grad_outputs;
  for (const auto& y : run.outputs) {
    auto [l, g] = charbonnier_loss(y, target, eps);
    g *= 1.0 / (double)run.steps;
    grad_outputs.push_back(std::move(g));
  }
  Parameters<double> grads = bptt(params, run, grad_outputs);

  const double step = 1e-6, tol = 1e-4;
  auto pk = params.kernels();
  auto gk = grads.kernels();
  const auto names = params.kernel_names();
  bool ok = true;
  for (std::size_t k = 0; k < pk.size(); ++k) {
    double diff2 = 0.0, ref2 = 0.0;
    auto check = [&](std::vector<double>& vals, const std::vector<double>& g) {
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const double keep = vals[i];
        vals[i] = keep + step;
        const double up = loss_of(params);
        vals[i] = keep - step;
        const double dn = loss_of(params);
        vals[i] = keep;
        const double fd = (up - dn) / (2 * step);
        diff2 += (fd - g[i]) * (fd - g[i]);
        ref2 += fd * fd;
      }
    };
    check(pk[k]->weights, gk[k]->weights);
    check(pk[k]->bias, gk[k]->bias);
    const double rel = std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-300);
    const bool pass = rel < tol;
    ok = ok && pass;
    std::printf("%-16s rel_err %.3e  %s\n", names[k].c_str(), rel,
                pass ? "ok" : "FAIL");
  }
  std::cout << (ok ? "gradcheck passed\n" : "gradcheck FAILED\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  swrn::detail::pin_blas_threads();
  CLI::App app{"SWRN x4 video super-resolution toolkit"};
  app.require_subcommand(1);

  std::string hr_dir, out_dir, config_path, ckpt, in_dir, manifest_path,
      calib_manifest, out_ckpt, out_csv, size = "64x64";
  std::size_t scale = 4, runs = 20, warmups = 3;
  bool quantized = false;

  auto* prepare = app.add_subcommand("prepare", "Bicubic-downsample HR clips "
                                                "and write a dataset manifest");
  prepare->add_option("--hr", hr_dir, "directory of HR clip directories")
      ->required();
  prepare->add_option("--out", out_dir, "output dataset directory")->required();
  prepare->add_option("--scale", scale, "downsampling factor (must be 4)");

  auto* train_cmd = app.add_subcommand("train", "Train a model from a config");
  train_cmd->add_option("--config", config_path, "run config JSON")->required();

  auto* infer = app.add_subcommand("infer", "Upscale one LR clip");
  infer->add_option("--ckpt", ckpt, "checkpoint file")->required();
  infer->add_option("--in", in_dir, "LR clip directory")->required();
  infer->add_option("--out", out_dir, "output clip directory")->required();
  infer->add_flag("--quantized", quantized, "use the int8 section");

  auto* eval_cmd = app.add_subcommand("eval", "PSNR report over a manifest");
  eval_cmd->add_option("--ckpt", ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--manifest", manifest_path, "dataset manifest")
      ->required();
  eval_cmd->add_option("--out", out_csv, "also write the CSV report here");

  auto* quant = app.add_subcommand("quantize", "Post-training int8 quantization");
  quant->add_option("--ckpt", ckpt, "float checkpoint")->required();
  quant->add_option("--calib", calib_manifest, "calibration manifest")
      ->required();
  quant->add_option("--out", out_ckpt, "output checkpoint")->required();

  auto* bench = app.add_subcommand("bench", "Per-frame host latency");
  bench->add_option("--ckpt", ckpt, "checkpoint file")->required();
  bench->add_option("--size", size, "LR input size HxW (default 64x64)");
  bench->add_option("--runs", runs, "timed runs (default 20)");
  bench->add_option("--warmups", warmups, "untimed warmup runs (default 3)");

  auto* ablate = app.add_subcommand(
      "ablate", "Train and score all variants under one config");
  ablate->add_option("--config", config_path, "run config JSON")->required();

  app.add_subcommand("gradcheck", "Finite-difference gradient self-test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // help text, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage error
  }

  try {
    if (prepare->parsed()) return cmd_prepare(hr_dir, out_dir, scale);
    if (train_cmd->parsed()) return cmd_train(config_path);
    if (infer->parsed()) return cmd_infer(ckpt, in_dir, out_dir, quantized);
    if (eval_cmd->parsed()) return cmd_eval(ckpt, manifest_path, out_csv);
    if (quant->parsed()) return cmd_quantize(ckpt, calib_manifest, out_ckpt);
    if (bench->parsed()) return cmd_bench(ckpt, size, runs, warmups);
    if (ablate->parsed()) return cmd_ablate(config_path);
    return cmd_gradcheck();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

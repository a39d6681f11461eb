#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "swrn/image_io.hpp"
#include "swrn/metrics.hpp"
#include "swrn/recurrence.hpp"

namespace swrn {

namespace fs = std::filesystem;

inline std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%08zu.png", index);
  return buf;
}

/// Loads `frame_%08d.png` starting at 0 with no gaps.
template <typename T = float>
inline FrameSequence<T> load_clip(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("load_clip: not a directory: " + dir.string());

  std::size_t count = 0;
  std::size_t max_index = 0;
  bool any = false;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    std::size_t idx;
    if (std::sscanf(name.c_str(), "frame_%zu.png", &idx) == 1) {
      ++count;
      max_index = any ? std::max(max_index, idx) : idx;
      any = true;
    }
  }
  if (!any)
    throw std::runtime_error("load_clip: no frame_%08d.png files in " +
                             dir.string());

  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i <= max_index; ++i)
    if (!fs::exists(dir / frame_name(i))) missing.push_back(i);
  if (!missing.empty() || count != max_index + 1) {
    std::string list;
    for (std::size_t i : missing)
      list += (list.empty() ? "" : ",") + std::to_string(i);
    throw std::runtime_error("load_clip: gapped frame sequence in " +
                             dir.string() + "; missing indices [" + list + "]");
  }

  FrameSequence<T> seq;
  seq.clip_id = dir.filename().string();
  for (std::size_t i = 0; i <= max_index; ++i)
    seq.frames.push_back(load_png<T>(dir / frame_name(i)));
  seq.validate();
  return seq;
}

template <typename T>
inline void save_clip(const FrameSequence<T>& seq, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < seq.size(); ++i)
    save_png(seq.frames[i], dir / frame_name(i));
}

struct ManifestClip {
  std::string id;
  std::string lr_dir;
  std::string hr_dir;
  std::size_t frames = 0;
};

struct DatasetManifest {
  std::size_t scale = 4;
  std::vector<ManifestClip> clips;

  /// Checks directory existence, frame counts, and the 4x dimension
  /// relation for every listed clip.
  void validate(const fs::path& base = {}) const {
    if (scale != 4) throw std::runtime_error("manifest: scale must be 4");
    for (const auto& c : clips) {
      const fs::path lr = base / c.lr_dir;
      const fs::path hr = base / c.hr_dir;
      for (const fs::path& d : {lr, hr}) {
        if (!fs::is_directory(d))
          throw std::runtime_error("manifest: missing directory " + d.string());
        for (std::size_t i = 0; i < c.frames; ++i)
          if (!fs::exists(d / frame_name(i)))
            throw std::runtime_error("manifest: clip '" + c.id +
                                     "' missing frame " + frame_name(i) +
                                     " in " + d.string());
      }
    }
  }
};

inline DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  DatasetManifest m;
  m.scale = j.at("scale").get<std::size_t>();
  for (const auto& jc : j.at("clips")) {
    m.clips.push_back({jc.at("id").get<std::string>(),
                       jc.at("lr").get<std::string>(),
                       jc.at("hr").get<std::string>(),
                       jc.at("frames").get<std::size_t>()});
  }
  return m;
}

inline void save_manifest(const DatasetManifest& m, const fs::path& path) {
  nlohmann::json j;
  j["scale"] = m.scale;
  j["clips"] = nlohmann::json::array();
  for (const auto& c : m.clips) {
    j["clips"].push_back(
        {{"id", c.id}, {"lr", c.lr_dir}, {"hr", c.hr_dir}, {"frames", c.frames}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << j.dump(2) << "\n";
}

struct ClipScore {
  std::string clip_id;
  std::size_t frames = 0;
  double mean_psnr_db = 0.0;
};

struct EvalReport {
  std::vector<ClipScore> clips;  // sorted by clip_id
  std::size_t total_frames = 0;
  double mean_psnr_db = 0.0;  // mean of clip means

  std::string csv() const {
    std::string out = "clip_id,frames,mean_psnr_db\n";
    char buf[128];
    for (const auto& c : clips) {
      std::snprintf(buf, sizeof(buf), "%s,%zu,%.4f\n", c.clip_id.c_str(),
                    c.frames, c.mean_psnr_db);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), "ALL,%zu,%.4f\n", total_frames,
                  mean_psnr_db);
    out += buf;
    return out;
  }
};

/// Runs the full recurrence over each LR clip, clamps outputs, and scores
/// per-frame PSNR against the HR clip.
template <typename T>
inline ClipScore score_clip(const Parameters<T>& params,
                            const FrameSequence<T>& lr,
                            const FrameSequence<T>& hr) {
  if (lr.size() != hr.size())
    throw std::runtime_error("score_clip: LR/HR frame counts differ for '" +
                             lr.clip_id + "'");
  ClipRun<T> run = run_clip(params, lr, RunMode::infer);
  double sum = 0.0;
  for (std::size_t i = 0; i < run.outputs.size(); ++i)
    sum += psnr(run.outputs[i].clamped(T(0), T(1)), hr.frames[i]);
  return {lr.clip_id, lr.size(), sum / (double)lr.size()};
}

template <typename T>
inline EvalReport evaluate(const Parameters<T>& params,
                           const DatasetManifest& manifest,
                           const fs::path& base = {}) {
  manifest.validate(base);
  if (manifest.clips.empty())
    throw std::runtime_error("evaluate: manifest lists no clips");
  EvalReport report;
  for (const auto& mc : manifest.clips) {
    FrameSequence<T> lr = load_clip<T>(base / mc.lr_dir);
    FrameSequence<T> hr = load_clip<T>(base / mc.hr_dir);
    lr.clip_id = mc.id;
    const Shape4& ls = lr.frames.front().shape();
    const Shape4& hs = hr.frames.front().shape();
    if (hs.h != 4 * ls.h || hs.w != 4 * ls.w)
      throw std::runtime_error("evaluate: clip '" + mc.id +
                               "' HR dims are not 4x the LR dims");
    report.clips.push_back(score_clip(params, lr, hr));
  }
  std::sort(report.clips.begin(), report.clips.end(),
            [](const ClipScore& a, const ClipScore& b) {
              return a.clip_id < b.clip_id;
            });
  double sum = 0.0;
  for (const auto& c : report.clips) {
    report.total_frames += c.frames;
    sum += c.mean_psnr_db;
  }
  report.mean_psnr_db = sum / (double)report.clips.size();
  return report;
}

}  // namespace swrn

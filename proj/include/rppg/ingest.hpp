#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rppg/types.hpp"

namespace rppg {

enum class Condition { respiration, workout, gaze };

std::string_view to_string(Condition c);
Condition parse_condition(std::string_view s);

/// Task 2 of the protocol ("hold breath"); excluded from RR scoring.
inline constexpr int kHoldBreathTask = 2;

struct TrialEntry {
  std::string trial_id;
  Condition condition = Condition::respiration;
  int task_id = 1;
  long start_frame = 0;
  long frame_count = 0;
  int trigger_code = 0;

  bool hold_breath() const { return task_id == kHoldBreathTask; }
  friend bool operator==(const TrialEntry&, const TrialEntry&) = default;
};

/// Plain-text dataset manifest:
///
///   fps=30
///   width=64
///   height=64
///   frames=1200
///   trial=P00-T001,respiration,1,0,600,1
///
/// Header keys come first; each `trial=` line is
/// `id,condition,task,start_frame,frame_count,trigger_code`. Frames live next
/// to the manifest as `frame_%06d.ppm`, numbered from 0.
struct TrialManifest {
  double fps = 0.0;
  int width = 0;
  int height = 0;
  long frame_count = 0;
  std::vector<TrialEntry> entries;

  const TrialEntry& find(std::string_view trial_id) const;
};

TrialManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const TrialManifest& manifest);
void validate_manifest(const TrialManifest& manifest);

std::filesystem::path frame_path(const std::filesystem::path& dir, long index);

/// Binary P6, maxval 255.
RgbFrame read_ppm(const std::filesystem::path& path);
/// Values are rounded and clamped to 8 bits.
void write_ppm(const std::filesystem::path& path, const RgbFrame& frame);

/// Every frame named by the manifest, in order.
VideoClip read_ppm_sequence(const std::filesystem::path& manifest_path);
/// Frames [start, start+count) of the dataset described by the manifest.
VideoClip read_ppm_range(const std::filesystem::path& manifest_path, long start, long count);

VideoClip read_raw_rgb(const std::filesystem::path& path, int width, int height, double fps);
void write_raw_rgb(const std::filesystem::path& path, const VideoClip& clip);

struct CropMargins {
  int left = 300;
  int right = 300;
  int top = 200;
  int bottom = 0;
};

VideoClip crop_clip(const VideoClip& clip, const CropMargins& m);

GrayFrame to_grayscale(const RgbFrame& frame);
std::vector<GrayFrame> to_grayscale(const VideoClip& clip);

struct PhysioRecord {
  double sample_rate = 0.0;
  TimeSeries ecg;
  TimeSeries resp;
  std::vector<int> trigger;

  std::size_t size() const { return ecg.samples.size(); }
};

/// CSV with header `t,ecg,resp,trigger`; the sample rate is inferred from t.
PhysioRecord load_physio_csv(const std::filesystem::path& path);
void write_physio_csv(const std::filesystem::path& path, const PhysioRecord& rec);

}  // namespace rppg

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "rppg/detect.hpp"
#include "rppg/groundtruth.hpp"
#include "rppg/ingest.hpp"
#include "rppg/vitals.hpp"

namespace rppg {

/// Every tunable of the estimate and ground-truth workflows.
///
/// Config files are flat `key = value` lines ('#' starts a comment):
///
///   crop          = left,right,top,bottom    (300,300,200,0)
///   cascade       = path/to/cascade.json
///   roi           = manual:x,y,w,h
///   hr_band       = low,high Hz              (0.7,2.5)
///   rr_band       = low,high Hz              (0.2,0.5)
///   filter_order  = n                        (2)
///   video_stft    = window,hop,fft           (256,30,4096)
///   physio_stft   = window,hop,fft           (1024,128,8192)
///   scalarization = spherical_log_map | green_chromaticity
///   scale_factor  = 1.1
///   min_neighbors = 3
///   min_size      = 0
///   jobs          = n                        (hardware threads)
struct PipelineConfig {
  CropMargins crop;
  std::optional<std::filesystem::path> cascade;
  std::optional<Rect> manual_roi;
  DetectParams detect;
  VitalsConfig vitals;
  GroundTruthConfig groundtruth;
  int jobs = 0;  // 0 = available parallelism
};

/// Applies one setting; relative cascade paths resolve against `base_dir`.
void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir = {});

/// Applies every line of a config file on top of `cfg`.
void load_config(PipelineConfig& cfg, const std::filesystem::path& path);

/// Bands feasible at the given rates, and exactly one ROI source.
void validate_config(const PipelineConfig& cfg, double video_rate, double physio_rate);

Rect parse_manual_roi(std::string_view spec);
Scalarization parse_scalarization(std::string_view s);
std::string_view to_string(Scalarization s);

int effective_jobs(const PipelineConfig& cfg);

}  // namespace rppg

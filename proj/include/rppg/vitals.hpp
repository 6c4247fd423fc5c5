#pragma once

#include <array>
#include <span>
#include <vector>

#include "rppg/detect.hpp"
#include "rppg/dsp.hpp"
#include "rppg/types.hpp"

namespace rppg {

/// Lower half of the face, including the center row for odd heights.
Rect hr_roi(const FaceBox& face);

/// Full-width band from the bottom of the face to the bottom of the frame.
/// Throws when the face reaches the frame bottom.
Rect rr_roi(const FaceBox& face, int frame_h, int frame_w);

/// Intersection of r with the frame.
Rect clamp_rect(const Rect& r, int frame_w, int frame_h);

enum class Scalarization { spherical_log_map, green_chromaticity };

struct PulseTrace {
  std::vector<std::array<double, 3>> unit_means;  // per-frame mean direction, unit length
  TimeSeries scalar;
};

/// Per frame, the normalized mean of the unit RGB vectors in the ROI (black
/// pixels skipped). The scalar is the first principal component of the
/// directions after the sphere log map at their overall mean direction, with
/// the sign chosen so the first nonzero sample is positive. A clip whose
/// directions never change yields an all-zero scalar.
PulseTrace spherical_mean_trace(const VideoClip& clip, std::span<const Rect> rois, Exec exec = Exec::parallel);

/// Mean G/(R+G+B) over the non-black ROI pixels of each frame.
TimeSeries green_chromaticity_trace(const VideoClip& clip, std::span<const Rect> rois);

/// Mean Rec.601 gray over the ROI of each frame.
TimeSeries mean_gray_trace(const VideoClip& clip, std::span<const Rect> rois, Exec exec = Exec::parallel);

struct VitalsConfig {
  dsp::Band hr_band = dsp::kHeartBand;
  dsp::Band rr_band = dsp::kRespBand;
  int filter_order = 2;
  dsp::StftSpec stft = dsp::kVideoStft;
  Scalarization scalarization = Scalarization::spherical_log_map;
  Exec exec = Exec::parallel;
};

TimeSeries pulse_signal(const VideoClip& clip, std::span<const Rect> rois, const VitalsConfig& cfg);

/// Heart rate in beats per minute; `rois` are the per-frame HR regions.
dsp::RateEstimate estimate_hr_detail(const VideoClip& clip, std::span<const Rect> rois, const VitalsConfig& cfg);
double estimate_hr(const VideoClip& clip, std::span<const Rect> rois, const VitalsConfig& cfg);

/// Respiration rate in breaths per minute; `rois` are the per-frame chest regions.
dsp::RateEstimate estimate_rr_detail(const VideoClip& clip, std::span<const Rect> rois, const VitalsConfig& cfg);
double estimate_rr(const VideoClip& clip, std::span<const Rect> rois, const VitalsConfig& cfg);

}  // namespace rppg

#pragma once

// Data-parallel inner loops. Every kernel exists twice: a straightforward
// serial reference and an OpenMP version that must produce bit-identical
// output (work is split so that no floating-point reduction is reordered).

#include <array>
#include <span>
#include <vector>

#include "rppg/detect.hpp"
#include "rppg/types.hpp"

namespace rppg::kernels {

struct IntegralPair {
  IntegralImage sum;
  IntegralImage sq;
};

/// Sum of unit RGB vectors over an ROI, plus the number of non-black pixels.
struct UnitSum {
  std::array<double, 3> sum{};
  long count = 0;
};

/// Sum of rounded Rec.601 gray values over an ROI.
struct GraySum {
  double sum = 0.0;
  long count = 0;
};

namespace serial {

IntegralPair integral_images(const GrayFrame& gray);
std::vector<Rect> scan_scale(const Cascade& c, const IntegralPair& ii, double scale, int win_w, int win_h,
                             int step);
std::vector<UnitSum> frame_unit_sums(const VideoClip& clip, std::span<const Rect> rois);
std::vector<GraySum> frame_gray_sums(const VideoClip& clip, std::span<const Rect> rois);

}  // namespace serial

namespace omp {

IntegralPair integral_images(const GrayFrame& gray);
std::vector<Rect> scan_scale(const Cascade& c, const IntegralPair& ii, double scale, int win_w, int win_h,
                             int step);
std::vector<UnitSum> frame_unit_sums(const VideoClip& clip, std::span<const Rect> rois);
std::vector<GraySum> frame_gray_sums(const VideoClip& clip, std::span<const Rect> rois);

}  // namespace omp

inline IntegralPair integral_images(const GrayFrame& g, Exec e) {
  return e == Exec::serial ? serial::integral_images(g) : omp::integral_images(g);
}
inline std::vector<Rect> scan_scale(const Cascade& c, const IntegralPair& ii, double scale, int w, int h, int step,
                                    Exec e) {
  return e == Exec::serial ? serial::scan_scale(c, ii, scale, w, h, step) : omp::scan_scale(c, ii, scale, w, h, step);
}
inline std::vector<UnitSum> frame_unit_sums(const VideoClip& clip, std::span<const Rect> rois, Exec e) {
  return e == Exec::serial ? serial::frame_unit_sums(clip, rois) : omp::frame_unit_sums(clip, rois);
}
inline std::vector<GraySum> frame_gray_sums(const VideoClip& clip, std::span<const Rect> rois, Exec e) {
  return e == Exec::serial ? serial::frame_gray_sums(clip, rois) : omp::frame_gray_sums(clip, rois);
}

// Per-ROI accumulation shared by both variants so a frame's arithmetic is
// identical regardless of which thread runs it.
UnitSum unit_sum(const RgbFrame& frame, const Rect& roi);
GraySum gray_sum(const RgbFrame& frame, const Rect& roi);
void check_rois(const VideoClip& clip, std::span<const Rect> rois);

}  // namespace rppg::kernels

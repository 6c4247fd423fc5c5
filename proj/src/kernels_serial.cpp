#include <cmath>
#include <string>

#include "rppg/kernels.hpp"

namespace rppg::kernels {

void check_rois(const VideoClip& clip, std::span<const Rect> rois) {
  if (rois.size() != clip.frames.size()) {
    throw Error("expected one ROI per frame (" + std::to_string(clip.frames.size()) + "), got " +
                std::to_string(rois.size()));
  }
  for (const auto& r : rois) {
    if (r.empty()) throw Error("empty ROI");
    if (!r.inside(clip.width, clip.height)) throw Error("ROI outside the frame");
  }
}

UnitSum unit_sum(const RgbFrame& frame, const Rect& roi) {
  UnitSum s;
  for (int y = roi.y; y < roi.bottom(); ++y) {
    const float* p = frame.pixel(roi.x, y);
    for (int x = 0; x < roi.w; ++x, p += 3) {
      const double r = p[0], g = p[1], b = p[2];
      const double norm = std::sqrt(r * r + g * g + b * b);
      if (norm == 0.0) continue;
      s.sum[0] += r / norm;
      s.sum[1] += g / norm;
      s.sum[2] += b / norm;
      ++s.count;
    }
  }
  return s;
}

GraySum gray_sum(const RgbFrame& frame, const Rect& roi) {
  GraySum s;
  long acc = 0;
  for (int y = roi.y; y < roi.bottom(); ++y) {
    const float* p = frame.pixel(roi.x, y);
    for (int x = 0; x < roi.w; ++x, p += 3) acc += luma(p[0], p[1], p[2]);
  }
  s.sum = static_cast<double>(acc);
  s.count = roi.area();
  return s;
}

namespace serial {

IntegralPair integral_images(const GrayFrame& gray) {
  IntegralPair out{IntegralImage(gray.width, gray.height), IntegralImage(gray.width, gray.height)};
  for (int y = 0; y < gray.height; ++y) {
    std::int64_t row = 0, row_sq = 0;
    for (int x = 0; x < gray.width; ++x) {
      const std::int64_t v = gray.at(x, y);
      row += v;
      row_sq += v * v;
      out.sum.at(x + 1, y + 1) = out.sum.at(x + 1, y) + row;
      out.sq.at(x + 1, y + 1) = out.sq.at(x + 1, y) + row_sq;
    }
  }
  return out;
}

std::vector<Rect> scan_scale(const Cascade& c, const IntegralPair& ii, double scale, int win_w, int win_h,
                             int step) {
  std::vector<Rect> hits;
  for (int y = 0; y + win_h <= ii.sum.height(); y += step) {
    for (int x = 0; x + win_w <= ii.sum.width(); x += step) {
      const Rect win{x, y, win_w, win_h};
      if (evaluate_window(c, ii.sum, ii.sq, win, scale)) hits.push_back(win);
    }
  }
  return hits;
}

std::vector<UnitSum> frame_unit_sums(const VideoClip& clip, std::span<const Rect> rois) {
  check_rois(clip, rois);
  std::vector<UnitSum> out(clip.frames.size());
  for (std::size_t t = 0; t < clip.frames.size(); ++t) out[t] = unit_sum(clip.frames[t], rois[t]);
  return out;
}

std::vector<GraySum> frame_gray_sums(const VideoClip& clip, std::span<const Rect> rois) {
  check_rois(clip, rois);
  std::vector<GraySum> out(clip.frames.size());
  for (std::size_t t = 0; t < clip.frames.size(); ++t) out[t] = gray_sum(clip.frames[t], rois[t]);
  return out;
}

}  // namespace serial
}  // namespace rppg::kernels

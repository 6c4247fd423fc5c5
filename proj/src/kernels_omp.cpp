#include <omp.h>

#include "rppg/kernels.hpp"

namespace rppg::kernels::omp {

IntegralPair integral_images(const GrayFrame& gray) {
  IntegralPair out{IntegralImage(gray.width, gray.height), IntegralImage(gray.width, gray.height)};
  const int w = gray.width;
  const int h = gray.height;
  // Row prefix sums, then column prefix sums; both passes are exact integer
  // arithmetic so the split cannot change the result.
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    std::int64_t* row = out.sum.row(y + 1);
    std::int64_t* row_sq = out.sq.row(y + 1);
    std::int64_t acc = 0, acc_sq = 0;
    for (int x = 0; x < w; ++x) {
      const std::int64_t v = gray.at(x, y);
      acc += v;
      acc_sq += v * v;
      row[x + 1] = acc;
      row_sq[x + 1] = acc_sq;
    }
  }
#pragma omp parallel for schedule(static)
  for (int x = 1; x <= w; ++x) {
    for (int y = 2; y <= h; ++y) {
      out.sum.at(x, y) += out.sum.at(x, y - 1);
      out.sq.at(x, y) += out.sq.at(x, y - 1);
    }
  }
  return out;
}

std::vector<Rect> scan_scale(const Cascade& c, const IntegralPair& ii, double scale, int win_w, int win_h,
                             int step) {
  const int rows = ii.sum.height() >= win_h ? (ii.sum.height() - win_h) / step + 1 : 0;
  std::vector<std::vector<Rect>> per_row(static_cast<std::size_t>(rows));
#pragma omp parallel for schedule(dynamic, 4)
  for (int r = 0; r < rows; ++r) {
    const int y = r * step;
    auto& hits = per_row[r];
    for (int x = 0; x + win_w <= ii.sum.width(); x += step) {
      const Rect win{x, y, win_w, win_h};
      if (evaluate_window(c, ii.sum, ii.sq, win, scale)) hits.push_back(win);
    }
  }
  std::vector<Rect> out;
  for (auto& row : per_row) out.insert(out.end(), row.begin(), row.end());
  return out;
}

std::vector<UnitSum> frame_unit_sums(const VideoClip& clip, std::span<const Rect> rois) {
  check_rois(clip, rois);
  const long n = static_cast<long>(clip.frames.size());
  std::vector<UnitSum> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (long t = 0; t < n; ++t) out[t] = unit_sum(clip.frames[t], rois[t]);
  return out;
}

std::vector<GraySum> frame_gray_sums(const VideoClip& clip, std::span<const Rect> rois) {
  check_rois(clip, rois);
  const long n = static_cast<long>(clip.frames.size());
  std::vector<GraySum> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (long t = 0; t < n; ++t) out[t] = gray_sum(clip.frames[t], rois[t]);
  return out;
}

}  // namespace rppg::kernels::omp

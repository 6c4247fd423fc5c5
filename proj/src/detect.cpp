#include "rppg/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rppg/ingest.hpp"
#include "rppg/kernels.hpp"

namespace rppg {

IntegralImage integral_image(const GrayFrame& gray) {
  if (gray.width <= 0 || gray.height <= 0) throw Error("integral image of an empty frame");
  return kernels::serial::integral_images(gray).sum;
}

IntegralImage squared_integral_image(const GrayFrame& gray) {
  if (gray.width <= 0 || gray.height <= 0) throw Error("integral image of an empty frame");
  return kernels::serial::integral_images(gray).sq;
}

std::int64_t rect_sum(const IntegralImage& ii, const Rect& r) {
  if (r.w <= 0 || r.h <= 0) throw Error("rect_sum: rect must have positive width and height");
  if (!r.inside(ii.width(), ii.height())) throw Error("rect_sum: rect outside the image");
  return ii.sum_unchecked(r);
}

void validate_cascade(const Cascade& c) {
  if (c.window_w <= 0 || c.window_h <= 0) throw Error("cascade: window size must be positive");
  if (c.stages.empty()) throw Error("cascade: no stages");
  for (std::size_t s = 0; s < c.stages.size(); ++s) {
    const auto& stage = c.stages[s];
    if (stage.trees.empty()) throw Error("cascade: stage " + std::to_string(s) + " has no trees");
    for (const auto& tree : stage.trees) {
      if (tree.feature.empty()) throw Error("cascade: tree without rects in stage " + std::to_string(s));
      for (const auto& wr : tree.feature) {
        if (wr.rect.empty() || !wr.rect.inside(c.window_w, c.window_h)) {
          throw Error("cascade: rect [" + std::to_string(wr.rect.x) + "," + std::to_string(wr.rect.y) + "," +
                      std::to_string(wr.rect.w) + "," + std::to_string(wr.rect.h) + "] outside the " +
                      std::to_string(c.window_w) + "x" + std::to_string(c.window_h) + " window");
        }
      }
    }
  }
}

namespace {

Rect scale_rect(const Rect& r, const Rect& win, double scale) {
  Rect s;
  s.x = win.x + static_cast<int>(std::lround(r.x * scale));
  s.y = win.y + static_cast<int>(std::lround(r.y * scale));
  s.w = std::max(1, static_cast<int>(std::lround(r.w * scale)));
  s.h = std::max(1, static_cast<int>(std::lround(r.h * scale)));
  s.w = std::min(s.w, win.right() - s.x);
  s.h = std::min(s.h, win.bottom() - s.y);
  return s;
}

}  // namespace

bool evaluate_window(const Cascade& c, const IntegralImage& ii, const IntegralImage& ii_sq, const Rect& win,
                     double scale) {
  if (win.empty() || !win.inside(ii.width(), ii.height())) throw Error("evaluate_window: window outside image");
  if (!(scale >= 1.0)) throw Error("evaluate_window: scale must be >= 1");
  const double area = static_cast<double>(win.area());
  const double mean = static_cast<double>(ii.sum_unchecked(win)) / area;
  const double mean_sq = static_cast<double>(ii_sq.sum_unchecked(win)) / area;
  double sigma = std::sqrt(std::max(0.0, mean_sq - mean * mean));
  if (sigma == 0.0) sigma = 1.0;
  const double norm = scale * scale * sigma;

  for (const auto& stage : c.stages) {
    double total = 0.0;
    for (const auto& tree : stage.trees) {
      double response = 0.0;
      for (const auto& wr : tree.feature) {
        response += wr.weight * static_cast<double>(ii.sum_unchecked(scale_rect(wr.rect, win, scale)));
      }
      response /= norm;
      total += response >= tree.threshold ? tree.pass_value : tree.fail_value;
    }
    if (total < stage.threshold) return false;
  }
  return true;
}

namespace {

bool similar(const Rect& a, const Rect& b, double eps) {
  const double delta = eps * (std::min(a.w, b.w) + std::min(a.h, b.h)) * 0.5;
  return std::abs(a.x - b.x) <= delta && std::abs(a.y - b.y) <= delta &&
         std::abs(a.right() - b.right()) <= delta && std::abs(a.bottom() - b.bottom()) <= delta;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

std::vector<FaceBox> group_rects(std::span<const Rect> candidates, int min_neighbors, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("group_rects: eps must lie in (0, 1)");
  const std::size_t n = candidates.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (similar(candidates[i], candidates[j], eps)) {
        const auto a = find_root(parent, i);
        const auto b = find_root(parent, j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  // Clusters are reported in order of their first member.
  std::vector<long> sx(n, 0), sy(n, 0), sw(n, 0), sh(n, 0), count(n, 0);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find_root(parent, i);
    if (count[r] == 0) order.push_back(r);
    sx[r] += candidates[i].x;
    sy[r] += candidates[i].y;
    sw[r] += candidates[i].w;
    sh[r] += candidates[i].h;
    ++count[r];
  }
  std::vector<FaceBox> out;
  for (const auto r : order) {
    if (count[r] < min_neighbors + 1) continue;
    const double k = static_cast<double>(count[r]);
    out.push_back({static_cast<int>(std::lround(sx[r] / k)), static_cast<int>(std::lround(sy[r] / k)),
                   static_cast<int>(std::lround(sw[r] / k)), static_cast<int>(std::lround(sh[r] / k))});
  }
  return out;
}

std::vector<FaceBox> detect_faces(const Cascade& c, const GrayFrame& gray, const DetectParams& params, Exec exec) {
  if (!(params.scale_factor > 1.0)) throw Error("detect_faces: scale factor must exceed 1");
  if (gray.width < c.window_w || gray.height < c.window_h) return {};
  const auto ii = kernels::integral_images(gray, exec);
  std::vector<Rect> candidates;
  for (double scale = 1.0;; scale *= params.scale_factor) {
    const int win_w = static_cast<int>(std::lround(c.window_w * scale));
    const int win_h = static_cast<int>(std::lround(c.window_h * scale));
    if (win_w > gray.width || win_h > gray.height) break;
    if (win_w < params.min_size || win_h < params.min_size) continue;
    const int step = std::max(1, static_cast<int>(std::lround(scale)));
    const auto hits = kernels::scan_scale(c, ii, scale, win_w, win_h, step, exec);
    candidates.insert(candidates.end(), hits.begin(), hits.end());
  }
  auto boxes = group_rects(candidates, params.min_neighbors, params.group_eps);
  std::stable_sort(boxes.begin(), boxes.end(), [](const FaceBox& a, const FaceBox& b) {
    if (a.area() != b.area()) return a.area() > b.area();
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  return boxes;
}

std::vector<FaceBox> hold_last(std::span<const std::optional<FaceBox>> detections) {
  const auto first = std::find_if(detections.begin(), detections.end(), [](const auto& d) { return d.has_value(); });
  if (first == detections.end()) throw Error("no face found in any frame");
  std::vector<FaceBox> out;
  out.reserve(detections.size());
  FaceBox last = **first;
  for (const auto& d : detections) {
    if (d) last = *d;
    out.push_back(last);
  }
  return out;
}

std::vector<FaceBox> track_roi(const VideoClip& clip, const RoiSource& source, Exec exec) {
  if (clip.frames.empty()) throw Error("track_roi: empty clip");
  if (source.manual.has_value() == source.cascade.has_value()) {
    throw Error("track_roi: exactly one ROI source (manual box or cascade) is required");
  }
  if (source.manual) {
    const auto& box = *source.manual;
    if (box.empty() || !box.inside(clip.width, clip.height)) throw Error("manual ROI outside the frame");
    return std::vector<FaceBox>(clip.frames.size(), box);
  }
  std::vector<std::optional<FaceBox>> detections(clip.frames.size());
  for (std::size_t t = 0; t < clip.frames.size(); ++t) {
    const auto boxes = detect_faces(*source.cascade, to_grayscale(clip.frames[t]), source.params, exec);
    if (!boxes.empty()) detections[t] = boxes.front();
  }
  return hold_last(detections);
}

}  // namespace rppg

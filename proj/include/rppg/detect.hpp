#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "rppg/types.hpp"

namespace rppg {

enum class Exec { serial, parallel };

/// Summed-area table with a zero first row and column:
/// at(x, y) = sum of pixels with px < x and py < y.
class IntegralImage {
 public:
  IntegralImage() = default;
  IntegralImage(int width, int height)
      : width_(width), height_(height), data_(static_cast<std::size_t>(width + 1) * (height + 1), 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::int64_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * (width_ + 1) + x]; }
  std::int64_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * (width_ + 1) + x]; }
  std::int64_t* row(int y) { return data_.data() + static_cast<std::size_t>(y) * (width_ + 1); }

  /// Four-lookup sum; caller guarantees bounds.
  std::int64_t sum_unchecked(const Rect& r) const {
    return at(r.x + r.w, r.y + r.h) - at(r.x, r.y + r.h) - at(r.x + r.w, r.y) + at(r.x, r.y);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int64_t> data_;
};

IntegralImage integral_image(const GrayFrame& gray);
IntegralImage squared_integral_image(const GrayFrame& gray);

/// Sum of the pixels inside r. Throws for empty or out-of-bounds rects.
std::int64_t rect_sum(const IntegralImage& ii, const Rect& r);

struct WeightedRect {
  Rect rect;
  double weight = 0.0;
};

struct CascadeTree {
  std::vector<WeightedRect> feature;
  double threshold = 0.0;
  double pass_value = 0.0;  // emitted when the normalized response >= threshold
  double fail_value = 0.0;
};

struct CascadeStage {
  double threshold = 0.0;
  std::vector<CascadeTree> trees;
};

struct Cascade {
  int window_w = 0;
  int window_h = 0;
  std::vector<CascadeStage> stages;
};

/// Throws unless the cascade has stages, trees, and rects inside the window.
void validate_cascade(const Cascade& c);

/// JSON schema:
///   {"window": [w, h],
///    "stages": [{"threshold": t,
///                "trees": [{"rects": [[x, y, w, h, weight], ...],
///                           "threshold": t, "pass": v, "fail": v}]}]}
Cascade load_cascade(const std::filesystem::path& path);
Cascade parse_cascade(const std::string& json_text);
void save_cascade(const std::filesystem::path& path, const Cascade& c);
std::string cascade_to_json(const Cascade& c);

/// Converts an OpenCV haarcascade XML (stump-based HAAR, upright features)
/// into the JSON cascade model.
Cascade convert_opencv_cascade(const std::filesystem::path& xml_path);

/// Runs every stage on one window. Each tree compares
/// sum(weight · rect_sum) / (scale² · σ) against its threshold, σ being the
/// window's pixel standard deviation (1 when the window is flat).
bool evaluate_window(const Cascade& c, const IntegralImage& ii, const IntegralImage& ii_sq, const Rect& win,
                     double scale);

struct DetectParams {
  double scale_factor = 1.1;
  int min_neighbors = 3;
  int min_size = 0;
  double group_eps = 0.2;
};

/// Clusters near-identical rectangles (transitive closure of the similarity
/// relation) and returns the coordinate-wise mean of each cluster holding at
/// least min_neighbors + 1 members.
std::vector<FaceBox> group_rects(std::span<const Rect> candidates, int min_neighbors, double eps);

/// Multiscale sliding-window detection; boxes sorted by descending area.
std::vector<FaceBox> detect_faces(const Cascade& c, const GrayFrame& gray, const DetectParams& params,
                                  Exec exec = Exec::parallel);

/// Where the face box comes from: a fixed manual rectangle or a cascade.
struct RoiSource {
  std::optional<Rect> manual;
  std::optional<Cascade> cascade;
  DetectParams params;

  static RoiSource fixed(Rect r) { return {r, std::nullopt, {}}; }
  static RoiSource detector(Cascade c, DetectParams p = {}) { return {std::nullopt, std::move(c), p}; }
};

/// One face box per frame. Cascade mode keeps the largest detection and holds
/// the last successful box through failed frames; leading failures take the
/// first successful box. Throws when no frame yields a face.
std::vector<FaceBox> track_roi(const VideoClip& clip, const RoiSource& source, Exec exec = Exec::parallel);

/// Folds per-frame detections (nullopt = miss) into the hold-last sequence.
std::vector<FaceBox> hold_last(std::span<const std::optional<FaceBox>> detections);

}  // namespace rppg

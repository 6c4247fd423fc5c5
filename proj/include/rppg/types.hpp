#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rppg {

/// Raised for every contract violation and data error in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned pixel rectangle, top-left origin.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long area() const { return static_cast<long>(w) * h; }
  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool empty() const { return w <= 0 || h <= 0; }
  bool inside(int width, int height) const {
    return x >= 0 && y >= 0 && w >= 0 && h >= 0 && x + w <= width && y + h <= height;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

using FaceBox = Rect;

/// Interleaved RGB frame with channel values in [0, 255]. Samples are kept as
/// float so the synthetic generator can produce unquantized frames; anything
/// read from disk holds integral values.
struct RgbFrame {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  RgbFrame() = default;
  RgbFrame(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  float* pixel(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const float* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

struct GrayFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayFrame() = default;
  GrayFrame(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct VideoClip {
  int width = 0;
  int height = 0;
  double fps = 0.0;
  std::vector<RgbFrame> frames;

  std::size_t size() const { return frames.size(); }
  double duration() const { return static_cast<double>(frames.size()) / fps; }
};

/// Uniformly sampled scalar signal.
struct TimeSeries {
  std::vector<double> samples;
  double sample_rate = 0.0;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Rec.601 luma, rounded and clamped.
inline std::uint8_t luma(float r, float g, float b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  const long v = static_cast<long>(y + 0.5);
  return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
}

}  // namespace rppg

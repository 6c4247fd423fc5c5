#include "rppg/vitals.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rppg/kernels.hpp"

namespace rppg {

Rect hr_roi(const FaceBox& face) {
  if (face.empty()) throw Error("hr_roi: empty face box");
  const int top_half = face.h / 2;
  return {face.x, face.y + top_half, face.w, face.h - top_half};
}

Rect rr_roi(const FaceBox& face, int frame_h, int frame_w) {
  if (face.empty()) throw Error("rr_roi: empty face box");
  const int bottom = face.bottom();
  if (bottom >= frame_h) throw Error("rr_roi: face reaches the frame bottom, no chest region left");
  return {0, std::max(0, bottom), frame_w, frame_h - std::max(0, bottom)};
}

Rect clamp_rect(const Rect& r, int frame_w, int frame_h) {
  const int x0 = std::clamp(r.x, 0, frame_w);
  const int y0 = std::clamp(r.y, 0, frame_h);
  const int x1 = std::clamp(r.right(), 0, frame_w);
  const int y1 = std::clamp(r.bottom(), 0, frame_h);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

namespace {

using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(dot(v, v));
  return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace

PulseTrace spherical_mean_trace(const VideoClip& clip, std::span<const Rect> rois, Exec exec) {
  const auto sums = kernels::frame_unit_sums(clip, rois, exec);
  PulseTrace trace;
  trace.unit_means.reserve(sums.size());
  Vec3 total{0.0, 0.0, 0.0};
  for (std::size_t t = 0; t < sums.size(); ++t) {
    if (sums[t].count == 0) throw Error("ROI is entirely black in frame " + std::to_string(t));
    const auto m = normalized(sums[t].sum);
    trace.unit_means.push_back(m);
    for (int i = 0; i < 3; ++i) total[i] += m[i];
  }
  const Vec3 mu = normalized(total);

  // Orthonormal tangent basis at mu, seeded from the axis least aligned with it.
  Vec3 axis{0.0, 0.0, 0.0};
  int least = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(mu[i]) < std::abs(mu[least])) least = i;
  }
  axis[least] = 1.0;
  const Vec3 e1 = normalized(cross(mu, axis));
  const Vec3 e2 = cross(mu, e1);

  const std::size_t n = trace.unit_means.size();
  std::vector<double> u(n), v(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& m = trace.unit_means[t];
    const double c = dot(m, mu);
    const Vec3 perp{m[0] - c * mu[0], m[1] - c * mu[1], m[2] - c * mu[2]};
    const double s = std::sqrt(dot(perp, perp));
    const double scale = s > 0.0 ? std::atan2(s, c) / s : 0.0;
    u[t] = scale * dot(perp, e1);
    v[t] = scale * dot(perp, e2);
  }
  double mu_u = 0.0, mu_v = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    mu_u += u[t];
    mu_v += v[t];
  }
  mu_u /= static_cast<double>(n);
  mu_v /= static_cast<double>(n);
  double suu = 0.0, svv = 0.0, suv = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    u[t] -= mu_u;
    v[t] -= mu_v;
    suu += u[t] * u[t];
    svv += v[t] * v[t];
    suv += u[t] * v[t];
  }

  trace.scalar.sample_rate = clip.fps;
  trace.scalar.samples.assign(n, 0.0);
  if (suu + svv <= 1e-300) return trace;

  // Principal eigenvector of the 2x2 tangent covariance.
  const double half_diff = 0.5 * (suu - svv);
  const double lambda = 0.5 * (suu + svv) + std::sqrt(half_diff * half_diff + suv * suv);
  double pu = 1.0, pv = 0.0;
  if (suv != 0.0) {
    pu = lambda - svv;
    pv = suv;
    const double len = std::hypot(pu, pv);
    pu /= len;
    pv /= len;
  } else if (svv > suu) {
    pu = 0.0;
    pv = 1.0;
  }
  for (std::size_t t = 0; t < n; ++t) trace.scalar.samples[t] = pu * u[t] + pv * v[t];
  const auto first = std::find_if(trace.scalar.samples.begin(), trace.scalar.samples.end(),
                                  [](double x) { return x != 0.0; });
  if (first != trace.scalar.samples.end() && *first < 0.0) {
    for (auto& x : trace.scalar.samples) x = -x;
  }
  return trace;
}

TimeSeries green_chromaticity_trace(const VideoClip& clip, std::span<const Rect> rois) {
  kernels::check_rois(clip, rois);
  TimeSeries out{std::vector<double>(clip.frames.size()), clip.fps};
  for (std::size_t t = 0; t < clip.frames.size(); ++t) {
    const auto& roi = rois[t];
    double acc = 0.0;
    long count = 0;
    for (int y = roi.y; y < roi.bottom(); ++y) {
      const float* p = clip.frames[t].pixel(roi.x, y);
      for (int x = 0; x < roi.w; ++x, p += 3) {
        const double total = static_cast<double>(p[0]) + p[1] + p[2];
        if (total <= 0.0) continue;
        acc += p[1] / total;
        ++count;
      }
    }
    if (count == 0) throw Error("ROI is entirely black in frame " + std::to_string(t));
    out.samples[t] = acc / static_cast<double>(count);
  }
  return out;
}

TimeSeries mean_gray_trace(const VideoClip& clip, std::span<const Rect> rois, Exec exec) {
  const auto sums = kernels::frame_gray_sums(clip, rois, exec);
  TimeSeries out{std::vector<double>(sums.size()), clip.fps};
  for (std::size_t t = 0; t < sums.size(); ++t) out.samples[t] = sums[t].sum / static_cast<double>(sums[t].count);
  return out;
}

TimeSeries pulse_signal(const VideoClip& clip, std::span<const Rect> rois, const VitalsConfig& cfg) {
  if (cfg.scalarization == Scalarization::green_chromaticity) return green_chromaticity_trace(clip, rois);
  return spherical_mean_trace(clip, rois, cfg.exec).scalar;
}

dsp::RateEstimate estimate_hr_detail(const VideoClip& clip, std::span<const Rect> rois, const VitalsConfig& cfg) {
  return dsp::estimate_rate(pulse_signal(clip, rois, cfg), cfg.hr_band, cfg.filter_order, cfg.stft);
}

double estimate_hr(const VideoClip& clip, std::span<const Rect> rois, const VitalsConfig& cfg) {
  return estimate_hr_detail(clip, rois, cfg).per_minute;
}

dsp::RateEstimate estimate_rr_detail(const VideoClip& clip, std::span<const Rect> rois, const VitalsConfig& cfg) {
  return dsp::estimate_rate(mean_gray_trace(clip, rois, cfg.exec), cfg.rr_band, cfg.filter_order, cfg.stft);
}

double estimate_rr(const VideoClip& clip, std::span<const Rect> rois, const VitalsConfig& cfg) {
  return estimate_rr_detail(clip, rois, cfg).per_minute;
}

}  // namespace rppg

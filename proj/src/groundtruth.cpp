#include "rppg/groundtruth.hpp"

#include <cmath>
#include <string>

namespace rppg {

PeakList ecg_peaks(const TimeSeries& ecg, const GroundTruthConfig& cfg) {
  if (!(ecg.sample_rate > 0.0)) throw Error("ECG sample rate must be positive");
  if (static_cast<double>(ecg.size()) < 2.0 * ecg.sample_rate) throw Error("ECG segment shorter than 2 s");
  const auto y = dsp::detrend(ecg, cfg.detrend_s);
  const std::size_t n = y.size();
  std::vector<double> d(n - 1), mag(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    d[i] = y.samples[i + 1] - y.samples[i];
    mag[i] = std::abs(d[i]);
  }
  const double theta = cfg.threshold_ratio * dsp::percentile(mag, cfg.threshold_percentile);
  const long refractory = std::lround(cfg.refractory_s * ecg.sample_rate);

  PeakList peaks;
  peaks.sample_rate = ecg.sample_rate;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > theta)) continue;
    const bool left_ok = i == 0 || d[i] >= d[i - 1];
    const bool right_ok = i + 1 == d.size() || d[i] > d[i + 1];
    if (!left_ok || !right_ok) continue;
    const long idx = static_cast<long>(i);
    if (!peaks.indices.empty() && idx - peaks.indices.back() < refractory) {
      if (d[i] > d[static_cast<std::size_t>(peaks.indices.back())]) peaks.indices.back() = idx;
      continue;
    }
    peaks.indices.push_back(idx);
  }
  if (peaks.indices.empty()) throw Error("no ECG peaks found");
  for (const long idx : peaks.indices) {
    const auto i = static_cast<std::size_t>(idx);
    double delta = 0.0;
    if (i > 0 && i + 1 < d.size()) {
      const double denom = d[i - 1] - 2.0 * d[i] + d[i + 1];
      if (denom < 0.0) delta = 0.5 * (d[i - 1] - d[i + 1]) / denom;
    }
    peaks.refined.push_back(static_cast<double>(idx) + delta);
  }
  return peaks;
}

TimeSeries ppg_like(const PeakList& peaks, double duration) {
  if (peaks.indices.size() < 3) {
    throw Error("need at least 3 peaks for the pulse reconstruction, got " + std::to_string(peaks.indices.size()));
  }
  std::vector<double> t, v;
  for (std::size_t i = 0; i < peaks.indices.size(); ++i) {
    const double ti = peaks.time(i);
    if (i > 0) {
      const double prev = peaks.time(i - 1);
      t.push_back(0.5 * (prev + ti));
      v.push_back(-1.0);
    }
    t.push_back(ti);
    v.push_back(1.0);
  }
  return dsp::cubic_spline(t, v, peaks.sample_rate, duration);
}

double interval_rate(const PeakList& peaks) {
  if (peaks.indices.size() < 2) throw Error("need at least 2 peaks for an interval rate");
  std::vector<double> ipi;
  for (std::size_t i = 1; i < peaks.indices.size(); ++i) {
    ipi.push_back(peaks.time(i) - peaks.time(i - 1));
  }
  return 60.0 / dsp::median(ipi);
}

GroundTruth gt_hr_detail(const TimeSeries& ecg, const GroundTruthConfig& cfg) {
  const auto peaks = ecg_peaks(ecg, cfg);
  const auto pulse = ppg_like(peaks, ecg.duration());
  GroundTruth gt;
  gt.estimate = dsp::estimate_rate(pulse, cfg.hr_band, cfg.filter_order, cfg.stft);
  const double by_interval = interval_rate(peaks) / 60.0;
  gt.out_of_band = gt.estimate.low_confidence() || by_interval < cfg.hr_band.low_hz ||
                   by_interval > cfg.hr_band.high_hz;
  return gt;
}

double gt_hr(const TimeSeries& ecg, const GroundTruthConfig& cfg) { return gt_hr_detail(ecg, cfg).estimate.per_minute; }

GroundTruth gt_rr_detail(const TimeSeries& resp, const GroundTruthConfig& cfg) {
  GroundTruth gt;
  gt.estimate = dsp::estimate_rate(resp, cfg.rr_band, cfg.filter_order, cfg.stft);
  gt.out_of_band = gt.estimate.low_confidence();
  return gt;
}

double gt_rr(const TimeSeries& resp, const GroundTruthConfig& cfg) {
  return gt_rr_detail(resp, cfg).estimate.per_minute;
}

}  // namespace rppg

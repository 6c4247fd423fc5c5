#pragma once

#include <vector>

#include "rppg/dsp.hpp"
#include "rppg/types.hpp"

namespace rppg {

struct PeakList {
  std::vector<long> indices;  // strictly increasing sample positions
  std::vector<double> refined;  // sub-sample positions, parallel to indices; empty = use indices
  double sample_rate = 0.0;

  double position(std::size_t i) const { return refined.empty() ? static_cast<double>(indices[i]) : refined[i]; }
  double time(std::size_t i) const { return position(i) / sample_rate; }
};

struct GroundTruthConfig {
  double detrend_s = 0.5;
  double threshold_ratio = 0.5;        // of the percentile below
  double threshold_percentile = 95.0;  // of |first difference|
  double refractory_s = 0.25;
  dsp::Band hr_band = dsp::kHeartBand;
  dsp::Band rr_band = dsp::kRespBand;
  int filter_order = 2;
  dsp::StftSpec stft = dsp::kPhysioStft;
};

/// Beat locations: maxima of the first difference of the baseline-corrected
/// ECG above a percentile-scaled threshold, thinned by a refractory period
/// that keeps the larger of two close candidates. Each maximum is refined to
/// a sub-sample position by a parabola through its neighbours.
PeakList ecg_peaks(const TimeSeries& ecg, const GroundTruthConfig& cfg = {});

/// Natural spline through +1 at every peak and −1 half way between peaks,
/// sampled at the peak list's rate for `duration` seconds.
TimeSeries ppg_like(const PeakList& peaks, double duration);

/// 60 / median inter-peak interval.
double interval_rate(const PeakList& peaks);

struct GroundTruth {
  dsp::RateEstimate estimate;
  bool out_of_band = false;
};

GroundTruth gt_hr_detail(const TimeSeries& ecg, const GroundTruthConfig& cfg = {});
double gt_hr(const TimeSeries& ecg, const GroundTruthConfig& cfg = {});

GroundTruth gt_rr_detail(const TimeSeries& resp, const GroundTruthConfig& cfg = {});
double gt_rr(const TimeSeries& resp, const GroundTruthConfig& cfg = {});

}  // namespace rppg

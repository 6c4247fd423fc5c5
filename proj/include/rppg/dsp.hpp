#pragma once

#include <span>
#include <vector>

#include "rppg/types.hpp"

namespace rppg::dsp {

struct Band {
  double low_hz = 0.0;
  double high_hz = 0.0;
};

inline constexpr Band kHeartBand{0.7, 2.5};
inline constexpr Band kRespBand{0.2, 0.5};

struct BandpassSpec {
  double low_hz = 0.0;
  double high_hz = 0.0;
  int order = 2;  // per direction
};

struct StftSpec {
  int window_len = 256;
  int hop = 30;
  int fft_size = 4096;
};

// Parameter sets for 30 Hz video traces and 128 Hz physiological channels.
inline constexpr StftSpec kVideoStft{256, 30, 4096};
inline constexpr StftSpec kPhysioStft{1024, 128, 8192};

/// Biquad in direct form II transposed, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Removes a centered moving mean of `window_s` seconds (truncated at the
/// edges).
TimeSeries detrend(const TimeSeries& x, double window_s);

/// Butterworth bandpass of the given prototype order via the bilinear
/// transform, as `order` second-order sections. Unit gain at the band center.
std::vector<Biquad> design_bandpass(const BandpassSpec& spec, double sample_rate);

/// |H(e^{jw})| of a section cascade at `freq_hz`.
double magnitude_response(std::span<const Biquad> sos, double freq_hz, double sample_rate);

/// Single causal pass with the given initial state scale (see sos_steady_state).
std::vector<double> sos_filter(std::span<const Biquad> sos, std::span<const double> x, bool steady_start);

/// Number of odd-reflected samples added to each end before filtering.
inline int bandpass_padding(int order) { return 3 * (2 * order + 1); }

/// Zero-phase Butterworth bandpass: odd-reflection padding, forward and
/// backward passes starting from the step-response steady state, padding
/// stripped.
TimeSeries bandpass(const TimeSeries& x, const BandpassSpec& spec);

struct WindowPeak {
  double freq_hz = 0.0;
  bool at_edge = false;  // argmax sat on the first or last in-band bin
};

/// Per-window spectral peaks of Hann-windowed, zero-padded segments, searched
/// inside `band` and refined by a parabola through the log magnitudes.
///
/// A signal without in-band content (e.g. DC only) still yields one value per
/// window, namely the largest bin of numerical noise; callers must check the
/// band power fraction before trusting the result.
std::vector<WindowPeak> stft_peaks(const TimeSeries& x, const StftSpec& spec, Band band);
std::vector<double> stft_peak_freqs(const TimeSeries& x, const StftSpec& spec, Band band);

/// Median, averaging the two central values for even counts.
double median(std::vector<double> values);

/// Median frequency in Hz scaled to events per minute.
double median_rate(std::span<const double> freqs_hz);

/// Linear-interpolated percentile, p in [0, 100].
double percentile(std::vector<double> values, double p);

class NaturalSpline {
 public:
  NaturalSpline(std::vector<double> t, std::vector<double> v);
  /// Clamped to the end knot values outside [t_first, t_last].
  double operator()(double t) const;

 private:
  std::vector<double> t_, v_, m_;  // m_: second derivatives at the knots
};

/// Natural cubic spline through the knots evaluated on the grid i/rate for
/// i in [0, round(duration·rate)).
TimeSeries cubic_spline(std::span<const double> knots_t, std::span<const double> knots_v, double query_rate,
                        double duration);

struct RateEstimate {
  double per_minute = 0.0;
  double edge_fraction = 0.0;  // share of windows whose peak sat on a band edge
  double band_fraction = 0.0;  // rms(filtered) / rms(input − mean)
  std::size_t windows = 0;

  /// Truth likely outside the band, or no in-band content at all.
  bool low_confidence() const;
};

inline constexpr double kMinBandFraction = 0.25;

/// bandpass → per-window spectral peaks → median, with diagnostics.
RateEstimate estimate_rate(const TimeSeries& x, Band band, int order, const StftSpec& stft);
double dominant_rate(const TimeSeries& x, Band band, int order, const StftSpec& stft);

}  // namespace rppg::dsp

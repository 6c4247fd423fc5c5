#include "rppg/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>

namespace rppg::dsp {

namespace {

using cplx = std::complex<double>;

void check_series(const TimeSeries& x) {
  if (!(x.sample_rate > 0.0)) throw Error("time series sample rate must be positive");
}

double rms_centered(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace

TimeSeries detrend(const TimeSeries& x, double window_s) {
  check_series(x);
  const long len = std::lround(window_s * x.sample_rate);
  if (len < 3) throw Error("detrend window must span at least 3 samples");
  const long n = static_cast<long>(x.size());
  const long half = len / 2;
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (long i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x.samples[i];
  TimeSeries y{std::vector<double>(x.size()), x.sample_rate};
  for (long i = 0; i < n; ++i) {
    const long lo = std::max(0L, i - half);
    const long hi = std::min(n, i + half + 1);
    y.samples[i] = x.samples[i] - (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return y;
}

std::vector<Biquad> design_bandpass(const BandpassSpec& spec, double fs) {
  if (spec.order < 1 || spec.order > 8) throw Error("bandpass order must be in 1..8");
  if (!(spec.low_hz > 0.0 && spec.low_hz < spec.high_hz && spec.high_hz < fs / 2.0)) {
    throw Error("band " + std::to_string(spec.low_hz) + "-" + std::to_string(spec.high_hz) +
                " Hz is infeasible at " + std::to_string(fs) + " Hz");
  }
  const double pi = std::numbers::pi;
  const double fs2 = 2.0 * fs;
  const double wl = fs2 * std::tan(pi * spec.low_hz / fs);
  const double wh = fs2 * std::tan(pi * spec.high_hz / fs);
  const double bw = wh - wl;
  const double w0 = std::sqrt(wl * wh);

  const int n = spec.order;
  std::vector<cplx> poles;
  for (int k = 0; k < n; ++k) {
    const cplx p = std::polar(1.0, pi * (2.0 * k + n + 1) / (2.0 * n));
    const cplx h = p * bw / 2.0;
    const cplx r = std::sqrt(h * h - w0 * w0);
    for (const cplx s : {h + r, h - r}) poles.push_back((fs2 + s) / (fs2 - s));
  }

  // Conjugate pairs first, then any real poles two at a time.
  std::vector<std::pair<cplx, cplx>> pairs;
  std::vector<double> reals;
  for (const auto& z : poles) {
    if (std::abs(z.imag()) <= 1e-12 * std::abs(z)) {
      reals.push_back(z.real());
    } else if (z.imag() > 0.0) {
      pairs.emplace_back(z, std::conj(z));
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) pairs.emplace_back(reals[i], reals[i + 1]);
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return std::abs(a.first) < std::abs(b.first); });

  std::vector<Biquad> sos;
  for (const auto& [p1, p2] : pairs) {
    Biquad q;
    q.b0 = 1.0;
    q.b1 = 0.0;
    q.b2 = -1.0;  // one zero at z = 1, one at z = -1
    q.a1 = -(p1 + p2).real();
    q.a2 = (p1 * p2).real();
    sos.push_back(q);
  }
  const double center = 2.0 * std::atan(w0 / fs2) * fs / (2.0 * pi);
  const double g = magnitude_response(sos, center, fs);
  sos.front().b0 /= g;
  sos.front().b2 /= g;
  return sos;
}

double magnitude_response(std::span<const Biquad> sos, double freq_hz, double fs) {
  const double w = 2.0 * std::numbers::pi * freq_hz / fs;
  const cplx z1 = std::polar(1.0, -w);
  const cplx z2 = z1 * z1;
  cplx h = 1.0;
  for (const auto& q : sos) h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
  return std::abs(h);
}

std::vector<double> sos_filter(std::span<const Biquad> sos, std::span<const double> x, bool steady_start) {
  std::vector<double> y(x.begin(), x.end());
  if (y.empty()) return y;
  // Each section starts in the steady state of a step at the first input.
  double level = steady_start ? y.front() : 0.0;
  for (const auto& q : sos) {
    const double dc = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    double z1 = level * (q.b1 + q.b2 - (q.a1 + q.a2) * dc);
    double z2 = level * (q.b2 - q.a2 * dc);
    for (double& v : y) {
      const double in = v;
      const double out = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * out + z2;
      z2 = q.b2 * in - q.a2 * out;
      v = out;
    }
    level *= dc;
  }
  return y;
}

TimeSeries bandpass(const TimeSeries& x, const BandpassSpec& spec) {
  check_series(x);
  const auto sos = design_bandpass(spec, x.sample_rate);
  const long pad = bandpass_padding(spec.order);
  const long n = static_cast<long>(x.size());
  if (n <= 3 * pad) {
    throw Error("signal of " + std::to_string(n) + " samples is too short for bandpass padding of " +
                std::to_string(pad));
  }
  const auto& s = x.samples;
  std::vector<double> ext;
  ext.reserve(static_cast<std::size_t>(n + 2 * pad));
  for (long i = pad; i >= 1; --i) ext.push_back(2.0 * s.front() - s[i]);
  ext.insert(ext.end(), s.begin(), s.end());
  for (long i = n - 2; i >= n - 1 - pad; --i) ext.push_back(2.0 * s.back() - s[i]);

  auto fwd = sos_filter(sos, ext, true);
  std::reverse(fwd.begin(), fwd.end());
  auto bwd = sos_filter(sos, fwd, true);
  std::reverse(bwd.begin(), bwd.end());
  return TimeSeries{std::vector<double>(bwd.begin() + pad, bwd.end() - pad), x.sample_rate};
}

namespace {

// fftw planning is not thread-safe; execution on distinct buffers is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }
  double magnitude(int k) const { return std::hypot(out_[k][0], out_[k][1]); }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

}  // namespace

std::vector<WindowPeak> stft_peaks(const TimeSeries& x, const StftSpec& spec, Band band) {
  check_series(x);
  if (spec.window_len < 2 || spec.hop < 1 || spec.window_len > spec.fft_size ||
      (spec.fft_size & (spec.fft_size - 1)) != 0) {
    throw Error("invalid STFT parameters");
  }
  if (static_cast<long>(x.size()) < spec.window_len) {
    throw Error("signal of " + std::to_string(x.size()) + " samples is shorter than the STFT window of " +
                std::to_string(spec.window_len));
  }
  const double fs = x.sample_rate;
  const int n = spec.fft_size;
  const int k_lo = std::max(1, static_cast<int>(std::ceil(band.low_hz * n / fs)));
  const int k_hi = std::min(n / 2, static_cast<int>(std::floor(band.high_hz * n / fs)));
  if (k_lo > k_hi) throw Error("search band contains no FFT bins");

  const int len = spec.window_len;
  std::vector<double> hann(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (len - 1));
  }

  RealFft fft(n);
  std::vector<double> mag(static_cast<std::size_t>(k_hi - k_lo + 1));
  std::vector<WindowPeak> peaks;
  const long windows = (static_cast<long>(x.size()) - len) / spec.hop + 1;
  for (long w = 0; w < windows; ++w) {
    const double* seg = x.samples.data() + w * spec.hop;
    double* in = fft.input();
    for (int i = 0; i < len; ++i) in[i] = seg[i] * hann[i];
    std::fill(in + len, in + n, 0.0);
    fft.execute();
    for (int k = k_lo; k <= k_hi; ++k) mag[k - k_lo] = fft.magnitude(k);
    const auto it = std::max_element(mag.begin(), mag.end());
    const int k = k_lo + static_cast<int>(it - mag.begin());
    double delta = 0.0;
    const bool edge = (k == k_lo || k == k_hi);
    if (!edge) {
      const double a = mag[k - 1 - k_lo];
      const double b = mag[k - k_lo];
      const double c = mag[k + 1 - k_lo];
      if (a > 0.0 && b > 0.0 && c > 0.0) {
        // Log-ratios to the peak bin.
        const double la = std::log(a / b), lc = std::log(c / b);
        const double denom = la + lc;
        if (denom < 0.0) delta = 0.5 * (la - lc) / denom;
      }
    }
    peaks.push_back({(k + delta) * fs / n, edge});
  }
  return peaks;
}

std::vector<double> stft_peak_freqs(const TimeSeries& x, const StftSpec& spec, Band band) {
  const auto peaks = stft_peaks(x, spec, band);
  std::vector<double> out;
  out.reserve(peaks.size());
  for (const auto& p : peaks) out.push_back(p.freq_hz);
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double median_rate(std::span<const double> freqs_hz) {
  if (freqs_hz.empty()) throw Error("no spectral peaks to aggregate");
  return median(std::vector<double>(freqs_hz.begin(), freqs_hz.end())) * 60.0;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw Error("percentile of an empty list");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * std::clamp(p, 0.0, 100.0) / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

NaturalSpline::NaturalSpline(std::vector<double> t, std::vector<double> v)
    : t_(std::move(t)), v_(std::move(v)) {
  if (t_.size() != v_.size()) throw Error("spline knot arrays differ in length");
  if (t_.size() < 3) throw Error("spline needs at least 3 knots");
  for (std::size_t i = 1; i < t_.size(); ++i) {
    if (!(t_[i] > t_[i - 1])) throw Error("spline knot times must be strictly increasing");
  }
  const std::size_t n = t_.size();
  m_.assign(n, 0.0);
  // Thomas algorithm on the interior equations; m_0 = m_{n-1} = 0.
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t_[i] - t_[i - 1];
    const double h1 = t_[i + 1] - t_[i];
    const double a = h0;
    const double b = 2.0 * (h0 + h1);
    const double r = 6.0 * ((v_[i + 1] - v_[i]) / h1 - (v_[i] - v_[i - 1]) / h0);
    const double denom = b - a * c[i - 1];
    c[i] = h1 / denom;
    d[i] = (r - a * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m_[i] = d[i] - c[i] * m_[i + 1];
  }
}

double NaturalSpline::operator()(double t) const {
  if (t <= t_.front()) return v_.front();
  if (t >= t_.back()) return v_.back();
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
  const double h = t_[i + 1] - t_[i];
  const double a = (t_[i + 1] - t) / h;
  const double b = (t - t_[i]) / h;
  return a * v_[i] + b * v_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

TimeSeries cubic_spline(std::span<const double> knots_t, std::span<const double> knots_v, double query_rate,
                        double duration) {
  if (!(query_rate > 0.0)) throw Error("spline query rate must be positive");
  const NaturalSpline spline({knots_t.begin(), knots_t.end()}, {knots_v.begin(), knots_v.end()});
  const long n = std::max(0L, std::lround(duration * query_rate));
  TimeSeries out{std::vector<double>(static_cast<std::size_t>(n)), query_rate};
  for (long i = 0; i < n; ++i) out.samples[i] = spline(static_cast<double>(i) / query_rate);
  return out;
}

bool RateEstimate::low_confidence() const {
  return band_fraction < kMinBandFraction || edge_fraction > 0.5;
}

RateEstimate estimate_rate(const TimeSeries& x, Band band, int order, const StftSpec& stft) {
  const auto filtered = bandpass(x, {band.low_hz, band.high_hz, order});
  const auto peaks = stft_peaks(filtered, stft, band);
  std::vector<double> freqs;
  std::size_t edges = 0;
  for (const auto& p : peaks) {
    freqs.push_back(p.freq_hz);
    edges += p.at_edge ? 1 : 0;
  }
  RateEstimate r;
  r.per_minute = median_rate(freqs);
  r.windows = peaks.size();
  r.edge_fraction = static_cast<double>(edges) / static_cast<double>(peaks.size());
  const double total = rms_centered(x.samples);
  r.band_fraction = total > 0.0 ? rms_centered(filtered.samples) / total : 0.0;
  return r;
}

double dominant_rate(const TimeSeries& x, Band band, int order, const StftSpec& stft) {
  return estimate_rate(x, band, order, stft).per_minute;
}

}  // namespace rppg::dsp

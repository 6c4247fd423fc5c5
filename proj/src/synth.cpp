#include "rppg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "rppg/text.hpp"

namespace fs = std::filesystem;

namespace rppg::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

void box_blur(RgbFrame& f, int radius) {
  if (radius <= 0) return;
  const int w = f.width, h = f.height;
  std::vector<float> tmp(f.data.size());
  // Horizontal then vertical running means, edges clamped.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) acc += f.pixel(std::clamp(x + k, 0, w - 1), y)[c];
        tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = static_cast<float>(acc / (2 * radius + 1));
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += tmp[(static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x) * 3 + c];
        }
        f.pixel(x, y)[c] = static_cast<float>(acc / (2 * radius + 1));
      }
    }
  }
}

}  // namespace

SceneGeometry scene_geometry(int width, int height, double chest_amp) {
  SceneGeometry g;
  const int face = height / 3;
  g.face = {(width - face) / 2, height / 8, face, face};
  const int below = height - g.face.bottom();
  g.chest_edge_y = g.face.bottom() + 0.4 * below;
  g.chest_x0 = width / 8;
  g.chest_x1 = width - width / 8;
  if (face < 2 || g.face.w > width || g.chest_edge_y - chest_amp < g.face.bottom() + 1.0 ||
      g.chest_edge_y + chest_amp > height - 1.0) {
    throw Error("face and chest geometry do not fit a " + std::to_string(width) + "x" + std::to_string(height) +
                " frame");
  }
  return g;
}

void validate(const SynthConfig& cfg) {
  if (cfg.width <= 0 || cfg.height <= 0) throw Error("synth: frame size must be positive");
  if (!(cfg.fps > 0.0)) throw Error("synth: fps must be positive");
  if (!(cfg.duration > 0.0)) throw Error("synth: duration must be positive");
  if (!(cfg.hr_bpm >= 30.0 && cfg.hr_bpm <= 220.0)) throw Error("synth: hr_bpm outside 30..220");
  if (!(cfg.rr_brpm >= 6.0 && cfg.rr_brpm <= 60.0)) throw Error("synth: rr_brpm outside 6..60");
  if (!(cfg.tone > 0.0 && cfg.tone <= 1.0)) throw Error("synth: tone must lie in (0, 1]");
  if (!(cfg.pulse_amp >= 0.0 && cfg.pulse_amp < 0.5)) throw Error("synth: pulse_amp must lie in [0, 0.5)");
  if (!(cfg.chest_amp >= 0.0)) throw Error("synth: chest_amp must be non-negative");
  if (!(cfg.noise_sigma >= 0.0)) throw Error("synth: noise_sigma must be non-negative");
  if (cfg.blur_radius < 0) throw Error("synth: blur_radius must be non-negative");
}

std::pair<VideoClip, SynthTruth> synth_clip(const SynthConfig& cfg) {
  validate(cfg);
  const auto geo = scene_geometry(cfg.width, cfg.height, cfg.chest_amp);
  const long n = std::lround(cfg.duration * cfg.fps);
  if (n < 1) throw Error("synth: duration shorter than one frame");

  const float skin[3] = {static_cast<float>(kSkinRgb[0] * cfg.tone), static_cast<float>(kSkinRgb[1] * cfg.tone),
                         static_cast<float>(kSkinRgb[2] * cfg.tone)};
  const double hr_hz = cfg.hr_bpm / 60.0;
  const double rr_hz = cfg.rr_brpm / 60.0;

  VideoClip clip;
  clip.width = cfg.width;
  clip.height = cfg.height;
  clip.fps = cfg.fps;
  clip.frames.resize(static_cast<std::size_t>(n));

#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / cfg.fps;
    RgbFrame f(cfg.width, cfg.height, kBackgroundGray);

    const double edge = geo.chest_edge_y + cfg.chest_amp * std::sin(kTwoPi * rr_hz * t);
    for (int y = 0; y < cfg.height; ++y) {
      const double cover = std::clamp(y + 1.0 - edge, 0.0, 1.0);
      if (cover <= 0.0) continue;
      for (int x = geo.chest_x0; x < geo.chest_x1; ++x) {
        float* p = f.pixel(x, y);
        for (int c = 0; c < 3; ++c) {
          p[c] = static_cast<float>(kBackgroundGray + cover * (kShirtRgb[c] - kBackgroundGray));
        }
      }
    }

    const double pulse = 1.0 + cfg.pulse_amp * std::sin(kTwoPi * hr_hz * t);
    const float red = static_cast<float>(skin[0] * pulse);
    for (int y = geo.face.y; y < geo.face.bottom(); ++y) {
      for (int x = geo.face.x; x < geo.face.right(); ++x) {
        float* p = f.pixel(x, y);
        p[0] = red;
        p[1] = skin[1];
        p[2] = skin[2];
      }
    }

    box_blur(f, cfg.blur_radius);

    if (cfg.noise_sigma > 0.0) {
      std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
      std::normal_distribution<float> noise(0.0f, static_cast<float>(cfg.noise_sigma));
      for (auto& v : f.data) v += noise(rng);
    }
    for (auto& v : f.data) {
      if (cfg.quantize) v = std::nearbyint(v);
      v = std::clamp(v, 0.0f, 255.0f);
    }
    clip.frames[static_cast<std::size_t>(i)] = std::move(f);
  }

  SynthTruth truth;
  truth.hr_bpm = cfg.hr_bpm;
  truth.rr_brpm = cfg.rr_brpm;
  truth.face_box = geo.face;
  truth.mean_face_gray = luma(skin[0], skin[1], skin[2]);
  return {std::move(clip), truth};
}

TimeSeries synth_ecg(double hr_bpm, double fs, double duration, double jitter, std::uint64_t seed) {
  if (!(hr_bpm >= 30.0 && hr_bpm <= 220.0)) throw Error("synth_ecg: hr_bpm outside 30..220");
  if (!(fs > 0.0)) throw Error("synth_ecg: sample rate must be positive");
  const long n = std::max(0L, std::lround(duration * fs));
  TimeSeries ecg{std::vector<double>(static_cast<std::size_t>(n), 0.0), fs};
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  struct Wave {
    double delay, sigma, amplitude;
  };
  constexpr Wave kWaves[] = {{0.0, 0.010, 1.0}, {kTWaveDelay, kTWaveSigma, kTWaveAmplitude}};
  const double base = 60.0 / hr_bpm;
  for (double beat = 0.25 * base; beat < duration + 5.0 * kTWaveSigma; beat += base * (1.0 + jitter * u(rng))) {
    for (const auto& w : kWaves) {
      const double at = beat + w.delay;
      const long center = std::lround(at * fs);
      const long reach = static_cast<long>(std::ceil(5.0 * w.sigma * fs));
      for (long k = std::max(0L, center - reach); k <= std::min(n - 1, center + reach); ++k) {
        const double dt = static_cast<double>(k) / fs - at;
        ecg.samples[k] += w.amplitude * std::exp(-0.5 * dt * dt / (w.sigma * w.sigma));
      }
    }
  }
  return ecg;
}

TimeSeries synth_resp(double rr_brpm, double fs, double duration, std::uint64_t seed, double amplitude) {
  if (!(rr_brpm >= 6.0 && rr_brpm <= 60.0)) throw Error("synth_resp: rr_brpm outside 6..60");
  if (!(fs > 0.0)) throw Error("synth_resp: sample rate must be positive");
  const long n = std::max(0L, std::lround(duration * fs));
  TimeSeries resp{std::vector<double>(static_cast<std::size_t>(n)), fs};
  std::mt19937_64 rng(derive_seed(seed, 2));
  std::normal_distribution<double> noise(0.0, 0.05);
  const double f = rr_brpm / 60.0;
  for (long i = 0; i < n; ++i) {
    resp.samples[i] = amplitude * std::sin(kTwoPi * f * static_cast<double>(i) / fs) + noise(rng);
  }
  return resp;
}

namespace {

std::string trial_name(int participant, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "P%02d-T%03d", participant, index);
  return buf;
}

double jittered(std::mt19937_64& rng, double center, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  return center + u(rng);
}

void add_trial(Protocol& p, std::mt19937_64& rng, int participant, int& index, Condition c, int task, double dur,
               double tone) {
  ProtocolTrial t;
  t.trial_id = trial_name(participant, ++index);
  t.condition = c;
  t.task_id = task;
  t.duration = dur;
  t.tone = tone;
  switch (c) {
    case Condition::respiration:
      t.hr_bpm = jittered(rng, 68.0, 6.0);
      t.rr_brpm = jittered(rng, 15.0, 1.5);
      break;
    case Condition::workout:
      t.hr_bpm = jittered(rng, 105.0, 12.0);
      t.rr_brpm = jittered(rng, 21.0, 2.0);
      break;
    case Condition::gaze:
      t.hr_bpm = jittered(rng, 72.0, 8.0);
      t.rr_brpm = jittered(rng, 16.0, 1.5);
      break;
  }
  p.trials.push_back(std::move(t));
}

}  // namespace

Protocol paper_protocol(const ProtocolOptions& opt) {
  if (opt.participants < 1 || opt.resp_blocks < 0 || opt.gaze_blocks < 0) throw Error("invalid protocol options");
  if (opt.tones.empty()) throw Error("protocol needs at least one tone");
  Protocol p;
  std::mt19937_64 rng(derive_seed(opt.seed, 3));
  for (int part = 0; part < opt.participants; ++part) {
    const double tone = opt.tones[static_cast<std::size_t>(part) % opt.tones.size()];
    int index = 0;
    auto respiratory = [&] {
      for (const auto c : {Condition::respiration, Condition::workout}) {
        for (int b = 0; b < opt.resp_blocks; ++b) {
          std::vector<int> tasks{1, 2, 7};
          std::shuffle(tasks.begin(), tasks.end(), rng);
          for (int task : tasks) add_trial(p, rng, part, index, c, task, opt.resp_trial_s, tone);
        }
      }
    };
    auto gaze = [&] {
      for (int b = 0; b < opt.gaze_blocks; ++b) {
        std::vector<int> tasks{3, 4, 5, 6, 7};
        std::shuffle(tasks.begin(), tasks.end(), rng);
        for (int task : tasks) add_trial(p, rng, part, index, Condition::gaze, task, opt.gaze_trial_s, tone);
      }
    };
    if (part % 2 == 0) {
      respiratory();
      gaze();
    } else {
      gaze();
      respiratory();
    }
  }
  return p;
}

Protocol single_trial_protocol(double hr_bpm, double rr_brpm, double duration, double tone) {
  Protocol p;
  p.trials.push_back({trial_name(0, 1), Condition::respiration, 1, duration, hr_bpm, rr_brpm, tone});
  return p;
}

Protocol tone_sweep_protocol(const std::vector<double>& tones, int seeds_per_tone, double duration,
                             std::uint64_t seed) {
  if (tones.empty() || seeds_per_tone < 1) throw Error("tone sweep needs tones and at least one seed");
  Protocol p;
  std::mt19937_64 rng(derive_seed(seed, 4));
  int participant = 0;
  for (double tone : tones) {
    for (int s = 0; s < seeds_per_tone; ++s) {
      p.trials.push_back({trial_name(participant++, 1), Condition::respiration, 1, duration,
                          jittered(rng, 72.0, 12.0), jittered(rng, 15.0, 2.0), tone});
    }
  }
  return p;
}

double total_duration(const Protocol& p, Condition c) {
  double total = 0.0;
  for (const auto& t : p.trials) {
    if (t.condition == c) total += t.duration;
  }
  return total;
}

void synth_dataset(const Protocol& protocol, const SynthConfig& base, const fs::path& dir) {
  if (protocol.trials.empty()) throw Error("protocol has no trials");
  validate(base);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

  TrialManifest manifest;
  manifest.fps = base.fps;
  manifest.width = base.width;
  manifest.height = base.height;

  PhysioRecord physio;
  physio.sample_rate = protocol.physio_rate;
  physio.ecg.sample_rate = protocol.physio_rate;
  physio.resp.sample_rate = protocol.physio_rate;

  std::ofstream truth(dir / "truth.csv");
  if (!truth) throw Error("cannot write " + (dir / "truth.csv").string());
  truth << "trial_id,condition,task,hr_bpm,rr_brpm,tone,mean_face_gray,face_x,face_y,face_w,face_h\n";

  const double fs = protocol.physio_rate;
  auto append = [&](const TimeSeries& ecg, const TimeSeries& resp, int code) {
    const std::size_t at = physio.ecg.samples.size();
    physio.ecg.samples.insert(physio.ecg.samples.end(), ecg.samples.begin(), ecg.samples.end());
    physio.resp.samples.insert(physio.resp.samples.end(), resp.samples.begin(), resp.samples.end());
    physio.trigger.resize(physio.ecg.samples.size(), 0);
    if (code > 0) physio.trigger[at] = code;
  };

  long frame = 0;
  Rect face;
  for (std::size_t k = 0; k < protocol.trials.size(); ++k) {
    const auto& pt = protocol.trials[k];
    SynthConfig cfg = base;
    cfg.duration = pt.duration;
    cfg.hr_bpm = pt.hr_bpm;
    cfg.rr_brpm = pt.rr_brpm;
    cfg.tone = pt.tone;
    cfg.seed = base.seed + k;
    const bool hold = pt.task_id == kHoldBreathTask;
    if (hold) cfg.chest_amp = 0.0;
    auto [clip, st] = synth_clip(cfg);
    face = st.face_box;

    for (const auto& f : clip.frames) write_ppm(frame_path(dir, frame++), f);
    const int code = static_cast<int>(k) + 1;
    manifest.entries.push_back({pt.trial_id, pt.condition, pt.task_id, frame - static_cast<long>(clip.size()),
                                static_cast<long>(clip.size()), code});

    const double resp_amp = hold ? 0.0 : 1.0;
    const std::uint64_t s = cfg.seed * 4;
    append(synth_ecg(pt.hr_bpm, fs, protocol.ready_s, protocol.ecg_jitter, s),
           synth_resp(pt.rr_brpm, fs, protocol.ready_s, s, resp_amp), 0);
    append(synth_ecg(pt.hr_bpm, fs, clip.duration(), protocol.ecg_jitter, s + 1),
           synth_resp(pt.rr_brpm, fs, clip.duration(), s + 1, resp_amp), code);
    append(synth_ecg(pt.hr_bpm, fs, protocol.wait_s, protocol.ecg_jitter, s + 2),
           synth_resp(pt.rr_brpm, fs, protocol.wait_s, s + 2, resp_amp), 0);

    truth << pt.trial_id << ',' << to_string(pt.condition) << ',' << pt.task_id << ','
          << text::format_number(pt.hr_bpm) << ',' << text::format_number(pt.rr_brpm) << ','
          << text::format_number(pt.tone) << ',' << text::format_number(st.mean_face_gray) << ',' << face.x << ','
          << face.y << ',' << face.w << ',' << face.h << '\n';
  }
  manifest.frame_count = frame;
  write_manifest(dir / "manifest.txt", manifest);
  write_physio_csv(dir / "physio.csv", physio);

  std::ofstream conf(dir / "pipeline.conf");
  if (!conf) throw Error("cannot write " + (dir / "pipeline.conf").string());
  conf << "# synthetic frames are already framed; no crop\n"
       << "crop = 0,0,0,0\n"
       << "roi = manual:" << face.x << ',' << face.y << ',' << face.w << ',' << face.h << '\n';
}

std::vector<TruthRow> read_truth_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<TruthRow> rows;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 11) throw Error(path.string() + ": malformed truth row");
    rows.push_back({std::string(f[0]), text::parse_double(f[3]), text::parse_double(f[4]), text::parse_double(f[5]),
                    text::parse_double(f[6])});
  }
  return rows;
}

}  // namespace rppg::synth

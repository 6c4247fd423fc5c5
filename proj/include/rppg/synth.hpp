#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rppg/ingest.hpp"
#include "rppg/types.hpp"

namespace rppg::synth {

struct SynthConfig {
  int width = 64;
  int height = 64;
  double fps = 30.0;
  double duration = 20.0;  // seconds
  double hr_bpm = 72.0;
  double rr_brpm = 15.0;
  double tone = 1.0;         // skin brightness multiplier in (0, 1]
  double pulse_amp = 0.01;   // relative red-channel modulation
  double chest_amp = 2.0;    // px of vertical chest-edge travel
  double noise_sigma = 0.0;  // gray levels, per channel
  bool quantize = false;
  int blur_radius = 0;
  std::uint64_t seed = 0;
};

struct SynthTruth {
  double hr_bpm = 0.0;
  double rr_brpm = 0.0;
  Rect face_box;
  double mean_face_gray = 0.0;
};

/// Scene layout, a function of the frame size only.
struct SceneGeometry {
  Rect face;
  double chest_edge_y = 0.0;  // rest position of the shirt's upper edge
  int chest_x0 = 0;
  int chest_x1 = 0;
};

inline constexpr float kBackgroundGray = 40.0f;
inline constexpr float kSkinRgb[3] = {200.0f, 150.0f, 130.0f};
inline constexpr float kShirtRgb[3] = {150.0f, 150.0f, 160.0f};

SceneGeometry scene_geometry(int width, int height, double chest_amp);

void validate(const SynthConfig& cfg);

/// Background, a face whose red channel follows 1 + pulse_amp·sin(2π·hr·t)
/// and a shirt edge displaced by chest_amp·sin(2π·rr·t) with fractional-row
/// coverage; then box blur, Gaussian noise and optional 8-bit rounding.
std::pair<VideoClip, SynthTruth> synth_clip(const SynthConfig& cfg);

inline constexpr double kTWaveDelay = 0.20;  // s after the R peak
inline constexpr double kTWaveSigma = 0.040;
inline constexpr double kTWaveAmplitude = 0.25;

/// Gaussian R-wave bumps (σ = 10 ms, unit amplitude) on a zero baseline, the
/// first at a quarter interval, intervals 60/hr · (1 + jitter·u) with u ~ U[-1, 1]. Each
/// beat also carries a T wave (kTWave* above).
TimeSeries synth_ecg(double hr_bpm, double fs, double duration, double jitter, std::uint64_t seed);

/// amplitude · sin(2π·rr/60·t) plus Gaussian noise with σ = 0.05.
TimeSeries synth_resp(double rr_brpm, double fs, double duration, std::uint64_t seed, double amplitude = 1.0);

struct ProtocolTrial {
  std::string trial_id;
  Condition condition = Condition::respiration;
  int task_id = 1;
  double duration = 20.0;
  double hr_bpm = 72.0;
  double rr_brpm = 15.0;
  double tone = 1.0;
};

struct Protocol {
  std::vector<ProtocolTrial> trials;
  double ready_s = 1.0;  // physio-only lead-in before each trial
  double wait_s = 2.0;   // physio-only gap after each trial
  double physio_rate = 128.0;
  double ecg_jitter = 0.02;
};

struct ProtocolOptions {
  int participants = 1;
  int resp_blocks = 5;    // per condition
  int gaze_blocks = 10;
  double resp_trial_s = 20.0;
  double gaze_trial_s = 10.0;
  std::vector<double> tones{1.0};  // cycled over participants
  std::uint64_t seed = 0;
};

/// Respiratory part (normal and workout conditions, tasks {1,2,7} permuted per
/// block) and eye-movement part (tasks 3..7 permuted per block), part order
/// alternating between participants.
Protocol paper_protocol(const ProtocolOptions& opt);
Protocol single_trial_protocol(double hr_bpm, double rr_brpm, double duration, double tone = 1.0);
/// One 20 s respiration-condition trial per (tone, seed) participant.
Protocol tone_sweep_protocol(const std::vector<double>& tones, int seeds_per_tone, double duration,
                             std::uint64_t seed);

double total_duration(const Protocol& p, Condition c);

/// Writes manifest.txt, frame_%06d.ppm, physio.csv, truth.csv and
/// pipeline.conf into `dir`. Per-trial seeds are base.seed + trial index.
void synth_dataset(const Protocol& protocol, const SynthConfig& base, const std::filesystem::path& dir);

struct TruthRow {
  std::string trial_id;
  double hr_bpm = 0.0;
  double rr_brpm = 0.0;
  double tone = 0.0;
  double mean_face_gray = 0.0;
};
std::vector<TruthRow> read_truth_csv(const std::filesystem::path& path);

}  // namespace rppg::synth

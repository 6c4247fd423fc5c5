#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rppg/eval.hpp"
#include "rppg/synth.hpp"
#include "rppg/vitals.hpp"
#include "support.hpp"

using namespace rppg;
using namespace rppg::synth;
using test_support::TempDir;

TEST_CASE("scene geometry") {
  const auto g = scene_geometry(64, 64, 2.0);
  CHECK(g.face == Rect{21, 8, 21, 21});
  CHECK(g.chest_edge_y == doctest::Approx(29 + 0.4 * 35));
  CHECK(g.chest_x0 == 8);
  CHECK(g.chest_x1 == 56);
  CHECK_THROWS_AS(scene_geometry(4, 4, 2.0), Error);
  CHECK_THROWS_AS(scene_geometry(64, 64, 30.0), Error);
}

TEST_CASE("synth_clip red-channel modulation") {
  SynthConfig cfg;
  cfg.pulse_amp = 0.02;
  cfg.duration = 10.0;
  cfg.hr_bpm = 60.0;
  cfg.fps = 32.0;  // quarter-period samples land on the sine extremes
  const auto [clip, truth] = synth_clip(cfg);
  CHECK(clip.size() == 320);
  double lo = 1e9, hi = -1e9;
  for (const auto& f : clip.frames) {
    double acc = 0.0;
    for (int y = truth.face_box.y; y < truth.face_box.bottom(); ++y) {
      for (int x = truth.face_box.x; x < truth.face_box.right(); ++x) acc += f.pixel(x, y)[0];
    }
    const double mean = acc / static_cast<double>(truth.face_box.area());
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
  }
  CHECK(std::abs((hi - lo) / 200.0 - 0.04) <= 1e-6);
  CHECK(clip.frames[0].pixel(truth.face_box.x, truth.face_box.y)[1] == 150.0f);
  CHECK(clip.frames[0].pixel(0, 0)[0] == kBackgroundGray);
}

TEST_CASE("synth_clip truth and tone") {
  SynthConfig a, b;
  b.tone = 0.5;
  const auto ta = synth_clip(a).second;
  const auto tb = synth_clip(b).second;
  CHECK(ta.mean_face_gray == 163.0);
  CHECK(std::abs(tb.mean_face_gray - ta.mean_face_gray / 2.0) <= 1.0);
  for (const double tone : {0.3, 0.5, 0.7, 0.9}) {
    SynthConfig c;
    c.tone = tone;
    CHECK(std::abs(synth_clip(c).second.mean_face_gray - tone * ta.mean_face_gray) <= 1.0);
  }
  CHECK(ta.face_box.inside(64, 64));
  CHECK(ta.hr_bpm == 72.0);
}

TEST_CASE("synth_clip with a still chest") {
  SynthConfig cfg;
  cfg.chest_amp = 0.0;
  auto [clip, truth] = synth_clip(cfg);
  const std::vector<Rect> rois(clip.size(), rr_roi(truth.face_box, clip.height, clip.width));
  const auto trace = mean_gray_trace(clip, rois);
  const auto [lo, hi] = std::minmax_element(trace.samples.begin(), trace.samples.end());
  CHECK(*hi - *lo == 0.0);
}

TEST_CASE("synth_clip is deterministic, including under noise and blur") {
  SynthConfig cfg;
  cfg.noise_sigma = 3.0;
  cfg.blur_radius = 1;
  cfg.quantize = true;
  cfg.seed = 99;
  cfg.duration = 3.0;
  const auto a = synth_clip(cfg).first;
  const auto b = synth_clip(cfg).first;
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) same &= a.frames[i].data == b.frames[i].data;
  CHECK(same);
  for (const float v : a.frames[5].data) CHECK(v == std::nearbyint(v));
  cfg.seed = 100;
  CHECK(synth_clip(cfg).first.frames[0].data != a.frames[0].data);
}

TEST_CASE("synth_clip validation") {
  SynthConfig cfg;
  SUBCASE("tone") { cfg.tone = 0.0; }
  SUBCASE("hr") { cfg.hr_bpm = 300.0; }
  SUBCASE("rr") { cfg.rr_brpm = 2.0; }
  SUBCASE("size") { cfg.width = 0; }
  SUBCASE("noise") { cfg.noise_sigma = -1.0; }
  CHECK_THROWS_AS(synth_clip(cfg), Error);
}

TEST_CASE("synth_ecg beat placement") {
  const auto ecg = synth_ecg(60.0, 128.0, 20.0, 0.0, 0);
  CHECK(ecg.size() == 2560);
  for (int k = 0; k < 20; ++k) {
    const auto at = static_cast<std::size_t>(32 + 128 * k);
    CHECK(ecg.samples[at] == doctest::Approx(1.0));
    CHECK(ecg.samples[at - 1] < ecg.samples[at]);
    CHECK(ecg.samples[at + 1] < ecg.samples[at]);
  }
  CHECK(ecg.samples[32 + 26] == doctest::Approx(kTWaveAmplitude).epsilon(0.05));
  CHECK(ecg.samples[96] == doctest::Approx(0.0));
  CHECK(synth_ecg(60.0, 128.0, 0.0, 0.0, 0).size() == 0);
  CHECK(synth_ecg(60.0, 128.0, 20.0, 0.1, 5).samples == synth_ecg(60.0, 128.0, 20.0, 0.1, 5).samples);
  CHECK_THROWS_AS(synth_ecg(10.0, 128.0, 20.0, 0.0, 0), Error);
}

TEST_CASE("synth_resp") {
  const auto r = synth_resp(15.0, 128.0, 20.0, 1);
  CHECK(r.size() == 2560);
  double mean = 0.0;
  for (const double v : r.samples) mean += v;
  CHECK(std::abs(mean / 2560.0) < 0.01);
  CHECK_THROWS_AS(synth_resp(100.0, 128.0, 20.0, 1), Error);
}

TEST_CASE("paper protocol arithmetic") {
  ProtocolOptions opt;
  const auto p = paper_protocol(opt);
  REQUIRE(p.trials.size() == 80);
  std::size_t resp = 0, gaze = 0;
  for (const auto& t : p.trials) {
    if (t.condition == Condition::gaze) {
      ++gaze;
      CHECK(t.duration == 10.0);
      CHECK(t.task_id >= 3);
    } else {
      ++resp;
      CHECK(t.duration == 20.0);
      CHECK((t.task_id == 1 || t.task_id == 2 || t.task_id == 7));
    }
  }
  CHECK(resp == 30);
  CHECK(gaze == 50);
  CHECK(total_duration(p, Condition::respiration) + total_duration(p, Condition::workout) == 600.0);
  CHECK(total_duration(p, Condition::gaze) == 500.0);

  // Each block is a permutation of its task set.
  for (std::size_t b = 0; b < 10; ++b) {
    std::vector<int> tasks;
    for (std::size_t k = 0; k < 3; ++k) tasks.push_back(p.trials[b * 3 + k].task_id);
    std::sort(tasks.begin(), tasks.end());
    CHECK(tasks == std::vector<int>{1, 2, 7});
  }

  // Workout trials run faster than rest trials.
  double rest_hr = 0, work_hr = 0;
  for (const auto& t : p.trials) {
    if (t.condition == Condition::respiration) rest_hr = std::max(rest_hr, t.hr_bpm);
    if (t.condition == Condition::workout) work_hr = std::max(work_hr, t.hr_bpm);
  }
  CHECK(work_hr > rest_hr);

  opt.participants = 2;
  const auto two = paper_protocol(opt);
  CHECK(two.trials.size() == 160);
  CHECK(two.trials[80].condition == Condition::gaze);  // second participant starts with the gaze part
  CHECK(eval::participant_of(two.trials[80].trial_id) == "P01");
}

TEST_CASE("tone sweep protocol") {
  const auto p = tone_sweep_protocol({0.3, 1.0}, 3, 20.0, 0);
  REQUIRE(p.trials.size() == 6);
  CHECK(p.trials[0].tone == 0.3);
  CHECK(p.trials[5].tone == 1.0);
  CHECK(p.trials[3].trial_id == "P03-T001");
  CHECK_THROWS_AS(tone_sweep_protocol({}, 3, 20.0, 0), Error);
}

TEST_CASE("synth_dataset writes the ingest layout") {
  TempDir dir("dataset");
  ProtocolOptions opt;
  opt.resp_blocks = 1;
  opt.gaze_blocks = 1;
  const auto p = paper_protocol(opt);
  SynthConfig base;
  base.width = 48;
  base.height = 48;
  synth_dataset(p, base, dir.path());

  const auto m = read_manifest(dir / "manifest.txt");
  CHECK_NOTHROW(validate_manifest(m));
  REQUIRE(m.entries.size() == 11);
  CHECK(m.frame_count == 6 * 600 + 5 * 300);
  CHECK(std::filesystem::exists(frame_path(dir.path(), m.frame_count - 1)));
  CHECK_FALSE(std::filesystem::exists(frame_path(dir.path(), m.frame_count)));

  const auto physio = load_physio_csv(dir / "physio.csv");
  CHECK(physio.sample_rate == 128.0);
  CHECK(physio.size() == static_cast<std::size_t>(std::lround((6 * 20.0 + 5 * 10.0 + 11 * 3.0) * 128.0)));
  const auto ranges = eval::segment_trials(physio, m, m.fps);
  CHECK(ranges[0].physio_start == 128);
  CHECK(ranges[1].physio_start == 128 + 20 * 128 + 2 * 128 + 128);

  const auto truth = read_truth_csv(dir / "truth.csv");
  REQUIRE(truth.size() == 11);
  CHECK(truth[0].trial_id == m.entries[0].trial_id);
  CHECK(truth[0].hr_bpm == p.trials[0].hr_bpm);
  CHECK(test_support::read_file(dir / "pipeline.conf").find("roi = manual:") != std::string::npos);
}

#include <doctest.h>

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "rppg/dsp.hpp"
#include "rppg/eval.hpp"
#include "rppg/synth.hpp"
#include "rppg/vitals.hpp"
#include "support.hpp"

using namespace rppg;
using namespace rppg::eval;
using test_support::TempDir;

namespace {

PhysioRecord physio_with_triggers(long samples, double fs, std::vector<std::pair<long, int>> triggers) {
  PhysioRecord p;
  p.sample_rate = fs;
  p.ecg = {std::vector<double>(samples, 0.0), fs};
  p.resp = {std::vector<double>(samples, 0.0), fs};
  p.trigger.assign(samples, 0);
  for (const auto& [at, code] : triggers) p.trigger[at] = code;
  return p;
}

TrialRecord record(std::string id, Condition c, int task, std::optional<double> hr_est, std::optional<double> hr_gt,
                   std::optional<double> rr_est, std::optional<double> rr_gt, double skin, unsigned flags = 0) {
  return {std::move(id), c, task, hr_est, hr_gt, rr_est, rr_gt, skin, flags};
}

bool well_formed_xml(const std::string& s) {
  std::istringstream in(s);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_xml(in, tree);
  } catch (const std::exception&) {
    return false;
  }
  return tree.count("svg") == 1;
}

}  // namespace

TEST_CASE("segment_trials") {
  TrialManifest m;
  m.fps = 30.0;
  m.entries = {{"A", Condition::respiration, 1, 0, 600, 1}, {"B", Condition::gaze, 3, 600, 300, 2}};
  const auto p = physio_with_triggers(8000, 128.0, {{1280, 1}, {4500, 2}});
  const auto r = segment_trials(p, m, 30.0);
  REQUIRE(r.size() == 2);
  CHECK(r[0].physio_start == 1280);
  CHECK(r[0].physio_count == 2560);
  CHECK(r[0].frame_count == 600);
  CHECK(r[1].physio_start == 4500);
  CHECK(r[1].physio_count == 1280);
  CHECK(r[1].frame_start == 600);
  CHECK(r[1].frame_count == 300);

  SUBCASE("missing code") {
    const auto bad = physio_with_triggers(8000, 128.0, {{1280, 1}});
    CHECK_THROWS_WITH_AS(segment_trials(bad, m, 30.0), doctest::Contains("trial B"), Error);
  }
  SUBCASE("duplicated code") {
    const auto bad = physio_with_triggers(8000, 128.0, {{1280, 1}, {4500, 2}, {6000, 1}});
    CHECK_THROWS_AS(segment_trials(bad, m, 30.0), Error);
  }
  SUBCASE("recording too short") {
    const auto bad = physio_with_triggers(5000, 128.0, {{1280, 1}, {4500, 2}});
    CHECK_THROWS_AS(segment_trials(bad, m, 30.0), Error);
  }

  const TimeSeries x{{0, 1, 2, 3, 4}, 2.0};
  CHECK(slice(x, 1, 3).samples == std::vector<double>{1, 2, 3});
  CHECK(slice(x, 1, 3).sample_rate == 2.0);
  CHECK_THROWS_AS(slice(x, 3, 3), Error);
}

TEST_CASE("rmse") {
  const std::vector<std::pair<double, double>> perfect{{72, 72}, {90, 90}};
  CHECK(rmse(perfect) == 0.0);
  const std::vector<std::pair<double, double>> one{{75, 72}};
  CHECK(rmse(one) == 3.0);
  const std::vector<std::pair<double, double>> two{{75, 72}, {70, 70}};
  CHECK(rmse(two) == doctest::Approx(2.1213).epsilon(1e-4));
  CHECK_THROWS_AS(rmse(std::span<const std::pair<double, double>>{}), Error);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(40.0, 150.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, double>> v(1 + trial % 9);
    for (auto& [a, b] : v) {
      a = u(rng);
      b = u(rng);
    }
    const double e = rmse(v);
    CHECK(e > 0.0);
    std::reverse(v.begin(), v.end());
    CHECK(rmse(v) == doctest::Approx(e).epsilon(1e-12));
  }
}

TEST_CASE("skin_tone_gray") {
  VideoClip white{4, 4, 30.0, std::vector<RgbFrame>(3, RgbFrame(4, 4, 255.0f))};
  const std::vector<Rect> rois(3, Rect{1, 1, 2, 2});
  CHECK(skin_tone_gray(white, rois) == 255.0);
  CHECK_THROWS_AS(skin_tone_gray(white, std::vector<Rect>{}), Error);

  synth::SynthConfig a, b;
  b.tone = 0.5;
  const auto [ca, ta] = synth::synth_clip(a);
  const auto [cb, tb] = synth::synth_clip(b);
  const std::vector<Rect> ra(ca.size(), ta.face_box);
  const std::vector<Rect> rb(cb.size(), tb.face_box);
  const double ga = skin_tone_gray(ca, ra);
  const double gb = skin_tone_gray(cb, rb);
  CHECK(std::abs(ga / gb - 2.0) <= 0.04);

  // Concatenated clips give the pixel-weighted mean.
  const auto sa = skin_tone_sum(ca, ra);
  const std::vector<Rect> small(cb.size(), Rect{tb.face_box.x, tb.face_box.y, 5, 5});
  const auto sb = skin_tone_sum(cb, small);
  VideoClip both = ca;
  both.frames.insert(both.frames.end(), cb.frames.begin(), cb.frames.end());
  std::vector<Rect> rboth = ra;
  rboth.insert(rboth.end(), small.begin(), small.end());
  SkinAccumulator acc;
  acc.add(sa.mean(), sa.pixels);
  acc.add(sb.mean(), sb.pixels);
  CHECK(skin_tone_gray(both, rboth) == doctest::Approx(acc.mean()).epsilon(1e-12));
  CHECK_THROWS_AS(SkinAccumulator{}.mean(), Error);
}

TEST_CASE("linear_fit") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 * v + 1.0);
  const auto exact = linear_fit(x, y);
  CHECK(exact.slope == doctest::Approx(2.0));
  CHECK(exact.intercept == doctest::Approx(1.0));
  CHECK(exact.ci95_slope == doctest::Approx(0.0));
  CHECK(exact.ci95_intercept == doctest::Approx(0.0));

  // scipy.stats.linregress with t.ppf(0.975, n-2) half-widths.
  const std::vector<double> x6{1, 2, 3, 4, 5, 6};
  const std::vector<double> y6{2.1, 3.9, 6.2, 7.8, 10.1, 12.2};
  const auto f = linear_fit(x6, y6);
  CHECK(f.slope == doctest::Approx(2.0199999999999996).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(-0.019999999999998685).epsilon(1e-9));
  CHECK(f.ci95_slope == doctest::Approx(0.11872578670669967).epsilon(1e-10));
  CHECK(f.ci95_intercept == doctest::Approx(0.4623705099899776).epsilon(1e-10));
  CHECK(f.ci95_mean(f.x_mean) < f.ci95_mean(f.x_mean + 2.0));

  double resid = 0.0;
  for (std::size_t i = 0; i < x6.size(); ++i) resid += y6[i] - f.predict(x6[i]);
  CHECK(std::abs(resid) <= 1e-9);

  CHECK_THROWS_AS(linear_fit(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(linear_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(linear_fit(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), Error);
}

TEST_CASE("boxplot_stats") {
  const auto s = boxplot_stats(std::vector<double>{1, 2, 3, 4, 5});
  CHECK(s.median == 3.0);
  CHECK(s.q1 == 2.0);
  CHECK(s.q3 == 4.0);
  CHECK(s.outliers.empty());

  CHECK(boxplot_stats(std::vector<double>{3.32, 3.62, 4.48}).median == 3.62);

  // matplotlib.cbook.boxplot_stats on [1..9, 30].
  const auto m = boxplot_stats(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 30});
  CHECK(m.median == 5.5);
  CHECK(m.q1 == 3.25);
  CHECK(m.q3 == 7.75);
  CHECK(m.whisker_lo == 1.0);
  CHECK(m.whisker_hi == 9.0);
  CHECK(m.outliers == std::vector<double>{30.0});

  std::mt19937 rng(9);
  std::normal_distribution<double> nd(5.0, 2.0);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> v(1 + t);
    for (auto& x : v) x = nd(rng);
    CHECK(boxplot_stats(v).median == dsp::median(v));
  }
  CHECK_THROWS_AS(boxplot_stats(std::vector<double>{}), Error);
}

TEST_CASE("flags and participants") {
  CHECK(format_flags(0).empty());
  CHECK(format_flags(flag::hr_out_of_band | flag::roi_failure) == "hr_out_of_band|roi_failure");
  for (unsigned f = 0; f < 64; ++f) CHECK(parse_flags(format_flags(f)) == f);
  CHECK(parse_flags(" rr_out_of_band | hold_breath_excluded ") == (flag::rr_out_of_band | flag::hold_breath_excluded));
  CHECK_THROWS_AS(parse_flags("bogus"), Error);

  CHECK(participant_of("P03-T012") == "P03");
  CHECK(participant_of("trial7") == "all");
}

TEST_CASE("scored trials") {
  auto r = record("P00-T1", Condition::respiration, 1, 70, 72, 15, 16, 150);
  CHECK(r.hr_scored());
  CHECK(r.rr_scored());
  r.flags = flag::hold_breath_excluded;
  CHECK(r.hr_scored());
  CHECK_FALSE(r.rr_scored());
  r.flags = flag::roi_failure;
  CHECK_FALSE(r.hr_scored());
  CHECK_FALSE(r.rr_scored());
  r.flags = flag::hr_out_of_band;
  CHECK_FALSE(r.hr_scored());
  CHECK(r.rr_scored());
  r.flags = flag::hr_low_confidence | flag::rr_low_confidence;
  CHECK(r.hr_scored());
  CHECK(r.rr_scored());
  r.flags = 0;
  r.rr_gt.reset();
  CHECK_FALSE(r.rr_scored());
}

TEST_CASE("evaluate aggregates per participant") {
  const std::vector<TrialRecord> recs{
      record("P00-T1", Condition::respiration, 1, 75, 72, 15, 15, 100),
      record("P00-T2", Condition::respiration, 2, 70, 70, 20, 15, 100, flag::hold_breath_excluded),
      record("P00-T3", Condition::gaze, 3, 80, 80, 15, 17, 100),
      record("P01-T1", Condition::respiration, 1, 60, 64, 14, 15, 200),
      record("P01-T2", Condition::respiration, 7, 99, 70, 14, 15, 200, flag::roi_failure),
      record("P02-T1", Condition::respiration, 1, 72, 73, 15, 15, 150),
  };
  const auto rep = evaluate(recs);
  REQUIRE(rep.participants.size() == 4);
  CHECK(rep.participants[0].participant == "P00");
  CHECK(rep.participants[0].condition == Condition::respiration);
  CHECK(*rep.participants[0].hr_rmse == doctest::Approx(std::sqrt(4.5)));
  CHECK(rep.participants[0].hr_trials == 2);
  CHECK(rep.participants[0].rr_trials == 1);
  CHECK(*rep.participants[0].rr_rmse == 0.0);
  CHECK(rep.participants[1].condition == Condition::gaze);
  CHECK(*rep.participants[2].hr_rmse == 4.0);
  CHECK(rep.participants[2].hr_trials == 1);
  CHECK(rep.participants[2].skin_gray == 200.0);

  const auto hr_resp = std::find_if(rep.boxes.begin(), rep.boxes.end(), [](const auto& b) {
    return b.measure == "hr" && b.condition == Condition::respiration;
  });
  REQUIRE(hr_resp != rep.boxes.end());
  CHECK(hr_resp->participants == 3);
  CHECK(hr_resp->trials == 4);
  CHECK(hr_resp->stats.median == doctest::Approx(std::sqrt(4.5)));
  CHECK(hr_resp->pooled_rmse == doctest::Approx(std::sqrt((9.0 + 0.0 + 16.0 + 1.0) / 4.0)));
  CHECK(std::none_of(rep.boxes.begin(), rep.boxes.end(),
                     [](const auto& b) { return b.condition == Condition::workout; }));

  REQUIRE(rep.skin_fit);
  CHECK(rep.skin_points.size() == 4);
  CHECK_THROWS_AS(evaluate(std::vector<TrialRecord>{}), Error);

  // Two points cannot be fitted; the report simply omits the regression.
  const std::vector<TrialRecord> few{record("A-1", Condition::gaze, 3, 70, 71, {}, {}, 100),
                                     record("B-1", Condition::gaze, 3, 70, 72, {}, {}, 120)};
  CHECK_FALSE(evaluate(few).skin_fit);
}

TEST_CASE("emit_report files") {
  std::vector<TrialRecord> recs;
  for (int p = 0; p < 4; ++p) {
    for (int t = 0; t < 10; ++t) {
      const Condition c = t < 3 ? Condition::respiration : t < 6 ? Condition::workout : Condition::gaze;
      const int task = c == Condition::gaze ? 3 + t % 5 : (t % 3 == 0 ? 1 : t % 3 == 1 ? 2 : 7);
      const std::string id = "P0" + std::to_string(p) + "-T" + std::to_string(t);
      const unsigned flags = task == 2 ? flag::hold_breath_excluded : 0;
      recs.push_back(record(id, c, task, 70.0 + p + 0.1 * t, 70.0, 15.0 + 0.5 * p, 15.25, 100.0 + 30.0 * p, flags));
    }
  }
  TempDir dir("report");
  const auto rep = emit_report(recs, dir / "out");
  for (const char* f : {"trials.csv", "participants.csv", "summary.csv", "hr_boxplot.svg", "rr_boxplot.svg",
                        "skin_scatter.svg"}) {
    CHECK(std::filesystem::exists(dir / ("out/" + std::string(f))));
  }
  const auto summary = test_support::read_file(dir / "out/summary.csv");
  std::istringstream lines(summary);
  std::string line;
  int hr_rows = 0, rr_rows = 0, reg_rows = 0;
  while (std::getline(lines, line)) {
    hr_rows += line.rfind("boxplot,hr,", 0) == 0;
    rr_rows += line.rfind("boxplot,rr,", 0) == 0;
    reg_rows += line.rfind("regression,", 0) == 0;
  }
  CHECK(hr_rows == 3);
  CHECK(rr_rows == 3);
  CHECK(reg_rows == 1);
  CHECK(rep.skin_fit->slope > 0.0);

  const auto scatter = test_support::read_file(dir / "out/skin_scatter.svg");
  CHECK(scatter.find("id=\"fit-line\"") != std::string::npos);
  CHECK(scatter.find("id=\"ci-band\"") != std::string::npos);
  for (const char* f : {"hr_boxplot.svg", "rr_boxplot.svg", "skin_scatter.svg"}) {
    CHECK(well_formed_xml(test_support::read_file(dir / ("out/" + std::string(f)))));
  }

  emit_report(recs, dir / "again");
  for (const char* f : {"trials.csv", "summary.csv", "hr_boxplot.svg", "skin_scatter.svg"}) {
    CHECK(test_support::read_file(dir / ("out/" + std::string(f))) ==
          test_support::read_file(dir / ("again/" + std::string(f))));
  }
  CHECK_THROWS_AS(emit_report(std::vector<TrialRecord>{}, dir / "none"), Error);
}

TEST_CASE("trials.csv round trip") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  std::vector<TrialRecord> recs;
  for (int i = 0; i < 40; ++i) {
    TrialRecord r;
    r.trial_id = "P" + std::to_string(i % 3) + "-T" + std::to_string(i);
    r.condition = static_cast<Condition>(i % 3);
    r.task_id = 1 + i % 7;
    if (i % 5) r.hr_est = u(rng);
    r.hr_gt = u(rng) / 3.0;
    if (i % 4) r.rr_est = 1.0 / (1.0 + u(rng));
    if (i % 6) r.rr_gt = u(rng) * 1e-7;
    r.skin_gray = u(rng);
    r.flags = static_cast<unsigned>(i) % 64;
    recs.push_back(r);
  }
  TempDir dir("trials");
  write_trials_csv(dir / "trials.csv", recs);
  CHECK(read_trials_csv(dir / "trials.csv") == recs);

  test_support::write_file(dir / "bad.csv", "trial_id,condition,task,hr_est,hr_gt,rr_est,rr_gt,skin_gray,flags\nA,gaze,3\n");
  CHECK_THROWS_WITH_AS(read_trials_csv(dir / "bad.csv"), doctest::Contains("bad.csv:2"), Error);
  test_support::write_file(dir / "hdr.csv", "id,cond\n");
  CHECK_THROWS_AS(read_trials_csv(dir / "hdr.csv"), Error);
}

TEST_CASE("signal plots are well formed") {
  std::vector<PlotSeries> s{{"a", {0, 1, 0, -1, 0}, 30.0}, {"b & c", {5, 5, 5}, 30.0}};
  const auto svg = signal_plot_svg("trial <1>", s);
  CHECK(well_formed_xml(svg));
  CHECK(svg == signal_plot_svg("trial <1>", s));
}

#include "rppg/eval.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "rppg/dsp.hpp"
#include "rppg/kernels.hpp"
#include "rppg/text.hpp"

namespace fs = std::filesystem;

namespace rppg::eval {

std::vector<TrialRange> segment_trials(const PhysioRecord& physio, const TrialManifest& manifest, double fps) {
  if (!(fps > 0.0)) throw Error("segment_trials: fps must be positive");
  std::map<int, std::vector<long>> positions;
  for (std::size_t i = 0; i < physio.trigger.size(); ++i) {
    if (physio.trigger[i] != 0) positions[physio.trigger[i]].push_back(static_cast<long>(i));
  }
  std::vector<TrialRange> out;
  for (const auto& e : manifest.entries) {
    const auto it = positions.find(e.trigger_code);
    if (it == positions.end()) {
      throw Error("trigger code " + std::to_string(e.trigger_code) + " of trial " + e.trial_id +
                  " not found in the physio trigger channel");
    }
    if (it->second.size() != 1) {
      throw Error("trigger code " + std::to_string(e.trigger_code) + " of trial " + e.trial_id + " appears " +
                  std::to_string(it->second.size()) + " times");
    }
    TrialRange r;
    r.trial_id = e.trial_id;
    r.frame_start = e.start_frame;
    r.frame_count = e.frame_count;
    r.physio_start = it->second.front();
    r.physio_count = std::lround(static_cast<double>(e.frame_count) / fps * physio.sample_rate);
    if (r.physio_start + r.physio_count > static_cast<long>(physio.size())) {
      throw Error("physio recording ends before trial " + e.trial_id + " does");
    }
    out.push_back(std::move(r));
  }
  return out;
}

TimeSeries slice(const TimeSeries& x, long start, long count) {
  if (start < 0 || count < 0 || start + count > static_cast<long>(x.size())) throw Error("slice out of range");
  return {std::vector<double>(x.samples.begin() + start, x.samples.begin() + start + count), x.sample_rate};
}

double rmse(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw Error("rmse of an empty list");
  double acc = 0.0;
  for (const auto& [est, truth] : pairs) acc += (est - truth) * (est - truth);
  return std::sqrt(acc / static_cast<double>(pairs.size()));
}

double SkinAccumulator::mean() const {
  if (pixels <= 0) throw Error("skin tone of an empty ROI set");
  return sum / static_cast<double>(pixels);
}

SkinAccumulator skin_tone_sum(const VideoClip& clip, std::span<const Rect> face_rois) {
  if (face_rois.empty()) throw Error("skin tone of an empty ROI set");
  SkinAccumulator acc;
  for (const auto& s : kernels::frame_gray_sums(clip, face_rois, Exec::parallel)) {
    acc.sum += s.sum;
    acc.pixels += s.count;
  }
  return acc;
}

double skin_tone_gray(const VideoClip& clip, std::span<const Rect> face_rois) {
  return skin_tone_sum(clip, face_rois).mean();
}

double LinearFit::ci95_mean(double x) const {
  const double d = x - x_mean;
  return t_crit * residual_se * std::sqrt(1.0 / static_cast<double>(n) + d * d / sxx);
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("linear_fit: x and y differ in length");
  if (x.size() < 3) throw Error("linear_fit needs at least 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error("linear_fit: all x values are equal");
  LinearFit f;
  f.n = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.x_mean = mx;
  f.sxx = sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.predict(x[i]);
    sse += r * r;
  }
  f.residual_se = std::sqrt(sse / (n - 2.0));
  f.t_crit = boost::math::quantile(boost::math::students_t(n - 2.0), 0.975);
  f.ci95_slope = f.t_crit * f.residual_se / std::sqrt(sxx);
  f.ci95_intercept = f.t_crit * f.residual_se * std::sqrt(1.0 / n + mx * mx / sxx);
  return f;
}

BoxStats boxplot_stats(std::span<const double> values) {
  if (values.empty()) throw Error("boxplot of an empty list");
  std::vector<double> v(values.begin(), values.end());
  BoxStats b;
  b.median = dsp::percentile(v, 50.0);
  b.q1 = dsp::percentile(v, 25.0);
  b.q3 = dsp::percentile(v, 75.0);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr;
  const double hi = b.q3 + 1.5 * iqr;
  std::sort(v.begin(), v.end());
  b.whisker_lo = b.q1;
  b.whisker_hi = b.q3;
  for (double x : v) {
    if (x >= lo && x <= hi) {
      b.whisker_lo = std::min(b.whisker_lo, x);
      b.whisker_hi = std::max(b.whisker_hi, x);
    } else {
      b.outliers.push_back(x);
    }
  }
  return b;
}

namespace {

const std::pair<unsigned, std::string_view> kFlagNames[] = {
    {flag::hr_out_of_band, "hr_out_of_band"},
    {flag::rr_out_of_band, "rr_out_of_band"},
    {flag::hold_breath_excluded, "hold_breath_excluded"},
    {flag::roi_failure, "roi_failure"},
    {flag::hr_low_confidence, "hr_low_confidence"},
    {flag::rr_low_confidence, "rr_low_confidence"},
};

}  // namespace

std::string format_flags(unsigned flags) {
  std::string out;
  for (const auto& [bit, name] : kFlagNames) {
    if (flags & bit) {
      if (!out.empty()) out += '|';
      out += name;
    }
  }
  return out;
}

unsigned parse_flags(std::string_view s) {
  unsigned flags = 0;
  s = text::trim(s);
  if (s.empty()) return 0;
  for (const auto tok : text::split(s, '|')) {
    const auto it = std::find_if(std::begin(kFlagNames), std::end(kFlagNames),
                                 [&](const auto& f) { return f.second == text::trim(tok); });
    if (it == std::end(kFlagNames)) throw Error("unknown flag '" + std::string(tok) + "'");
    flags |= it->first;
  }
  return flags;
}

bool TrialRecord::hr_scored() const {
  return hr_est && hr_gt && !(flags & (flag::hr_out_of_band | flag::roi_failure));
}

bool TrialRecord::rr_scored() const {
  return rr_est && rr_gt && !(flags & (flag::rr_out_of_band | flag::roi_failure | flag::hold_breath_excluded));
}

std::string participant_of(std::string_view trial_id) {
  const auto dash = trial_id.find('-');
  if (dash == std::string_view::npos) return "all";
  return std::string(trial_id.substr(0, dash));
}

EvaluationReport evaluate(std::span<const TrialRecord> records) {
  if (records.empty()) throw Error("no trial records to evaluate");
  constexpr Condition kConditions[] = {Condition::respiration, Condition::workout, Condition::gaze};

  // Participants in order of first appearance.
  std::vector<std::string> order;
  std::map<std::string, double> skin;
  for (const auto& r : records) {
    const auto p = participant_of(r.trial_id);
    if (!skin.count(p)) {
      order.push_back(p);
      skin[p] = r.skin_gray;
    }
  }

  EvaluationReport rep;
  for (const auto& p : order) {
    for (const auto c : kConditions) {
      std::vector<std::pair<double, double>> hr, rr;
      for (const auto& r : records) {
        if (r.condition != c || participant_of(r.trial_id) != p) continue;
        if (r.hr_scored()) hr.emplace_back(*r.hr_est, *r.hr_gt);
        if (r.rr_scored()) rr.emplace_back(*r.rr_est, *r.rr_gt);
      }
      if (hr.empty() && rr.empty()) continue;
      ParticipantScore s;
      s.participant = p;
      s.condition = c;
      s.skin_gray = skin[p];
      s.hr_trials = hr.size();
      s.rr_trials = rr.size();
      if (!hr.empty()) s.hr_rmse = rmse(hr);
      if (!rr.empty()) s.rr_rmse = rmse(rr);
      rep.participants.push_back(std::move(s));
    }
  }

  for (const std::string measure : {"hr", "rr"}) {
    const bool is_hr = measure == "hr";
    for (const auto c : kConditions) {
      std::vector<double> values;
      for (const auto& s : rep.participants) {
        const auto& v = is_hr ? s.hr_rmse : s.rr_rmse;
        if (s.condition == c && v) values.push_back(*v);
      }
      if (values.empty()) continue;
      std::vector<std::pair<double, double>> pooled;
      for (const auto& r : records) {
        if (r.condition != c) continue;
        if (is_hr && r.hr_scored()) pooled.emplace_back(*r.hr_est, *r.hr_gt);
        if (!is_hr && r.rr_scored()) pooled.emplace_back(*r.rr_est, *r.rr_gt);
      }
      ConditionBox box;
      box.measure = measure;
      box.condition = c;
      box.participants = values.size();
      box.trials = pooled.size();
      box.stats = boxplot_stats(values);
      box.pooled_rmse = rmse(pooled);
      rep.boxes.push_back(std::move(box));
    }
  }

  std::vector<double> xs, ys;
  for (const auto& s : rep.participants) {
    if (!s.hr_rmse) continue;
    xs.push_back(s.skin_gray);
    ys.push_back(*s.hr_rmse);
    rep.skin_points.emplace_back(s.skin_gray, *s.hr_rmse);
    rep.skin_point_participants.push_back(s.participant);
    rep.skin_point_conditions.push_back(s.condition);
  }
  const bool spread = xs.size() >= 3 && std::any_of(xs.begin(), xs.end(), [&](double x) { return x != xs.front(); });
  if (spread) rep.skin_fit = linear_fit(xs, ys);
  return rep;
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? text::format_number(*v) : std::string(); }

std::optional<double> parse_opt(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  return text::parse_double(s);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

void write_trials_csv(const fs::path& path, std::span<const TrialRecord> records) {
  std::ostringstream out;
  out << "trial_id,condition,task,hr_est,hr_gt,rr_est,rr_gt,skin_gray,flags\n";
  for (const auto& r : records) {
    out << r.trial_id << ',' << to_string(r.condition) << ',' << r.task_id << ',' << opt_number(r.hr_est) << ','
        << opt_number(r.hr_gt) << ',' << opt_number(r.rr_est) << ',' << opt_number(r.rr_gt) << ','
        << text::format_number(r.skin_gray) << ',' << format_flags(r.flags) << '\n';
  }
  write_text(path, out.str());
}

std::vector<TrialRecord> read_trials_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "trial_id,condition,task,hr_est,hr_gt,rr_est,rr_gt,skin_gray,flags") {
    throw Error(path.string() + ": unexpected header");
  }
  std::vector<TrialRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 9) throw Error(path.string() + ":" + std::to_string(lineno) + ": expected 9 columns");
    try {
      TrialRecord r;
      r.trial_id = std::string(text::trim(f[0]));
      r.condition = parse_condition(f[1]);
      r.task_id = static_cast<int>(text::parse_long(f[2], "task"));
      r.hr_est = parse_opt(f[3]);
      r.hr_gt = parse_opt(f[4]);
      r.rr_est = parse_opt(f[5]);
      r.rr_gt = parse_opt(f[6]);
      r.skin_gray = text::parse_double(f[7], "skin gray");
      r.flags = parse_flags(f[8]);
      out.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

EvaluationReport emit_report(std::span<const TrialRecord> records, const fs::path& out_dir) {
  if (records.empty()) throw Error("no trial records to report");
  const auto rep = evaluate(records);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create " + out_dir.string() + ": " + ec.message());

  write_trials_csv(out_dir / "trials.csv", records);

  std::ostringstream parts;
  parts << "participant,condition,skin_gray,hr_rmse,hr_trials,rr_rmse,rr_trials\n";
  for (const auto& s : rep.participants) {
    parts << s.participant << ',' << to_string(s.condition) << ',' << text::format_number(s.skin_gray) << ','
          << opt_number(s.hr_rmse) << ',' << s.hr_trials << ',' << opt_number(s.rr_rmse) << ',' << s.rr_trials << '\n';
  }
  write_text(out_dir / "participants.csv", parts.str());

  std::ostringstream sum;
  sum << "kind,measure,condition,participants,trials,median,q1,q3,whisker_lo,whisker_hi,outliers,pooled_rmse,"
         "slope,intercept,ci95_slope,ci95_intercept\n";
  for (const auto& b : rep.boxes) {
    std::string outliers;
    for (double o : b.stats.outliers) {
      if (!outliers.empty()) outliers += ';';
      outliers += text::format_number(o);
    }
    sum << "boxplot," << b.measure << ',' << to_string(b.condition) << ',' << b.participants << ',' << b.trials << ','
        << text::format_number(b.stats.median) << ',' << text::format_number(b.stats.q1) << ','
        << text::format_number(b.stats.q3) << ',' << text::format_number(b.stats.whisker_lo) << ','
        << text::format_number(b.stats.whisker_hi) << ',' << outliers << ',' << text::format_number(b.pooled_rmse)
        << ",,,,\n";
  }
  if (rep.skin_fit) {
    const auto& f = *rep.skin_fit;
    sum << "regression,hr_rmse_vs_skin_gray,all," << rep.skin_points.size() << ",,,,,,,,,"
        << text::format_number(f.slope) << ',' << text::format_number(f.intercept) << ','
        << text::format_number(f.ci95_slope) << ',' << text::format_number(f.ci95_intercept) << '\n';
  }
  write_text(out_dir / "summary.csv", sum.str());

  std::vector<ConditionBox> hr, rr;
  for (const auto& b : rep.boxes) (b.measure == "hr" ? hr : rr).push_back(b);
  write_text(out_dir / "hr_boxplot.svg", boxplot_svg("HR RMSE per participant", "bpm", hr));
  write_text(out_dir / "rr_boxplot.svg", boxplot_svg("RR RMSE per participant (hold-breath excluded)", "brpm", rr));
  write_text(out_dir / "skin_scatter.svg", scatter_svg(rep));
  return rep;
}

}  // namespace rppg::eval

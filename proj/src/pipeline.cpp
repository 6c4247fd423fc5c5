#include "rppg/pipeline.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "rppg/detect.hpp"
#include "rppg/dsp.hpp"
#include "rppg/groundtruth.hpp"
#include "rppg/text.hpp"
#include "rppg/vitals.hpp"

namespace fs = std::filesystem;

namespace rppg::pipeline {

namespace {

constexpr std::string_view kEstimateHeader = "trial_id,condition,task,hr_est,rr_est,face_gray,face_pixels,flags";
constexpr std::string_view kTruthHeader = "trial_id,condition,task,hr_gt,rr_gt,flags";

std::string opt_number(const std::optional<double>& v) { return v ? text::format_number(*v) : std::string{}; }

std::optional<double> parse_opt(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  return text::parse_double(s);
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

// Reads a CSV with a fixed header, calling `row` with the split fields of
// every non-blank line; errors get file:line context.
template <class F>
void read_csv(const fs::path& path, std::string_view header, std::size_t columns, F&& row) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != header) throw Error(path.string() + ": unexpected header");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    try {
      if (f.size() != columns) throw Error("expected " + std::to_string(columns) + " columns");
      row(f);
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

// Runs task(i) for i in [0, n) on `jobs` threads. Every task runs; the
// exception of the lowest failing index is rethrown.
template <class F>
void for_each_ordered(std::size_t n, int jobs, F&& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_trial_plot(const fs::path& path, const std::string& trial_id, const VideoClip& clip,
                      std::span<const Rect> hr_rois, std::span<const Rect> rr_rois, const VitalsConfig& cfg) {
  std::vector<eval::PlotSeries> series;
  const auto pulse = pulse_signal(clip, hr_rois, cfg);
  series.push_back({"pulse trace", pulse.samples, pulse.sample_rate});
  const auto pulse_f = dsp::bandpass(pulse, {cfg.hr_band.low_hz, cfg.hr_band.high_hz, cfg.filter_order});
  series.push_back({"pulse, band-passed", pulse_f.samples, pulse_f.sample_rate});
  if (!rr_rois.empty()) {
    const auto chest = mean_gray_trace(clip, rr_rois, cfg.exec);
    series.push_back({"chest gray", chest.samples, chest.sample_rate});
    const auto chest_f = dsp::bandpass(chest, {cfg.rr_band.low_hz, cfg.rr_band.high_hz, cfg.filter_order});
    series.push_back({"chest gray, band-passed", chest_f.samples, chest_f.sample_rate});
  }
  write_text(path, eval::signal_plot_svg(trial_id, series));
}

EstimateRow estimate_trial(const fs::path& manifest_path, const TrialEntry& entry, const PipelineConfig& cfg,
                           const RoiSource& roi_source, const VitalsConfig& vitals,
                           const std::optional<fs::path>& plot_dir) {
  EstimateRow row{entry.trial_id, entry.condition, entry.task_id, std::nullopt, std::nullopt, 0.0, 0, 0};
  if (entry.hold_breath()) row.flags |= eval::flag::hold_breath_excluded;

  const auto clip = crop_clip(read_ppm_range(manifest_path, entry.start_frame, entry.frame_count), cfg.crop);

  std::vector<FaceBox> faces;
  try {
    faces = track_roi(clip, roi_source, vitals.exec);
  } catch (const Error&) {
    row.flags |= eval::flag::roi_failure;
    return row;
  }
  for (const auto& f : faces) {
    if (f.empty() || !f.inside(clip.width, clip.height)) {
      row.flags |= eval::flag::roi_failure;
      return row;
    }
  }

  const auto skin = eval::skin_tone_sum(clip, faces);
  row.face_gray = skin.mean();
  row.face_pixels = skin.pixels;

  std::vector<Rect> hr_rois(faces.size());
  for (std::size_t i = 0; i < faces.size(); ++i) hr_rois[i] = hr_roi(faces[i]);
  const auto hr = estimate_hr_detail(clip, hr_rois, vitals);
  row.hr_est = hr.per_minute;
  if (hr.low_confidence()) row.flags |= eval::flag::hr_low_confidence;

  // A face touching the frame bottom leaves no chest region: RR stays empty.
  std::vector<Rect> rr_rois;
  try {
    for (const auto& f : faces) rr_rois.push_back(rr_roi(f, clip.height, clip.width));
  } catch (const Error&) {
    rr_rois.clear();
  }
  if (!rr_rois.empty()) {
    const auto rr = estimate_rr_detail(clip, rr_rois, vitals);
    row.rr_est = rr.per_minute;
    if (rr.low_confidence()) row.flags |= eval::flag::rr_low_confidence;
  }

  if (plot_dir) write_trial_plot(*plot_dir / (entry.trial_id + ".svg"), entry.trial_id, clip, hr_rois, rr_rois, vitals);
  return row;
}

}  // namespace

PipelineConfig dataset_config(const fs::path& dataset_dir) {
  PipelineConfig cfg;
  const auto conf = dataset_dir / "pipeline.conf";
  if (fs::exists(conf)) load_config(cfg, conf);
  return cfg;
}

std::vector<EstimateRow> run_estimate(const fs::path& dataset_dir, const PipelineConfig& cfg,
                                      const std::optional<fs::path>& plot_dir) {
  const auto manifest_path = dataset_dir / "manifest.txt";
  const auto manifest = read_manifest(manifest_path);
  validate_manifest(manifest);
  validate_config(cfg, manifest.fps, 0.0);

  RoiSource roi_source =
      cfg.manual_roi ? RoiSource::fixed(*cfg.manual_roi) : RoiSource::detector(load_cascade(*cfg.cascade), cfg.detect);

  const int jobs = effective_jobs(cfg);
  VitalsConfig vitals = cfg.vitals;
  // Trial-level threads already fill the machine; keep the kernels serial then.
  if (jobs > 1) vitals.exec = Exec::serial;

  if (plot_dir) {
    std::error_code ec;
    fs::create_directories(*plot_dir, ec);
    if (ec) throw Error("cannot create " + plot_dir->string() + ": " + ec.message());
  }

  std::vector<EstimateRow> rows(manifest.entries.size());
  for_each_ordered(rows.size(), jobs, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    try {
      rows[i] = estimate_trial(manifest_path, entry, cfg, roi_source, vitals, plot_dir);
    } catch (const Error& e) {
      throw Error("trial " + entry.trial_id + ": " + e.what());
    }
  });
  return rows;
}

std::vector<GroundTruthRow> run_groundtruth(const fs::path& dataset_dir, const PipelineConfig& cfg) {
  const auto manifest = read_manifest(dataset_dir / "manifest.txt");
  validate_manifest(manifest);
  const auto physio = load_physio_csv(dataset_dir / "physio.csv");
  validate_config(cfg, 0.0, physio.sample_rate);
  const auto ranges = eval::segment_trials(physio, manifest, manifest.fps);

  std::vector<GroundTruthRow> rows(ranges.size());
  for_each_ordered(rows.size(), effective_jobs(cfg), [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    const auto& r = ranges[i];
    GroundTruthRow row{entry.trial_id, entry.condition, entry.task_id, std::nullopt, std::nullopt, 0};
    if (entry.hold_breath()) row.flags |= eval::flag::hold_breath_excluded;
    try {
      const auto ecg = eval::slice(physio.ecg, r.physio_start, r.physio_count);
      const auto resp = eval::slice(physio.resp, r.physio_start, r.physio_count);
      // An ECG without detectable beats has no usable truth; flag it instead of failing the run.
      try {
        const auto hr = gt_hr_detail(ecg, cfg.groundtruth);
        row.hr_gt = hr.estimate.per_minute;
        if (hr.out_of_band) row.flags |= eval::flag::hr_out_of_band;
      } catch (const Error&) {
        row.flags |= eval::flag::hr_out_of_band;
      }
      const auto rr = gt_rr_detail(resp, cfg.groundtruth);
      row.rr_gt = rr.estimate.per_minute;
      if (rr.out_of_band) row.flags |= eval::flag::rr_out_of_band;
    } catch (const Error& e) {
      throw Error("trial " + entry.trial_id + ": " + e.what());
    }
    rows[i] = std::move(row);
  });
  return rows;
}

std::vector<eval::TrialRecord> join(std::span<const EstimateRow> estimates, std::span<const GroundTruthRow> truth) {
  std::map<std::string, const GroundTruthRow*> by_id;
  for (const auto& t : truth) {
    if (!by_id.emplace(t.trial_id, &t).second) throw Error("duplicate trial '" + t.trial_id + "' in ground truth");
  }
  std::map<std::string, eval::SkinAccumulator> skin;
  std::map<std::string, int> seen;
  for (const auto& e : estimates) {
    if (++seen[e.trial_id] > 1) throw Error("duplicate trial '" + e.trial_id + "' in estimates");
    if (!by_id.contains(e.trial_id)) throw Error("trial '" + e.trial_id + "' has estimates but no ground truth");
    if (e.face_pixels > 0) skin[eval::participant_of(e.trial_id)].add(e.face_gray, e.face_pixels);
  }
  for (const auto& t : truth) {
    if (!seen.contains(t.trial_id)) throw Error("trial '" + t.trial_id + "' has ground truth but no estimates");
  }

  std::vector<eval::TrialRecord> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates) {
    const auto& t = *by_id.at(e.trial_id);
    if (t.condition != e.condition || t.task_id != e.task_id) {
      throw Error("trial '" + e.trial_id + "' has different condition/task in estimates and ground truth");
    }
    eval::TrialRecord r;
    r.trial_id = e.trial_id;
    r.condition = e.condition;
    r.task_id = e.task_id;
    r.hr_est = e.hr_est;
    r.rr_est = e.rr_est;
    r.hr_gt = t.hr_gt;
    r.rr_gt = t.rr_gt;
    const auto it = skin.find(eval::participant_of(e.trial_id));
    r.skin_gray = it != skin.end() ? it->second.mean() : 0.0;
    r.flags = e.flags | t.flags;
    out.push_back(std::move(r));
  }
  return out;
}

void write_estimates_csv(const fs::path& path, std::span<const EstimateRow> rows) {
  std::ostringstream out;
  out << kEstimateHeader << '\n';
  for (const auto& r : rows) {
    out << r.trial_id << ',' << to_string(r.condition) << ',' << r.task_id << ',' << opt_number(r.hr_est) << ','
        << opt_number(r.rr_est) << ',' << text::format_number(r.face_gray) << ',' << r.face_pixels << ','
        << eval::format_flags(r.flags) << '\n';
  }
  write_text(path, out.str());
}

std::vector<EstimateRow> read_estimates_csv(const fs::path& path) {
  std::vector<EstimateRow> rows;
  read_csv(path, kEstimateHeader, 8, [&](const std::vector<std::string_view>& f) {
    EstimateRow r;
    r.trial_id = std::string(text::trim(f[0]));
    r.condition = parse_condition(f[1]);
    r.task_id = static_cast<int>(text::parse_long(f[2], "task"));
    r.hr_est = parse_opt(f[3]);
    r.rr_est = parse_opt(f[4]);
    r.face_gray = text::parse_double(f[5], "face_gray");
    r.face_pixels = text::parse_long(f[6], "face_pixels");
    r.flags = eval::parse_flags(f[7]);
    rows.push_back(std::move(r));
  });
  return rows;
}

void write_groundtruth_csv(const fs::path& path, std::span<const GroundTruthRow> rows) {
  std::ostringstream out;
  out << kTruthHeader << '\n';
  for (const auto& r : rows) {
    out << r.trial_id << ',' << to_string(r.condition) << ',' << r.task_id << ',' << opt_number(r.hr_gt) << ','
        << opt_number(r.rr_gt) << ',' << eval::format_flags(r.flags) << '\n';
  }
  write_text(path, out.str());
}

std::vector<GroundTruthRow> read_groundtruth_csv(const fs::path& path) {
  std::vector<GroundTruthRow> rows;
  read_csv(path, kTruthHeader, 6, [&](const std::vector<std::string_view>& f) {
    GroundTruthRow r;
    r.trial_id = std::string(text::trim(f[0]));
    r.condition = parse_condition(f[1]);
    r.task_id = static_cast<int>(text::parse_long(f[2], "task"));
    r.hr_gt = parse_opt(f[3]);
    r.rr_gt = parse_opt(f[4]);
    r.flags = eval::parse_flags(f[5]);
    rows.push_back(std::move(r));
  });
  return rows;
}

}  // namespace rppg::pipeline

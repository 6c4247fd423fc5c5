#include "rppg/config.hpp"

#include <fstream>
#include <thread>

#include "rppg/text.hpp"

namespace fs = std::filesystem;

namespace rppg {

namespace {

std::vector<double> numbers(std::string_view value, std::size_t count, std::string_view key) {
  const auto parts = text::split(value, ',');
  if (parts.size() != count) {
    throw Error("'" + std::string(key) + "' needs " + std::to_string(count) + " comma-separated values");
  }
  std::vector<double> out;
  for (const auto p : parts) out.push_back(text::parse_double(p, key));
  return out;
}

int whole(double v, std::string_view key) {
  if (v != static_cast<double>(static_cast<int>(v))) throw Error("'" + std::string(key) + "' must be an integer");
  return static_cast<int>(v);
}

dsp::StftSpec stft_spec(std::string_view value, std::string_view key) {
  const auto v = numbers(value, 3, key);
  return {whole(v[0], key), whole(v[1], key), whole(v[2], key)};
}

}  // namespace

Rect parse_manual_roi(std::string_view spec) {
  spec = text::trim(spec);
  constexpr std::string_view prefix = "manual:";
  if (spec.substr(0, prefix.size()) == prefix) spec.remove_prefix(prefix.size());
  const auto v = numbers(spec, 4, "roi");
  Rect r{whole(v[0], "roi"), whole(v[1], "roi"), whole(v[2], "roi"), whole(v[3], "roi")};
  if (r.empty() || r.x < 0 || r.y < 0) throw Error("manual ROI must have non-negative origin and positive size");
  return r;
}

Scalarization parse_scalarization(std::string_view s) {
  s = text::trim(s);
  if (s == "spherical_log_map") return Scalarization::spherical_log_map;
  if (s == "green_chromaticity") return Scalarization::green_chromaticity;
  throw Error("unknown scalarization '" + std::string(s) + "'");
}

std::string_view to_string(Scalarization s) {
  return s == Scalarization::spherical_log_map ? "spherical_log_map" : "green_chromaticity";
}

void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value, const fs::path& base_dir) {
  key = text::trim(key);
  value = text::trim(value);
  if (key == "crop") {
    const auto v = numbers(value, 4, key);
    cfg.crop = {whole(v[0], key), whole(v[1], key), whole(v[2], key), whole(v[3], key)};
  } else if (key == "cascade") {
    fs::path p{std::string(value)};
    cfg.cascade = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    cfg.manual_roi.reset();
  } else if (key == "roi") {
    cfg.manual_roi = parse_manual_roi(value);
    cfg.cascade.reset();
  } else if (key == "hr_band") {
    const auto v = numbers(value, 2, key);
    cfg.vitals.hr_band = {v[0], v[1]};
    cfg.groundtruth.hr_band = {v[0], v[1]};
  } else if (key == "rr_band") {
    const auto v = numbers(value, 2, key);
    cfg.vitals.rr_band = {v[0], v[1]};
    cfg.groundtruth.rr_band = {v[0], v[1]};
  } else if (key == "filter_order") {
    const int order = whole(text::parse_double(value, key), key);
    cfg.vitals.filter_order = order;
    cfg.groundtruth.filter_order = order;
  } else if (key == "video_stft") {
    cfg.vitals.stft = stft_spec(value, key);
  } else if (key == "physio_stft") {
    cfg.groundtruth.stft = stft_spec(value, key);
  } else if (key == "scalarization") {
    cfg.vitals.scalarization = parse_scalarization(value);
  } else if (key == "scale_factor") {
    cfg.detect.scale_factor = text::parse_double(value, key);
  } else if (key == "min_neighbors") {
    cfg.detect.min_neighbors = whole(text::parse_double(value, key), key);
  } else if (key == "min_size") {
    cfg.detect.min_size = whole(text::parse_double(value, key), key);
  } else if (key == "jobs") {
    cfg.jobs = whole(text::parse_double(value, key), key);
  } else {
    throw Error("unknown config key '" + std::string(key) + "'");
  }
}

void load_config(PipelineConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (const auto hash = t.find('#'); hash != std::string_view::npos) t = text::trim(t.substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(cfg, t.substr(0, eq), t.substr(eq + 1), path.parent_path());
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void validate_config(const PipelineConfig& cfg, double video_rate, double physio_rate) {
  if (cfg.cascade.has_value() == cfg.manual_roi.has_value()) {
    throw Error("exactly one ROI source is required: set either 'cascade' or 'roi = manual:x,y,w,h'");
  }
  auto check_band = [](dsp::Band b, double rate, const char* what) {
    if (!(b.low_hz > 0.0 && b.low_hz < b.high_hz && b.high_hz < rate / 2.0)) {
      throw Error(std::string(what) + " is infeasible at " + std::to_string(rate) + " Hz");
    }
  };
  if (video_rate > 0.0) {
    check_band(cfg.vitals.hr_band, video_rate, "hr_band");
    check_band(cfg.vitals.rr_band, video_rate, "rr_band");
  }
  if (physio_rate > 0.0) {
    check_band(cfg.groundtruth.hr_band, physio_rate, "hr_band");
    check_band(cfg.groundtruth.rr_band, physio_rate, "rr_band");
  }
  if (cfg.jobs < 0) throw Error("jobs must be non-negative");
}

int effective_jobs(const PipelineConfig& cfg) {
  if (cfg.jobs > 0) return cfg.jobs;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace rppg

#include "rppg/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "rppg/text.hpp"

namespace fs = std::filesystem;

namespace rppg {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::respiration: return "respiration";
    case Condition::workout: return "workout";
    case Condition::gaze: return "gaze";
  }
  return "?";
}

Condition parse_condition(std::string_view s) {
  s = text::trim(s);
  if (s == "respiration") return Condition::respiration;
  if (s == "workout") return Condition::workout;
  if (s == "gaze") return Condition::gaze;
  throw Error("unknown condition '" + std::string(s) + "'");
}

const TrialEntry& TrialManifest::find(std::string_view trial_id) const {
  for (const auto& e : entries) {
    if (e.trial_id == trial_id) return e;
  }
  throw Error("unknown trial id '" + std::string(trial_id) + "'");
}

void validate_manifest(const TrialManifest& m) {
  if (!(m.fps > 0.0)) throw Error("manifest: fps must be positive");
  if (m.width <= 0 || m.height <= 0) throw Error("manifest: frame dimensions must be positive");
  if (m.frame_count < 1) throw Error("manifest: frame count must be at least 1");
  std::set<std::string> ids;
  std::set<int> codes;
  std::vector<std::pair<long, long>> ranges;
  for (const auto& e : m.entries) {
    if (e.trial_id.empty()) throw Error("manifest: empty trial id");
    if (e.trial_id.find_first_of(", \t") != std::string::npos) {
      throw Error("manifest: trial id '" + e.trial_id + "' contains a separator");
    }
    if (!ids.insert(e.trial_id).second) throw Error("manifest: duplicate trial id " + e.trial_id);
    if (e.task_id < 1 || e.task_id > 7) throw Error("manifest: task id out of range in " + e.trial_id);
    if (e.frame_count <= 0) throw Error("manifest: empty trial " + e.trial_id);
    if (e.start_frame < 0 || e.start_frame + e.frame_count > m.frame_count) {
      throw Error("manifest: trial " + e.trial_id + " exceeds the frame range");
    }
    if (e.trigger_code <= 0) throw Error("manifest: trigger code must be positive in " + e.trial_id);
    if (!codes.insert(e.trigger_code).second) {
      throw Error("manifest: duplicate trigger code in " + e.trial_id);
    }
    ranges.emplace_back(e.start_frame, e.start_frame + e.frame_count);
  }
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].first < ranges[i - 1].second) throw Error("manifest: overlapping trials");
  }
}

TrialManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  TrialManifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const auto key = text::trim(t.substr(0, eq));
    const auto value = text::trim(t.substr(eq + 1));
    try {
      if (key == "fps") {
        m.fps = text::parse_double(value, "fps");
      } else if (key == "width") {
        m.width = static_cast<int>(text::parse_long(value, "width"));
      } else if (key == "height") {
        m.height = static_cast<int>(text::parse_long(value, "height"));
      } else if (key == "frames") {
        m.frame_count = text::parse_long(value, "frames");
      } else if (key == "trial") {
        const auto f = text::split(value, ',');
        if (f.size() != 6) throw Error("trial line needs 6 fields");
        TrialEntry e;
        e.trial_id = std::string(text::trim(f[0]));
        e.condition = parse_condition(f[1]);
        e.task_id = static_cast<int>(text::parse_long(f[2], "task"));
        e.start_frame = text::parse_long(f[3], "start frame");
        e.frame_count = text::parse_long(f[4], "frame count");
        e.trigger_code = static_cast<int>(text::parse_long(f[5], "trigger code"));
        m.entries.push_back(std::move(e));
      } else {
        throw Error("unknown key '" + std::string(key) + "'");
      }
    } catch (const Error& err) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + err.what());
    }
  }
  validate_manifest(m);
  return m;
}

void write_manifest(const fs::path& path, const TrialManifest& m) {
  validate_manifest(m);
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << "fps=" << text::format_number(m.fps) << "\n"
      << "width=" << m.width << "\n"
      << "height=" << m.height << "\n"
      << "frames=" << m.frame_count << "\n";
  for (const auto& e : m.entries) {
    out << "trial=" << e.trial_id << ',' << to_string(e.condition) << ',' << e.task_id << ','
        << e.start_frame << ',' << e.frame_count << ',' << e.trigger_code << "\n";
  }
  if (!out) throw Error("write failed: " + path.string());
}

fs::path frame_path(const fs::path& dir, long index) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06ld.ppm", index);
  return dir / name;
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string ppm_token(std::istream& in, const fs::path& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  throw Error("malformed PPM header in " + path.string());
}

long ppm_int(std::istream& in, const fs::path& path) {
  const auto tok = ppm_token(in, path);
  try {
    return text::parse_long(tok);
  } catch (const Error&) {
    throw Error("malformed PPM header in " + path.string());
  }
}

}  // namespace

RgbFrame read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open frame " + path.string());
  if (ppm_token(in, path) != "P6") throw Error("not a binary P6 PPM: " + path.string());
  const long w = ppm_int(in, path);
  const long h = ppm_int(in, path);
  const long maxval = ppm_int(in, path);
  if (w <= 0 || h <= 0 || w > 65535 || h > 65535) {
    throw Error("malformed PPM header in " + path.string());
  }
  if (maxval != 255) throw Error("unsupported PPM maxval " + std::to_string(maxval) + " in " + path.string());
  // ppm_token consumed exactly one whitespace byte after maxval.
  const std::size_t n = static_cast<std::size_t>(w) * h * 3;
  std::vector<unsigned char> bytes(n);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw Error("truncated PPM data in " + path.string());
  RgbFrame f(static_cast<int>(w), static_cast<int>(h));
  std::copy(bytes.begin(), bytes.end(), f.data.begin());
  return f;
}

namespace {

unsigned char to_byte(float v) {
  const float r = std::nearbyint(v);
  return static_cast<unsigned char>(std::clamp(r, 0.0f, 255.0f));
}

}  // namespace

void write_ppm(const fs::path& path, const RgbFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write frame " + path.string());
  out << "P6\n" << frame.width << ' ' << frame.height << "\n255\n";
  std::vector<unsigned char> bytes(frame.data.size());
  std::transform(frame.data.begin(), frame.data.end(), bytes.begin(), to_byte);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

VideoClip read_ppm_range(const fs::path& manifest_path, long start, long count) {
  const auto m = read_manifest(manifest_path);
  if (start < 0 || count < 1 || start + count > m.frame_count) {
    throw Error("frame range outside the dataset described by " + manifest_path.string());
  }
  const auto dir = manifest_path.parent_path();
  VideoClip clip;
  clip.width = m.width;
  clip.height = m.height;
  clip.fps = m.fps;
  clip.frames.reserve(static_cast<std::size_t>(count));
  for (long i = start; i < start + count; ++i) {
    const auto p = frame_path(dir, i);
    auto f = read_ppm(p);
    if (f.width != m.width || f.height != m.height) {
      throw Error("dimension mismatch in " + p.string() + ": " + std::to_string(f.width) + "x" +
                  std::to_string(f.height) + ", manifest declares " + std::to_string(m.width) + "x" +
                  std::to_string(m.height));
    }
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

VideoClip read_ppm_sequence(const fs::path& manifest_path) {
  const auto m = read_manifest(manifest_path);
  return read_ppm_range(manifest_path, 0, m.frame_count);
}

VideoClip read_raw_rgb(const fs::path& path, int width, int height, double fps) {
  if (width <= 0 || height <= 0) throw Error("raw RGB: zero dimensions");
  if (!(fps > 0.0)) throw Error("raw RGB: fps must be positive");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t frame_bytes = static_cast<std::size_t>(width) * height * 3;
  if (bytes.empty() || bytes.size() % frame_bytes != 0) {
    throw Error("raw RGB: " + std::to_string(bytes.size()) + " bytes is not a multiple of the " +
                std::to_string(frame_bytes) + "-byte frame size");
  }
  VideoClip clip;
  clip.width = width;
  clip.height = height;
  clip.fps = fps;
  for (std::size_t off = 0; off < bytes.size(); off += frame_bytes) {
    RgbFrame f(width, height);
    std::copy(bytes.begin() + static_cast<long>(off), bytes.begin() + static_cast<long>(off + frame_bytes),
              f.data.begin());
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

void write_raw_rgb(const fs::path& path, const VideoClip& clip) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::vector<unsigned char> bytes;
  for (const auto& f : clip.frames) {
    bytes.resize(f.data.size());
    std::transform(f.data.begin(), f.data.end(), bytes.begin(), to_byte);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw Error("write failed: " + path.string());
}

VideoClip crop_clip(const VideoClip& clip, const CropMargins& m) {
  if (m.left < 0 || m.right < 0 || m.top < 0 || m.bottom < 0) throw Error("crop: negative margin");
  if (m.left + m.right >= clip.width || m.top + m.bottom >= clip.height) {
    throw Error("crop (" + std::to_string(m.left) + "," + std::to_string(m.right) + "," +
                std::to_string(m.top) + "," + std::to_string(m.bottom) + ") exceeds frame " +
                std::to_string(clip.width) + "x" + std::to_string(clip.height));
  }
  VideoClip out;
  out.width = clip.width - m.left - m.right;
  out.height = clip.height - m.top - m.bottom;
  out.fps = clip.fps;
  out.frames.reserve(clip.frames.size());
  for (const auto& f : clip.frames) {
    RgbFrame c(out.width, out.height);
    for (int y = 0; y < out.height; ++y) {
      const float* src = f.pixel(m.left, y + m.top);
      std::copy(src, src + static_cast<std::size_t>(out.width) * 3, c.pixel(0, y));
    }
    out.frames.push_back(std::move(c));
  }
  return out;
}

GrayFrame to_grayscale(const RgbFrame& frame) {
  GrayFrame g(frame.width, frame.height);
  const std::size_t n = g.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    const float* p = frame.data.data() + i * 3;
    g.data[i] = luma(p[0], p[1], p[2]);
  }
  return g;
}

std::vector<GrayFrame> to_grayscale(const VideoClip& clip) {
  std::vector<GrayFrame> out;
  out.reserve(clip.frames.size());
  for (const auto& f : clip.frames) out.push_back(to_grayscale(f));
  return out;
}

PhysioRecord load_physio_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open physio CSV " + path.string());
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "t,ecg,resp,trigger") {
    throw Error(path.string() + ": expected header 't,ecg,resp,trigger'");
  }
  std::vector<double> t;
  PhysioRecord rec;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 4) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected 4 columns");
    }
    try {
      t.push_back(text::parse_double(f[0], "time"));
      rec.ecg.samples.push_back(text::parse_double(f[1], "ecg value"));
      rec.resp.samples.push_back(text::parse_double(f[2], "resp value"));
      rec.trigger.push_back(static_cast<int>(text::parse_long(f[3], "trigger code")));
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (t.size() < 2) throw Error(path.string() + ": need at least two samples");
  const double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw Error(path.string() + ": time column must be strictly increasing");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-6) {
      throw Error(path.string() + ": non-uniform time step at row " + std::to_string(i + 2));
    }
  }
  double rate = static_cast<double>(t.size() - 1) / (t.back() - t.front());
  if (std::abs(rate - std::round(rate)) < 1e-6 * rate) rate = std::round(rate);
  rec.sample_rate = rate;
  rec.ecg.sample_rate = rate;
  rec.resp.sample_rate = rate;
  return rec;
}

void write_physio_csv(const fs::path& path, const PhysioRecord& rec) {
  if (rec.resp.size() != rec.ecg.size() || rec.trigger.size() != rec.ecg.size()) {
    throw Error("physio channels differ in length");
  }
  if (!(rec.sample_rate > 0.0)) throw Error("physio sample rate must be positive");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "t,ecg,resp,trigger\n";
  for (std::size_t i = 0; i < rec.ecg.size(); ++i) {
    out << text::format_number(static_cast<double>(i) / rec.sample_rate) << ','
        << text::format_number(rec.ecg.samples[i]) << ',' << text::format_number(rec.resp.samples[i]) << ','
        << rec.trigger[i] << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace rppg

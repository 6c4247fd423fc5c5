#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "rppg/types.hpp"

namespace test_support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rppg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline rppg::GrayFrame random_gray(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  rppg::GrayFrame g(w, h);
  for (auto& v : g.data) v = static_cast<std::uint8_t>(d(rng));
  return g;
}

inline rppg::VideoClip random_clip(int w, int h, int frames, std::uint32_t seed, double fps = 30.0) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  rppg::VideoClip clip{w, h, fps, {}};
  for (int f = 0; f < frames; ++f) {
    rppg::RgbFrame fr(w, h);
    for (auto& v : fr.data) v = static_cast<float>(d(rng));
    clip.frames.push_back(std::move(fr));
  }
  return clip;
}

}  // namespace test_support

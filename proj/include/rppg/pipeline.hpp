#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rppg/config.hpp"
#include "rppg/eval.hpp"

// The three dataset workflows behind the command line: video estimates,
// physiological ground truth, and the joined evaluation.
namespace rppg::pipeline {

struct EstimateRow {
  std::string trial_id;
  Condition condition = Condition::respiration;
  int task_id = 1;
  std::optional<double> hr_est;
  std::optional<double> rr_est;
  double face_gray = 0.0;  // pixel-weighted mean gray of the face box
  long face_pixels = 0;
  unsigned flags = 0;

  friend bool operator==(const EstimateRow&, const EstimateRow&) = default;
};

struct GroundTruthRow {
  std::string trial_id;
  Condition condition = Condition::respiration;
  int task_id = 1;
  std::optional<double> hr_gt;
  std::optional<double> rr_gt;
  unsigned flags = 0;

  friend bool operator==(const GroundTruthRow&, const GroundTruthRow&) = default;
};

/// Reads `dataset_dir/pipeline.conf` (if present) into a default config.
PipelineConfig dataset_config(const std::filesystem::path& dataset_dir);

/// Streams the trials of `dataset_dir/manifest.txt` through ROI tracking and
/// the HR/RR estimators, `jobs` trials at a time, in manifest order. With a
/// plot directory, one `<trial_id>.svg` of the intermediate signals is
/// written per trial.
std::vector<EstimateRow> run_estimate(const std::filesystem::path& dataset_dir, const PipelineConfig& cfg,
                                      const std::optional<std::filesystem::path>& plot_dir = std::nullopt);

/// Segments `dataset_dir/physio.csv` by trigger code and derives HR/RR truth.
std::vector<GroundTruthRow> run_groundtruth(const std::filesystem::path& dataset_dir, const PipelineConfig& cfg);

/// Inner join on trial_id; an id present on one side only is an error.
/// Skin gray is the pixel-weighted face gray of each participant.
std::vector<eval::TrialRecord> join(std::span<const EstimateRow> estimates, std::span<const GroundTruthRow> truth);

void write_estimates_csv(const std::filesystem::path& path, std::span<const EstimateRow> rows);
std::vector<EstimateRow> read_estimates_csv(const std::filesystem::path& path);
void write_groundtruth_csv(const std::filesystem::path& path, std::span<const GroundTruthRow> rows);
std::vector<GroundTruthRow> read_groundtruth_csv(const std::filesystem::path& path);

}  // namespace rppg::pipeline

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rppg/ingest.hpp"
#include "rppg/types.hpp"

namespace rppg::eval {

struct TrialRange {
  std::string trial_id;
  long frame_start = 0;
  long frame_count = 0;
  long physio_start = 0;
  long physio_count = 0;
};

/// Locates each manifest trigger code in the physio trigger channel. Physio
/// length is frame_count / fps · sample_rate, rounded.
std::vector<TrialRange> segment_trials(const PhysioRecord& physio, const TrialManifest& manifest, double fps);

/// Copies the physio samples of one trial.
TimeSeries slice(const TimeSeries& x, long start, long count);

double rmse(std::span<const std::pair<double, double>> pairs);

/// Running pixel-weighted mean of face gray values.
struct SkinAccumulator {
  double sum = 0.0;
  long pixels = 0;

  void add(double mean_gray, long count) {
    sum += mean_gray * static_cast<double>(count);
    pixels += count;
  }
  double mean() const;
};

/// Mean Rec.601 gray over the face ROI of every frame.
SkinAccumulator skin_tone_sum(const VideoClip& clip, std::span<const Rect> face_rois);
double skin_tone_gray(const VideoClip& clip, std::span<const Rect> face_rois);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci95_slope = 0.0;      // half-widths
  double ci95_intercept = 0.0;
  std::size_t n = 0;
  double residual_se = 0.0;
  double x_mean = 0.0;
  double sxx = 0.0;
  double t_crit = 0.0;

  double predict(double x) const { return intercept + slope * x; }
  /// Half-width of the pointwise 95% interval of the mean response at x.
  double ci95_mean(double x) const;
};

/// Ordinary least squares with t(n−2) confidence intervals.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct BoxStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  std::vector<double> outliers;
};

/// Inclusive linear-interpolation quartiles; whiskers at the most extreme
/// values within 1.5·IQR of the quartiles.
BoxStats boxplot_stats(std::span<const double> values);

namespace flag {
inline constexpr unsigned hr_out_of_band = 1u << 0;
inline constexpr unsigned rr_out_of_band = 1u << 1;
inline constexpr unsigned hold_breath_excluded = 1u << 2;
inline constexpr unsigned roi_failure = 1u << 3;
inline constexpr unsigned hr_low_confidence = 1u << 4;
inline constexpr unsigned rr_low_confidence = 1u << 5;
}  // namespace flag

std::string format_flags(unsigned flags);
unsigned parse_flags(std::string_view s);

struct TrialRecord {
  std::string trial_id;
  Condition condition = Condition::respiration;
  int task_id = 1;
  std::optional<double> hr_est, hr_gt;
  std::optional<double> rr_est, rr_gt;
  double skin_gray = 0.0;
  unsigned flags = 0;

  bool hr_scored() const;
  bool rr_scored() const;
  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Participant key of a trial id: the text before the first '-' ("P03-T012"
/// → "P03"); ids without '-' all belong to one participant.
std::string participant_of(std::string_view trial_id);

struct ParticipantScore {
  std::string participant;
  Condition condition = Condition::respiration;
  double skin_gray = 0.0;
  std::optional<double> hr_rmse;
  std::optional<double> rr_rmse;
  std::size_t hr_trials = 0;
  std::size_t rr_trials = 0;
};

struct ConditionBox {
  std::string measure;  // "hr" or "rr"
  Condition condition = Condition::respiration;
  std::size_t participants = 0;
  std::size_t trials = 0;
  BoxStats stats;
  double pooled_rmse = 0.0;  // over all scored trials of the condition
};

struct EvaluationReport {
  std::vector<ParticipantScore> participants;
  std::vector<ConditionBox> boxes;
  std::optional<LinearFit> skin_fit;  // HR RMSE vs skin gray
  std::vector<std::pair<double, double>> skin_points;
  std::vector<std::string> skin_point_participants;
  std::vector<Condition> skin_point_conditions;
};

/// Per-participant RMSE per condition, boxplots over participants, and the
/// skin-gray regression of HR RMSE.
EvaluationReport evaluate(std::span<const TrialRecord> records);

void write_trials_csv(const std::filesystem::path& path, std::span<const TrialRecord> records);
std::vector<TrialRecord> read_trials_csv(const std::filesystem::path& path);

/// trials.csv, participants.csv, summary.csv, hr_boxplot.svg, rr_boxplot.svg,
/// skin_scatter.svg.
EvaluationReport emit_report(std::span<const TrialRecord> records, const std::filesystem::path& out_dir);

// SVG writers (report.cpp).
std::string boxplot_svg(const std::string& title, const std::string& unit, std::span<const ConditionBox> boxes);
std::string scatter_svg(const EvaluationReport& report);

struct PlotSeries {
  std::string label;
  std::vector<double> values;
  double sample_rate = 1.0;
};
/// Stacked line plots sharing a time axis, one panel per series.
std::string signal_plot_svg(const std::string& title, std::span<const PlotSeries> series);

}  // namespace rppg::eval

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rppg/config.hpp"
#include "rppg/detect.hpp"
#include "rppg/eval.hpp"
#include "rppg/pipeline.hpp"
#include "rppg/synth.hpp"

namespace fs = std::filesystem;
using namespace rppg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 0;
};

struct SynthArgs {
  std::string protocol = "single";
  double hr = 72.0;
  double rr = 15.0;
  double duration = 20.0;
  double tone = 1.0;
  int participants = 1;
  std::vector<double> tones{0.4, 0.55, 0.7, 0.85, 1.0};
  int seeds_per_tone = 4;
  synth::SynthConfig scene;
};

struct EstimateArgs {
  std::string dataset;
  std::string roi;
  std::string cascade;
  std::string scalarization;
  std::string plot_dir;
};

struct UsageError : Error {
  using Error::Error;
};

void require_out(const Globals& g) {
  if (g.out.empty()) throw UsageError("--out is required");
}

PipelineConfig build_config(const Globals& g, const fs::path& dataset, const EstimateArgs* est) {
  PipelineConfig cfg;
  if (!g.config.empty()) {
    load_config(cfg, g.config);
  } else if (!dataset.empty()) {
    cfg = pipeline::dataset_config(dataset);
  }
  if (g.jobs > 0) cfg.jobs = g.jobs;
  if (est) {
    if (!est->roi.empty()) apply_setting(cfg, "roi", est->roi);
    if (!est->cascade.empty()) apply_setting(cfg, "cascade", est->cascade);
    if (!est->scalarization.empty()) apply_setting(cfg, "scalarization", est->scalarization);
  }
  return cfg;
}

int run_synth(const Globals& g, SynthArgs a) {
  require_out(g);
  a.scene.seed = g.seed;
  synth::Protocol protocol;
  if (a.protocol == "single") {
    protocol = synth::single_trial_protocol(a.hr, a.rr, a.duration, a.tone);
  } else if (a.protocol == "paper" || a.protocol == "desk") {
    synth::ProtocolOptions opt;
    opt.participants = a.participants;
    opt.seed = g.seed;
    opt.tones = {a.tone};
    if (a.protocol == "desk") {
      opt.resp_blocks = 2;
      opt.gaze_blocks = 2;
    }
    protocol = synth::paper_protocol(opt);
  } else {
    protocol = synth::tone_sweep_protocol(a.tones, a.seeds_per_tone, a.duration, g.seed);
  }
  synth::synth_dataset(protocol, a.scene, g.out);
  for (const auto c : {Condition::respiration, Condition::workout, Condition::gaze}) {
    std::size_t n = 0;
    for (const auto& t : protocol.trials) n += t.condition == c;
    if (n) std::printf("%-12s %3zu trials  %7.1f s\n", std::string(to_string(c)).c_str(), n, synth::total_duration(protocol, c));
  }
  std::printf("wrote %s\n", g.out.c_str());
  return kExitOk;
}

fs::path estimate_to(const Globals& g, const EstimateArgs& a, const fs::path& out_dir) {
  const auto cfg = build_config(g, a.dataset, &a);
  std::optional<fs::path> plots;
  if (!a.plot_dir.empty()) plots = fs::path(a.plot_dir);
  const auto rows = pipeline::run_estimate(a.dataset, cfg, plots);
  const auto path = out_dir / "estimates.csv";
  pipeline::write_estimates_csv(path, rows);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += (r.flags & eval::flag::roi_failure) != 0;
  std::printf("estimated %zu trials (%zu ROI failures) -> %s\n", rows.size(), failed, path.c_str());
  if (failed == rows.size()) throw rppg::Error("ROI tracking failed in every trial");
  return path;
}

fs::path groundtruth_to(const Globals& g, const fs::path& dataset, const fs::path& out_dir) {
  const auto cfg = build_config(g, dataset, nullptr);
  const auto rows = pipeline::run_groundtruth(dataset, cfg);
  const auto path = out_dir / "groundtruth.csv";
  pipeline::write_groundtruth_csv(path, rows);
  std::printf("ground truth for %zu trials -> %s\n", rows.size(), path.c_str());
  return path;
}

void evaluate_to(const fs::path& estimates, const fs::path& truth, const fs::path& out_dir) {
  const auto records = pipeline::join(pipeline::read_estimates_csv(estimates), pipeline::read_groundtruth_csv(truth));
  const auto rep = eval::emit_report(records, out_dir);
  for (const auto& b : rep.boxes) {
    std::printf("%s %-12s participants=%zu trials=%zu median_rmse=%.3f pooled_rmse=%.3f\n", b.measure.c_str(),
                std::string(to_string(b.condition)).c_str(), b.participants, b.trials, b.stats.median, b.pooled_rmse);
  }
  if (rep.skin_fit) {
    std::printf("hr_rmse ~ skin_gray: slope=%.5f (95%% CI +/- %.5f) intercept=%.3f\n", rep.skin_fit->slope,
                rep.skin_fit->ci95_slope, rep.skin_fit->intercept);
  }
  std::printf("report -> %s\n", out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Webcam heart-rate and respiration-rate estimation"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Pipeline config file (default: <dataset>/pipeline.conf when present)");
  app.add_option("--seed", g.seed, "Base seed for synthetic data");
  app.add_option("--out", g.out, "Output directory (output file for convert-cascade)");
  app.add_option("--jobs", g.jobs, "Worker threads; 0 uses every hardware thread")->check(CLI::NonNegativeNumber);

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic dataset with known HR/RR");
  synth_cmd->add_option("--protocol", sa.protocol, "single | desk | paper | tone-sweep")
      ->check(CLI::IsMember({"single", "desk", "paper", "tone-sweep"}));
  synth_cmd->add_option("--hr", sa.hr, "Heart rate (bpm), single protocol")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--rr", sa.rr, "Respiration rate (breaths/min), single protocol")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--duration", sa.duration, "Trial length (s), single and tone-sweep")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--tone", sa.tone, "Skin brightness multiplier in (0,1]")->check(CLI::Range(0.01, 1.0));
  synth_cmd->add_option("--participants", sa.participants, "Participants, desk/paper protocols")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--tones", sa.tones, "Skin tones, tone-sweep protocol")->delimiter(',');
  synth_cmd->add_option("--seeds-per-tone", sa.seeds_per_tone, "Participants per tone, tone-sweep protocol")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--width", sa.scene.width, "Frame width (px)")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--height", sa.scene.height, "Frame height (px)")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--fps", sa.scene.fps, "Frame rate (Hz)")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--noise", sa.scene.noise_sigma, "Gaussian pixel noise sigma (gray levels)")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_flag("--quantize", sa.scene.quantize, "Round rendered pixels to integers (frames on disk are always 8-bit)");
  synth_cmd->add_option("--blur", sa.scene.blur_radius, "Box blur radius (px)")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--pulse-amp", sa.scene.pulse_amp, "Relative red-channel pulse amplitude")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--chest-amp", sa.scene.chest_amp, "Chest edge travel (px)")->check(CLI::NonNegativeNumber);

  EstimateArgs ea;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate HR/RR per trial from video; writes estimates.csv");
  est_cmd->add_option("--dataset", ea.dataset, "Dataset directory (manifest.txt, frames)")->required();
  est_cmd->add_option("--roi", ea.roi, "Fixed face box manual:x,y,w,h (overrides config)");
  est_cmd->add_option("--cascade", ea.cascade, "Cascade JSON for face detection (overrides config)");
  est_cmd->add_option("--scalarization", ea.scalarization, "spherical_log_map | green_chromaticity");
  est_cmd->add_option("--plot-dir", ea.plot_dir, "Write per-trial signal plots here");

  std::string gt_dataset;
  auto* gt_cmd = app.add_subcommand("groundtruth", "Derive HR/RR truth from physio.csv; writes groundtruth.csv");
  gt_cmd->add_option("--dataset", gt_dataset, "Dataset directory (manifest.txt, physio.csv)")->required();

  std::string eval_est, eval_gt;
  auto* eval_cmd = app.add_subcommand("evaluate", "Join estimates with ground truth; write the RMSE report");
  eval_cmd->add_option("--estimates", eval_est, "estimates.csv")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--groundtruth", eval_gt, "groundtruth.csv")->required()->check(CLI::ExistingFile);

  EstimateArgs ra;
  auto* run_cmd = app.add_subcommand("run", "estimate + groundtruth + evaluate into one output directory");
  run_cmd->add_option("--dataset", ra.dataset, "Dataset directory")->required();
  run_cmd->add_option("--roi", ra.roi, "Fixed face box manual:x,y,w,h (overrides config)");
  run_cmd->add_option("--cascade", ra.cascade, "Cascade JSON for face detection (overrides config)");
  run_cmd->add_option("--scalarization", ra.scalarization, "spherical_log_map | green_chromaticity");
  run_cmd->add_option("--plot-dir", ra.plot_dir, "Write per-trial signal plots here");

  std::string xml;
  auto* conv_cmd = app.add_subcommand("convert-cascade", "Convert an OpenCV HAAR cascade XML to cascade JSON");
  conv_cmd->add_option("--xml", xml, "OpenCV cascade XML")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_cmd) return run_synth(g, sa);
    require_out(g);
    if (*est_cmd) {
      estimate_to(g, ea, g.out);
    } else if (*gt_cmd) {
      groundtruth_to(g, gt_dataset, g.out);
    } else if (*eval_cmd) {
      evaluate_to(eval_est, eval_gt, g.out);
    } else if (*run_cmd) {
      const auto est = estimate_to(g, ra, g.out);
      const auto gt = groundtruth_to(g, ra.dataset, g.out);
      evaluate_to(est, gt, fs::path(g.out) / "report");
    } else if (*conv_cmd) {
      save_cascade(g.out, convert_opencv_cascade(xml));
      std::printf("wrote %s\n", g.out.c_str());
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

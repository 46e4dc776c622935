#pragma once

// Orchestration shared by the CLI and the acceptance suite: each step reads
// fixed-name artifacts from a directory, writes its own artifacts plus
// manifests and a resolved config, and never mutates its inputs.

#include <optional>
#include <string>
#include <vector>

#include "ofm/recon_eval.hpp"
#include "ofm/run_config.hpp"

namespace ofm {

namespace artifact {
inline constexpr const char* kStack = "stack.mrc";
inline constexpr const char* kOrient = "orient.csv";
inline constexpr const char* kModel = "model.ofm";
inline constexpr const char* kHistory = "history.csv";
inline constexpr const char* kPairs = "pairs.csv";
inline constexpr const char* kVolume = "volume.mrc";
inline constexpr const char* kFsc = "fsc.csv";
inline constexpr const char* kReport = "report.csv";
inline constexpr const char* kScatter = "scatter.csv";
inline constexpr const char* kSchedule = "schedule.csv";
inline constexpr const char* kConfig = "run_config.json";
}  // namespace artifact

std::string join_path(const std::string& dir, const std::string& name);

// In-memory dataset exactly as run_simulate would write it.
Dataset simulate_dataset(const RunConfig& cfg);

// Pair set over the first n_train truth orientations per the config's
// pair section.
PairSet pairs_for_config(const RunConfig& cfg, const OrientTable& truth, int n_train);

// stack.mrc + orient.csv + run_config.json under out_dir.
void run_simulate(const RunConfig& cfg, const std::string& out_dir);

// Rebuilds the Dataset from a simulate directory (symmetry and pixel size
// come from the directory's resolved config).
Dataset load_dataset_dir(const std::string& data_dir);

// model.ofm + history.csv + pairs.csv under out_dir.
void run_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir);

// orient.csv (predictions; uncertainty columns for the Qcqp head).
void run_infer(const std::string& data_dir, const std::string& model_path,
               const std::string& out_dir);

// orient.csv restricted to the keep_fraction most confident predictions by
// the named statistic ("trace_stat" or "lambda_max").
void run_filter(const std::string& pred_csv, const std::string& stat, double keep_fraction,
                const std::string& out_dir);

// volume.mrc via Fourier-slice insertion of the stack at the given poses.
void run_reconstruct(const std::string& data_dir, const std::string& orient_csv,
                     const std::string& out_dir);

struct EvalSummary {
  long n_images = 0;
  double median_err = 0;
  std::optional<double> spearman_lambda_max, spearman_trace;
  std::optional<ResolutionResult> resolution;
};

// report.csv (+ scatter.csv with uncertainty columns, + fsc.csv when both
// volume paths are given). Verifies the manifests of every input it reads
// and throws std::runtime_error on a mismatch.
EvalSummary run_evaluate(const std::string& data_dir, const std::string& pred_csv,
                         const std::string& volume_path, const std::string& reference_path,
                         const std::string& out_dir);

// Runs one ablation axis ("head" | "style" | "blur" | "pool") over the given
// seeds on top of the base config and writes a comparison CSV with per-seed
// and median rows of train/val/test errors.
void run_ablate(const std::string& axis, const RunConfig& base,
                const std::vector<uint64_t>& seeds, const std::string& out_dir);

// Convenience used by ablate and the acceptance suite: simulate + train +
// infer on the test split with everything kept in memory; returns final
// train/val median errors from the history plus the test median error.
struct TrendPoint {
  double train_med = 0, val_med = 0, test_med = 0;
};
TrendPoint run_trend_point(const RunConfig& cfg);

}  // namespace ofm

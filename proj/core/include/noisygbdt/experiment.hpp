/*
 * Copyright 2026 The noisygbdt Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Config-driven experiment stages: noise-impact baselines (stage 1), the
// detector x correction grid (stage 2) and aggregated comparison tables
// (stage 3).

#ifndef NOISYGBDT_EXPERIMENT_HPP_
#define NOISYGBDT_EXPERIMENT_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "noisygbdt/correct.hpp"
#include "noisygbdt/data.hpp"
#include "noisygbdt/detect.hpp"
#include "noisygbdt/gbdt.hpp"
#include "noisygbdt/noise.hpp"
#include "noisygbdt/report.hpp"

namespace noisygbdt::experiment {

struct DatasetSpec {
  std::string id;
  std::filesystem::path path;  // resolved against data_dir when relative
  std::string label_column;
};

// adult, breast_cancer, dry_bean, covertype.
std::optional<DatasetSpec> builtin_dataset(const std::string& id);

enum class MonitorKind { kValidation, kTest, kNone };

std::string to_string(MonitorKind kind);
MonitorKind parse_monitor(const std::string& name);

inline constexpr const char* kFirstAfterWarmup = "first_after_warmup";
inline constexpr const char* kEarlyStop = "early_stop";

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSpec dataset;
  std::filesystem::path data_dir;  // empty: $NOISYGBDT_DATA_DIR, then "data"
  data::SplitSpec split;           // seed is derived per trial
  std::vector<noise::NoiseKind> noise_kinds = {noise::NoiseKind::kPair};
  std::vector<double> noise_rates = {0.1, 0.2, 0.3};
  gbdt::BoostConfig boost;
  bool auto_objective = true;  // logistic for binary tasks, softprob otherwise
  std::vector<detect::Method> detectors = {detect::kAllMethods.begin(), detect::kAllMethods.end()};
  std::vector<correct::Mode> corrections = {correct::Mode::kRemove, correct::Mode::kRelabel};
  std::optional<detect::ThresholdPolicy> threshold;  // overrides per-method defaults
  double lrt_epsilon = 1.0;
  std::size_t window = 5;
  double removal_budget = 0.8;
  std::vector<std::string> evaluation_points = {kFirstAfterWarmup, kEarlyStop};
  MonitorKind monitor = MonitorKind::kValidation;
  double validation_fraction = 0.1;
  // Stage-3 aggregation.
  std::vector<double> detection_table_rates = {0.1, 0.2, 0.3};
  noise::NoiseKind classification_kind = noise::NoiseKind::kPair;
  double classification_rate = 0.3;

  std::uint64_t seed = 0;
  int trials = 1;
  std::optional<std::size_t> subsample;
  int jobs = 1;
  std::filesystem::path out = "runs";
  // Optional per-run files: per-instance scores at each evaluation point,
  // per-round dynamics, and the trained model.
  bool dump_scores = false;
  bool dump_dynamics = false;
  bool save_model = true;

  // Throws Error describing the first invalid field.
  void validate() const;
  std::filesystem::path dataset_path() const;
  detect::DetectorConfig detector_config(detect::Method method) const;
};

// Parses a JSON config document; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);
// NOISYGBDT_OUT replaces `out`; NOISYGBDT_DATA_DIR fills an empty data_dir.
void apply_environment(ExperimentConfig& config);

// Seed of trial `trial` (trial 0 uses the base seed).
std::uint64_t trial_seed(const ExperimentConfig& config, int trial);

struct NoiseCell {
  noise::NoiseKind kind = noise::NoiseKind::kPair;
  double rate = 0.0;
  int trial = 0;
};

// One noise realization: clean-label test set, noisy training set and the
// optional noisy monitor carved from it.
struct CellData {
  NoiseCell cell;
  std::uint64_t seed = 0;
  data::Dataset train;
  std::optional<data::Dataset> validation;
  data::Dataset test;
  bool subsampled = false;
};

// Loads the dataset once and prepares noise cells from it.
class Workspace {
 public:
  explicit Workspace(const ExperimentConfig& config);
  Workspace(const ExperimentConfig& config, data::RawTable table);

  CellData prepare(const NoiseCell& cell) const;
  const data::RawTable& table() const { return table_; }

 private:
  const ExperimentConfig& config_;
  data::RawTable table_;
};

struct RunSpec {
  std::optional<detect::Method> detector;  // unset for the uncorrected baseline
  correct::Mode correction = correct::Mode::kNone;
  // Detectors evaluated every round for reporting; defaults to the cell's
  // detector, or every configured detector for the baseline.
  std::optional<std::vector<detect::Method>> tracked;
};

struct RunOutcome {
  report::RunReport report;
  gbdt::TrainResult result;
  std::string metrics_csv;
  std::string dynamics_csv;  // empty unless requested
  std::string model_json;    // empty unless requested
  std::vector<std::pair<std::string, std::string>> score_dumps;  // point -> csv
};

RunOutcome run_cell(const ExperimentConfig& config, const CellData& data, const RunSpec& spec);

// Report files plus metrics.csv and whichever optional outputs are present.
void write_run(const RunOutcome& outcome, const std::filesystem::path& dir);

// Directory names.
std::string cell_dir_name(const NoiseCell& cell);
std::string run_dir_name(const RunSpec& spec);

using Progress = std::function<void(const std::string&)>;

std::vector<report::RunReport> run_stage1(const ExperimentConfig& config, const Progress& progress = {});
std::vector<report::RunReport> run_stage2(const ExperimentConfig& config, const Progress& progress = {});
// Reads stage-2 tables from config.out and writes stage3/tables.csv.
std::vector<report::TableRow> run_stage3(const ExperimentConfig& config, const Progress& progress = {});

// Aggregation used by stage 3, over per-run table rows (all trials).
std::vector<report::TableRow> aggregate_tables(const ExperimentConfig& config,
                                               std::span<const report::TableRow> rows);

}  // namespace noisygbdt::experiment

#endif  // NOISYGBDT_EXPERIMENT_HPP_

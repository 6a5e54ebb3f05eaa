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


// Classification metrics, prediction-type counts and per-run report files.

#ifndef NOISYGBDT_REPORT_HPP_
#define NOISYGBDT_REPORT_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "noisygbdt/common.hpp"
#include "noisygbdt/correct.hpp"
#include "noisygbdt/detect.hpp"

namespace noisygbdt::report {

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Binary tasks score class 1 as positive; multiclass tasks macro-average
// over classes.
ClassificationMetrics classification_metrics(std::span<const ClassId> predicted,
                                             std::span<const ClassId> truth, int class_count);

// Over instances whose clean and noisy labels differ.
struct PredictionTypeCounts {
  std::size_t true_match = 0;
  std::size_t noisy_match = 0;
  std::size_t other = 0;

  std::size_t total() const { return true_match + noisy_match + other; }
};

PredictionTypeCounts prediction_type_counts(std::span<const ClassId> predicted,
                                            std::span<const ClassId> clean,
                                            std::span<const ClassId> noisy);

struct DetectorRound {
  detect::Method method = detect::Method::kAum;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  // Flagged fraction of active instances.
  double estimated_noise_rate = 0.0;
  std::size_t flagged = 0;
  std::size_t flagged_noisy = 0;  // flagged and actually mislabeled
  std::size_t active = 0;
};

struct SeriesRow {
  int round = 0;
  double train_logloss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> monitor_loss;
  std::optional<double> test_logloss;
  std::optional<double> test_accuracy;
  std::size_t removed = 0;
  PredictionTypeCounts types;
  // Detector outputs on the model entering this round; empty when detection
  // is not tracked.
  std::vector<DetectorRound> detectors;
};

struct EvaluationPoint {
  std::string name;  // "first_after_warmup" or "early_stop"
  int round = 0;
  std::vector<DetectorRound> detectors;
};

struct RunReport {
  std::string dataset;
  std::string noise_kind;
  double noise_rate = 0.0;
  double empirical_noise_rate = 0.0;
  std::string detection = "none";
  std::string correction = "none";
  std::uint64_t seed = 0;
  int trial = 0;
  bool subsampled = false;
  std::size_t train_size = 0;
  std::size_t monitor_size = 0;
  std::size_t test_size = 0;
  int class_count = 0;

  int best_round = 0;
  int rounds_trained = 0;
  bool stopped_early = false;
  ClassificationMetrics final_metrics;  // clean test set, best round

  std::vector<SeriesRow> series;
  std::vector<EvaluationPoint> evaluation_points;

  std::size_t removed = 0;
  std::size_t relabeled = 0;
  bool budget_hit = false;
  std::vector<correct::CorrectionEvent> events;

  std::string config_json;  // resolved configuration echo
  std::vector<std::string> warnings;

  const EvaluationPoint* point(const std::string& name) const;
};

struct TableRow {
  std::string dataset;
  std::string noise_kind;
  double rate = 0.0;
  std::string detection;
  std::string correction;
  std::string metric;
  double value = 0.0;  // percent
  std::optional<double> std;
  bool is_best = false;
};

inline constexpr int kReportSchemaVersion = 1;

// Percent with two decimals.
std::string percent(double fraction);

std::string report_to_json(const RunReport& report, const std::string& created_at);
void write_series_csv(std::ostream& out, const RunReport& report);
void write_tables_csv(std::ostream& out, std::span<const TableRow> rows);

// Table rows contributed by a single run: detection accuracy at the
// early-stop point for every tracked detector, and test-set classification
// metrics.
std::vector<TableRow> table_rows(const RunReport& report);

// Writes report.json, series.csv, tables.csv and events.csv into `dir`.
void write_report(const RunReport& report, const std::filesystem::path& dir);

// UTC timestamp, ISO 8601.
std::string utc_timestamp();

}  // namespace noisygbdt::report

#endif  // NOISYGBDT_REPORT_HPP_

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


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "noisygbdt/report.hpp"

namespace noisygbdt::report {
namespace {

TEST(ClassificationMetricsTest, Perfect) {
  const std::vector<ClassId> y = {0, 1, 2, 1};
  const auto m = classification_metrics(y, y, 3);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(ClassificationMetricsTest, BinaryConfusionOracle) {
  // TP=3, FP=1, FN=2, TN=4 with class 1 positive.
  const std::vector<ClassId> truth = {1, 1, 1, 0, 1, 1, 0, 0, 0, 0};
  const std::vector<ClassId> pred = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  const auto m = classification_metrics(pred, truth, 2);
  EXPECT_DOUBLE_EQ(m.precision, 0.75);
  EXPECT_DOUBLE_EQ(m.recall, 0.6);
  EXPECT_NEAR(m.f1, 0.667, 1e-3);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.7);
}

TEST(ClassificationMetricsTest, ConstantPredictorMacroF1) {
  const std::vector<ClassId> truth = {0, 1, 2, 0, 1, 2};
  const std::vector<ClassId> pred(6, 0);
  const auto m = classification_metrics(pred, truth, 3);
  EXPECT_LT(m.f1, 0.5);
  EXPECT_NEAR(m.recall, 1.0 / 3.0, 1e-12);
}

TEST(ClassificationMetricsTest, Errors) {
  const std::vector<ClassId> a = {0, 1}, b = {0}, bad = {0, 5};
  EXPECT_THROW(classification_metrics(a, b, 2), Error);
  EXPECT_THROW(classification_metrics(bad, a, 2), Error);
  EXPECT_THROW(classification_metrics(std::vector<ClassId>{}, std::vector<ClassId>{}, 2), Error);
}

TEST(PredictionTypesTest, PartitionsTheNoisySet) {
  const std::vector<ClassId> clean = {0, 0, 0, 1, 2};
  const std::vector<ClassId> noisy = {1, 1, 1, 1, 0};
  const std::vector<ClassId> pred = {0, 1, 2, 0, 1};
  const auto t = prediction_type_counts(pred, clean, noisy);
  EXPECT_EQ(t.true_match, 1u);
  EXPECT_EQ(t.noisy_match, 1u);
  EXPECT_EQ(t.other, 2u);
  EXPECT_EQ(t.total(), 4u);
}

RunReport sample_report(int rounds) {
  RunReport r;
  r.dataset = "toy";
  r.noise_kind = "pair";
  r.noise_rate = 0.3;
  r.detection = "AUM";
  r.correction = "remove";
  r.rounds_trained = rounds;
  r.best_round = rounds;
  r.final_metrics = {0.9, 0.8, 0.7, 0.75};
  for (int t = 1; t <= rounds; ++t) {
    SeriesRow s;
    s.round = t;
    s.detectors.push_back({detect::Method::kAum, 0.5, 0.4, 0.3, 0.2, 2, 1, 10});
    r.series.push_back(s);
  }
  r.evaluation_points.push_back({"early_stop", rounds, {{detect::Method::kAum, 0.975, 0, 0, 0, 0, 0, 0}}});
  r.config_json = "{\"seed\": 1}";
  return r;
}

TEST(SeriesCsvTest, OneRowPerRound) {
  std::ostringstream out;
  write_series_csv(out, sample_report(40));
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  EXPECT_NE(header.find("AUM_accuracy,AUM_precision,AUM_recall,AUM_flagged_rate"), std::string::npos);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 40);
}

TEST(ReportJsonTest, DeterministicApartFromTimestamp) {
  const auto r = sample_report(5);
  EXPECT_EQ(report_to_json(r, "T"), report_to_json(r, "T"));
  const auto a = report_to_json(r, "2026-01-01T00:00:00Z");
  const auto b = report_to_json(r, "2026-06-01T12:00:00Z");
  EXPECT_NE(a, b);
  EXPECT_NE(a.find("\"schema\": \"noisygbdt-report\""), std::string::npos);
}

TEST(TableRowsTest, DetectionAndClassification) {
  const auto rows = table_rows(sample_report(3));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].metric, "detection_accuracy");
  EXPECT_DOUBLE_EQ(rows[0].value, 97.5);
  EXPECT_EQ(rows[4].metric, "f1");
  EXPECT_DOUBLE_EQ(rows[4].value, 75.0);
  std::ostringstream out;
  write_tables_csv(out, rows);
  EXPECT_NE(out.str().find("toy,pair,0.30,AUM,remove,detection_accuracy,97.50,,0"), std::string::npos);
}

TEST(PercentTest, TwoDecimals) {
  EXPECT_EQ(percent(0.98766), "98.77");
  EXPECT_EQ(percent(1.0), "100.00");
}

TEST(WriteReportTest, WritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "noisygbdt_report_test";
  std::filesystem::remove_all(dir);
  auto r = sample_report(4);
  correct::CorrectionEvent e;
  e.round = 2;
  e.instance_id = 1;
  r.events.push_back(e);
  write_report(r, dir);
  for (const char* f : {"report.json", "series.csv", "tables.csv", "events.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::filesystem::remove_all(dir);
}

TEST(TimestampTest, IsoShape) {
  const auto t = utc_timestamp();
  ASSERT_EQ(t.size(), 20u);
  EXPECT_EQ(t[4], '-');
  EXPECT_EQ(t[10], 'T');
  EXPECT_EQ(t.back(), 'Z');
}

}  // namespace
}  // namespace noisygbdt::report

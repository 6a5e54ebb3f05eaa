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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "noisygbdt/data.hpp"

#ifndef NOISYGBDT_TEST_DATA_DIR
#define NOISYGBDT_TEST_DATA_DIR "data"
#endif

namespace noisygbdt::data {
namespace {

const std::filesystem::path kDataDir = NOISYGBDT_TEST_DATA_DIR;

std::string balanced_csv(std::size_t n) {
  std::string text = "x,y,label\n";
  for (std::size_t i = 0; i < n; ++i) {
    text += std::to_string(i) + "," + (i % 3 == 0 ? "A" : "B") + "," + (i % 2 ? "pos" : "neg") + "\n";
  }
  return text;
}

TEST(CsvTest, InfersKindsAndMissing) {
  const auto t = parse_csv("a,b,c\n1,x,2.5\n?,y,3\n3,x,\n");
  ASSERT_EQ(t.rows, 3u);
  ASSERT_EQ(t.schema.size(), 3u);
  EXPECT_EQ(t.schema[0].kind, ColumnKind::kNumeric);
  EXPECT_EQ(t.schema[1].kind, ColumnKind::kCategorical);
  EXPECT_EQ(t.schema[2].kind, ColumnKind::kNumeric);
  EXPECT_TRUE(t.missing[0][1]);
  EXPECT_TRUE(t.missing[2][2]);
  EXPECT_FALSE(t.missing[0][0]);
}

TEST(CsvTest, EmptyInputHasNoRows) {
  try {
    parse_csv("");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no rows"), std::string::npos);
  }
  EXPECT_THROW(parse_csv("a,b\n"), Error);
}

TEST(CsvTest, RaggedRowIsAnError) {
  EXPECT_THROW(parse_csv("a,b\n1,2\n3\n"), Error);
}

TEST(CsvTest, QuotedFieldsAndDelimiter) {
  CsvOptions opt;
  opt.delimiter = ';';
  const auto t = parse_csv("name;v\n\"a;b\";1\n\"say \"\"hi\"\"\";2\n", opt);
  ASSERT_EQ(t.rows, 2u);
  EXPECT_EQ(t.cells[0][0], "a;b");
  EXPECT_EQ(t.cells[0][1], "say \"hi\"");
}

TEST(CsvTest, RequiredLabelColumn) {
  CsvOptions opt;
  opt.label_column = "target";
  EXPECT_THROW(parse_csv("a,b\n1,2\n", opt), Error);
  EXPECT_NO_THROW(parse_csv("a,target\n1,2\n", opt));
}

TEST(CsvTest, SchemaHintOverridesInference) {
  const auto t = parse_csv("code,label\n1,a\n2,b\n", {}, {{"code", ColumnKind::kCategorical}});
  EXPECT_EQ(t.schema[0].kind, ColumnKind::kCategorical);
}

TEST(CsvTest, ColumnIndexThrowsWhenAbsent) {
  const auto t = parse_csv("a,b\n1,2\n");
  EXPECT_EQ(t.column_index("b"), 1u);
  EXPECT_THROW(t.column_index("z"), Error);
}

TEST(PreprocessTest, MedianImputationThenStandardization) {
  const auto t = parse_csv("v,label\n1,a\n2,b\n?,a\n3,b\n");
  const auto d = preprocess(t, "label");
  ASSERT_EQ(d.feature_count(), 1u);
  // Imputed column is [1, 2, 2, 3]: mean 2, population std sqrt(0.5).
  const double s = std::sqrt(0.5);
  EXPECT_NEAR(d.features(0, 0), -1.0 / s, 1e-12);
  EXPECT_NEAR(d.features(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(d.features(2, 0), 0.0, 1e-12);
  EXPECT_NEAR(d.features(3, 0), 1.0 / s, 1e-12);
  double mean = 0.0;
  for (std::size_t i = 0; i < 4; ++i) mean += d.features(i, 0);
  EXPECT_NEAR(mean, 0.0, 1e-12);
}

TEST(PreprocessTest, OneHotHasExactlyOneHotPerRow) {
  const auto t = parse_csv("c,label\nA,x\nB,y\nA,y\n?,x\n");
  const auto d = preprocess(t, "label");
  ASSERT_EQ(d.feature_count(), 2u);
  EXPECT_EQ(d.feature_names[0], "c=A");
  EXPECT_EQ(d.feature_names[1], "c=B");
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.features(i, 0) + d.features(i, 1), 1.0);
  }
  EXPECT_EQ(d.features(3, 0), 1.0);  // missing takes the mode
}

TEST(PreprocessTest, ConstantColumnBecomesZerosWithWarning) {
  const auto t = parse_csv("k,label\n5,a\n5,b\n5,a\n");
  const auto d = preprocess(t, "label");
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(d.features(i, 0), 0.0);
  ASSERT_FALSE(d.warnings.empty());
  EXPECT_NE(d.warnings[0].find("constant"), std::string::npos);
}

TEST(PreprocessTest, SingleClassIsAnError) {
  EXPECT_THROW(preprocess(parse_csv("v,label\n1,a\n2,a\n"), "label"), Error);
}

TEST(PreprocessTest, LabelsAreLexicographic) {
  const auto d = preprocess(parse_csv("v,label\n1,zeta\n2,alpha\n3,mid\n"), "label");
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"alpha", "mid", "zeta"}));
  EXPECT_EQ(d.clean_labels, (std::vector<ClassId>{2, 0, 1}));
  EXPECT_NO_THROW(d.validate());
}

TEST(PreprocessTest, DeterministicAndStandardized) {
  const auto t = parse_csv(balanced_csv(60));
  const auto a = preprocess(t, "label");
  const auto b = preprocess(t, "label");
  EXPECT_EQ(a.features, b.features);
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a.features(i, 0);
  mean /= static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a.features(i, 0) - mean) * (a.features(i, 0) - mean);
  EXPECT_LT(std::abs(mean), 1e-9);
  EXPECT_LT(std::abs(std::sqrt(sq / static_cast<double>(a.size())) - 1.0), 1e-9);
}

TEST(DatasetTest, NoiseMaskFollowsLabels) {
  auto d = preprocess(parse_csv(balanced_csv(10)), "label");
  auto noisy = d.clean_labels;
  noisy[3] = 1 - noisy[3];
  d.set_noisy_labels(noisy);
  EXPECT_TRUE(d.noise_mask[3]);
  EXPECT_EQ(std::count(d.noise_mask.begin(), d.noise_mask.end(), 1), 1);
  EXPECT_NO_THROW(d.validate());
  d.noise_mask[4] = 1;
  EXPECT_THROW(d.validate(), Error);
}

TEST(SplitTest, StratifiedEightyTwenty) {
  std::vector<ClassId> labels(100);
  for (std::size_t i = 0; i < 100; ++i) labels[i] = static_cast<ClassId>(i % 2);
  const auto [train, test] = partition(labels, {0.2, true, 3});
  EXPECT_EQ(train.size(), 80u);
  ASSERT_EQ(test.size(), 20u);
  std::size_t ones = 0;
  for (auto i : test) ones += static_cast<std::size_t>(labels[i]);
  EXPECT_EQ(ones, 10u);
}

TEST(SplitTest, SameSeedSamePartition) {
  std::vector<ClassId> labels(57);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<ClassId>(i % 3);
  EXPECT_EQ(partition(labels, {0.25, true, 8}), partition(labels, {0.25, true, 8}));
  EXPECT_NE(partition(labels, {0.25, true, 8}), partition(labels, {0.25, true, 9}));
}

TEST(SplitTest, TinyClassNamedInError) {
  const std::vector<ClassId> labels = {0, 0, 0, 1};
  try {
    partition(labels, {0.5, true, 1}, {"big", "lonely"});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
}

TEST(SplitTest, RejectsBadFraction) {
  const std::vector<ClassId> labels = {0, 1, 0, 1};
  EXPECT_THROW(partition(labels, {0.0, true, 1}), Error);
  EXPECT_THROW(partition(labels, {1.0, false, 1}), Error);
}

TEST(SplitTest, PartitionsInstanceIds) {
  const auto d = preprocess(parse_csv(balanced_csv(90)), "label");
  const auto [train, test] = split(d, {0.3, true, 5});
  EXPECT_EQ(train.size() + test.size(), d.size());
  std::set<InstanceId> ids(train.instance_ids.begin(), train.instance_ids.end());
  for (auto id : test.instance_ids) EXPECT_EQ(ids.count(id), 0u);
  ids.insert(test.instance_ids.begin(), test.instance_ids.end());
  EXPECT_EQ(ids.size(), d.size());
}

TEST(SplitTest, PreprocessingFitsOnTrainOnly) {
  const auto t = parse_csv(balanced_csv(100));
  const auto [train, test] = split_and_preprocess(t, "label", {0.2, true, 2});
  double mean = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) mean += train.features(i, 0);
  EXPECT_LT(std::abs(mean / static_cast<double>(train.size())), 1e-9);
  EXPECT_EQ(train.feature_names, test.feature_names);
  EXPECT_EQ(train.size(), 80u);
}

TEST(SubsampleTest, KeepsClassProportions) {
  const auto t = parse_csv(balanced_csv(200));
  const auto s = stratified_subsample(t, "label", 50, 4);
  EXPECT_EQ(s.rows, 50u);
  const auto li = s.column_index("label");
  const auto pos = std::count(s.cells[li].begin(), s.cells[li].end(), "pos");
  EXPECT_EQ(pos, 25);
}

TEST(CacheTest, RoundTrip) {
  auto d = preprocess(parse_csv(balanced_csv(30)), "label");
  auto noisy = d.clean_labels;
  noisy[0] = 1 - noisy[0];
  d.set_noisy_labels(noisy);
  const auto path = std::filesystem::temp_directory_path() / "noisygbdt_cache_test.bin";
  save_cache(d, path);
  const auto back = load_cache(path);
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.clean_labels, d.clean_labels);
  EXPECT_EQ(back.noisy_labels, d.noisy_labels);
  EXPECT_EQ(back.noise_mask, d.noise_mask);
  EXPECT_EQ(back.instance_ids, d.instance_ids);
  EXPECT_EQ(back.feature_names, d.feature_names);
  EXPECT_EQ(back.class_names, d.class_names);
  std::filesystem::remove(path);
}

TEST(CacheTest, RejectsForeignFile) {
  const auto path = std::filesystem::temp_directory_path() / "noisygbdt_cache_bad.bin";
  std::ofstream(path) << "not a cache";
  EXPECT_THROW(load_cache(path), Error);
  std::filesystem::remove(path);
}

TEST(DatasetFileTest, BreastCancerShape) {
  const auto path = kDataDir / "breast_cancer.csv";
  if (!std::filesystem::exists(path)) GTEST_SKIP() << "missing " << path;
  const auto t = load_csv(path);
  EXPECT_EQ(t.rows, 569u);
  const auto d = preprocess(t, "target");
  EXPECT_EQ(d.feature_count(), 30u);
  EXPECT_EQ(d.class_count, 2);
}

TEST(DatasetFileTest, AdultMixesKinds) {
  const auto path = kDataDir / "adult.csv";
  if (!std::filesystem::exists(path)) GTEST_SKIP() << "missing " << path;
  const auto t = load_csv(path);
  std::map<ColumnKind, int> kinds;
  for (const auto& c : t.schema) ++kinds[c.kind];
  EXPECT_GT(kinds[ColumnKind::kNumeric], 0);
  EXPECT_GT(kinds[ColumnKind::kCategorical], 1);
  const auto d = preprocess(t, "income");
  EXPECT_EQ(d.class_count, 2);
  EXPECT_GT(d.feature_count(), t.schema.size());
}

}  // namespace
}  // namespace noisygbdt::data

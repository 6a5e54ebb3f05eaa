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

// Tabular ingest: CSV loading with schema inference, preprocessing
// (imputation, standardization, one-hot) and stratified splitting.

#ifndef NOISYGBDT_DATA_HPP_
#define NOISYGBDT_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "noisygbdt/common.hpp"

namespace noisygbdt::data {

enum class ColumnKind { kNumeric, kCategorical };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
};

struct CsvOptions {
  char delimiter = ',';
  std::vector<std::string> missing_markers = {"", "?"};
  // When set, loading fails unless the header contains this column.
  std::string label_column;
};

// String cells as read from disk, column-major, with schema and missing flags.
struct RawTable {
  std::vector<ColumnSchema> schema;
  std::vector<std::vector<std::string>> cells;
  std::vector<std::vector<std::uint8_t>> missing;
  std::size_t rows = 0;

  // Index of the named column; throws Error when absent.
  std::size_t column_index(const std::string& name) const;
};

// Parses a delimited file with a header row. Columns are numeric when every
// non-missing cell parses as a real number; `schema_hint` entries override
// inference by column name.
RawTable load_csv(const std::filesystem::path& path, const CsvOptions& options = {},
                  const std::vector<ColumnSchema>& schema_hint = {});
// Same as load_csv, over an in-memory document.
RawTable parse_csv(const std::string& text, const CsvOptions& options = {},
                   const std::vector<ColumnSchema>& schema_hint = {});

// Preprocessed instances. `noise_mask[i]` is kept equal to
// `clean_labels[i] != noisy_labels[i]` by set_noisy_labels().
struct Dataset {
  Matrix features;
  std::vector<ClassId> clean_labels;
  std::vector<ClassId> noisy_labels;
  std::vector<std::uint8_t> noise_mask;
  int class_count = 0;
  std::vector<InstanceId> instance_ids;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::vector<std::string> warnings;

  std::size_t size() const { return clean_labels.size(); }
  std::size_t feature_count() const { return features.cols(); }

  void set_noisy_labels(std::vector<ClassId> labels);
  Dataset subset(std::span<const std::size_t> rows) const;
  // Throws Error if any invariant is violated.
  void validate() const;
};

struct SplitSpec {
  double test_fraction = 0.2;
  bool stratified = true;
  std::uint64_t seed = 0;
};

// Fitted imputation / scaling / encoding parameters for one label column.
class Preprocessor {
 public:
  // Fits on the listed rows of `table` (all rows when `rows` is empty).
  static Preprocessor fit(const RawTable& table, const std::string& label_column,
                          std::span<const std::size_t> rows = {});

  // Applies the fitted transform to the listed rows (all when empty).
  Dataset transform(const RawTable& table, std::span<const std::size_t> rows = {}) const;

  std::size_t output_width() const { return feature_names_.size(); }

 private:
  struct NumericParams {
    double median = 0.0;
    double mean = 0.0;
    double stddev = 1.0;
  };
  struct CategoricalParams {
    std::string mode;
    std::vector<std::string> categories;  // lexicographic
  };
  struct ColumnParams {
    std::size_t source = 0;
    ColumnKind kind = ColumnKind::kNumeric;
    NumericParams numeric;
    CategoricalParams categorical;
  };

  std::string label_column_;
  std::size_t label_index_ = 0;
  std::vector<std::string> class_names_;
  std::vector<ColumnParams> columns_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> warnings_;
};

// Fit-and-transform over every row.
Dataset preprocess(const RawTable& table, const std::string& label_column);

// Train/test row indices over the given labels. Stratification groups by
// label and needs at least two instances per class.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(
    std::span<const ClassId> labels, const SplitSpec& spec,
    const std::vector<std::string>& class_names = {});

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec);

// Splits the raw table first, fits preprocessing on the training rows only,
// then transforms both sides.
std::pair<Dataset, Dataset> split_and_preprocess(const RawTable& table,
                                                 const std::string& label_column,
                                                 const SplitSpec& spec);

// Stratified subsample of `n` rows, preserving class proportions.
RawTable stratified_subsample(const RawTable& table, const std::string& label_column,
                              std::size_t n, std::uint64_t seed);

// Columnar binary cache with a version header.
inline constexpr std::uint32_t kCacheVersion = 1;
void save_cache(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_cache(const std::filesystem::path& path);

}  // namespace noisygbdt::data

#endif  // NOISYGBDT_DATA_HPP_

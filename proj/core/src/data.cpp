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

#include "noisygbdt/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace noisygbdt::data {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Splits one logical record; handles double-quoted fields with "" escapes.
// Returns false at end of input.
bool read_record(std::istream& in, char delimiter, std::vector<std::string>& out,
                 std::size_t& line_no) {
  out.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++line_no;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0;; ++i) {
    if (i == line.size()) {
      if (quoted) {
        std::string more;
        if (!std::getline(in, more)) throw Error("unterminated quoted field at line " +
                                                 std::to_string(line_no));
        ++line_no;
        field.push_back('\n');
        line = std::move(more);
        i = static_cast<std::size_t>(-1);
        continue;
      }
      break;
    }
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && trim(field).empty()) {
      field.clear();
      quoted = true;
      was_quoted = true;
    } else if (ch == delimiter) {
      out.emplace_back(was_quoted ? field : std::string(trim(field)));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(ch);
    }
  }
  out.emplace_back(was_quoted ? field : std::string(trim(field)));
  return true;
}

RawTable parse_stream(std::istream& in, const CsvOptions& options,
                      const std::vector<ColumnSchema>& schema_hint) {
  std::size_t line_no = 0;
  std::vector<std::string> header;
  // skip blank leading lines
  do {
    if (!read_record(in, options.delimiter, header, line_no)) throw Error("no rows");
  } while (header.size() == 1 && header[0].empty());

  RawTable table;
  table.schema.resize(header.size());
  table.cells.resize(header.size());
  table.missing.resize(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) table.schema[c].name = header[c];

  const std::set<std::string> markers(options.missing_markers.begin(),
                                      options.missing_markers.end());
  std::vector<std::string> record;
  while (read_record(in, options.delimiter, record, line_no)) {
    if (record.size() == 1 && record[0].empty()) continue;
    if (record.size() != header.size()) {
      throw Error("ragged row at line " + std::to_string(line_no) + ": expected " +
                  std::to_string(header.size()) + " fields, got " +
                  std::to_string(record.size()));
    }
    for (std::size_t c = 0; c < record.size(); ++c) {
      table.missing[c].push_back(markers.count(record[c]) ? 1 : 0);
      table.cells[c].push_back(std::move(record[c]));
    }
    ++table.rows;
  }
  if (table.rows == 0) throw Error("no rows");

  for (std::size_t c = 0; c < table.schema.size(); ++c) {
    auto hint = std::find_if(schema_hint.begin(), schema_hint.end(),
                             [&](const ColumnSchema& s) { return s.name == table.schema[c].name; });
    if (hint != schema_hint.end()) {
      table.schema[c].kind = hint->kind;
      continue;
    }
    bool numeric = true;
    for (std::size_t r = 0; r < table.rows && numeric; ++r) {
      if (!table.missing[c][r] && !parse_real(table.cells[c][r])) numeric = false;
    }
    table.schema[c].kind = numeric ? ColumnKind::kNumeric : ColumnKind::kCategorical;
  }
  if (!options.label_column.empty()) table.column_index(options.label_column);
  return table;
}

std::vector<std::size_t> all_rows_if_empty(std::span<const std::size_t> rows, std::size_t n) {
  if (!rows.empty()) return {rows.begin(), rows.end()};
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("truncated dataset cache");
}
template <typename T>
void write_vec(std::ostream& out, const std::vector<T>& v) {
  write_pod<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <typename T>
void read_vec(std::istream& in, std::vector<T>& v) {
  std::uint64_t n = 0;
  read_pod(in, n);
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw Error("truncated dataset cache");
}
void write_strings(std::ostream& out, const std::vector<std::string>& v) {
  write_pod<std::uint64_t>(out, v.size());
  for (const auto& s : v) {
    write_pod<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
}
void read_strings(std::istream& in, std::vector<std::string>& v) {
  std::uint64_t n = 0;
  read_pod(in, n);
  v.resize(n);
  for (auto& s : v) {
    std::uint64_t len = 0;
    read_pod(in, len);
    s.resize(len);
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw Error("truncated dataset cache");
  }
}

constexpr char kCacheMagic[8] = {'N', 'G', 'B', 'D', 'T', 'D', 'S', '\0'};

}  // namespace

std::size_t RawTable::column_index(const std::string& name) const {
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema[c].name == name) return c;
  }
  throw Error("label column '" + name + "' absent");
}

RawTable load_csv(const std::filesystem::path& path, const CsvOptions& options,
                  const std::vector<ColumnSchema>& schema_hint) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return parse_stream(in, options, schema_hint);
}

RawTable parse_csv(const std::string& text, const CsvOptions& options,
                   const std::vector<ColumnSchema>& schema_hint) {
  std::istringstream in(text);
  return parse_stream(in, options, schema_hint);
}

void Dataset::set_noisy_labels(std::vector<ClassId> labels) {
  if (labels.size() != clean_labels.size()) throw Error("noisy label count mismatch");
  noisy_labels = std::move(labels);
  noise_mask.resize(noisy_labels.size());
  for (std::size_t i = 0; i < noisy_labels.size(); ++i) {
    noise_mask[i] = clean_labels[i] != noisy_labels[i];
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = features.select_rows(rows);
  out.class_count = class_count;
  out.feature_names = feature_names;
  out.class_names = class_names;
  out.warnings = warnings;
  for (std::size_t r : rows) {
    out.clean_labels.push_back(clean_labels[r]);
    out.noisy_labels.push_back(noisy_labels[r]);
    out.noise_mask.push_back(noise_mask[r]);
    out.instance_ids.push_back(instance_ids[r]);
  }
  return out;
}

void Dataset::validate() const {
  const std::size_t n = clean_labels.size();
  if (class_count < 1) throw Error("class count must be positive");
  if (noisy_labels.size() != n || noise_mask.size() != n || instance_ids.size() != n ||
      features.rows() != n) {
    throw Error("dataset arrays have inconsistent lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (clean_labels[i] < 0 || clean_labels[i] >= class_count || noisy_labels[i] < 0 ||
        noisy_labels[i] >= class_count) {
      throw Error("label out of range at row " + std::to_string(i));
    }
    if (static_cast<bool>(noise_mask[i]) != (clean_labels[i] != noisy_labels[i])) {
      throw Error("noise mask inconsistent at row " + std::to_string(i));
    }
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw Error("feature matrix contains non-finite entries");
  }
  std::set<InstanceId> ids(instance_ids.begin(), instance_ids.end());
  if (ids.size() != n) throw Error("instance ids are not unique");
}

Preprocessor Preprocessor::fit(const RawTable& table, const std::string& label_column,
                               std::span<const std::size_t> rows_in) {
  Preprocessor p;
  p.label_column_ = label_column;
  p.label_index_ = table.column_index(label_column);
  const auto rows = all_rows_if_empty(rows_in, table.rows);

  std::set<std::string> classes;
  for (std::size_t r = 0; r < table.rows; ++r) {
    if (table.missing[p.label_index_][r]) {
      throw Error("label column '" + label_column + "' has a missing value at row " +
                  std::to_string(r));
    }
    classes.insert(table.cells[p.label_index_][r]);
  }
  if (classes.size() < 2) throw Error("label column '" + label_column + "' has a single class");
  p.class_names_.assign(classes.begin(), classes.end());

  for (std::size_t c = 0; c < table.schema.size(); ++c) {
    if (c == p.label_index_) continue;
    ColumnParams params;
    params.source = c;
    params.kind = table.schema[c].kind;
    const auto& name = table.schema[c].name;
    if (params.kind == ColumnKind::kNumeric) {
      std::vector<double> present;
      for (std::size_t r : rows) {
        if (!table.missing[c][r]) {
          auto v = parse_real(table.cells[c][r]);
          if (!v) throw Error("column '" + name + "' is numeric but cell '" +
                              table.cells[c][r] + "' does not parse");
          present.push_back(*v);
        }
      }
      auto& np = params.numeric;
      if (present.empty()) {
        p.warnings_.push_back("column '" + name + "' has no observed values; imputed as 0");
        np.median = 0.0;
      } else {
        np.median = median_of(present);
      }
      // Statistics after imputation.
      const double n = static_cast<double>(rows.size());
      double sum = 0.0;
      for (double v : present) sum += v;
      sum += np.median * static_cast<double>(rows.size() - present.size());
      np.mean = sum / n;
      double ss = 0.0;
      for (double v : present) ss += (v - np.mean) * (v - np.mean);
      ss += static_cast<double>(rows.size() - present.size()) * (np.median - np.mean) *
            (np.median - np.mean);
      np.stddev = std::sqrt(ss / n);
      if (!(np.stddev > 0.0)) {
        p.warnings_.push_back("column '" + name + "' is constant; standardized to zeros");
        np.stddev = 0.0;
      }
      p.feature_names_.push_back(name);
    } else {
      std::map<std::string, std::size_t> counts;
      for (std::size_t r : rows) {
        if (!table.missing[c][r]) ++counts[table.cells[c][r]];
      }
      auto& cp = params.categorical;
      std::size_t best = 0;
      for (const auto& [value, count] : counts) {
        cp.categories.push_back(value);
        if (count > best) {  // map order makes ties resolve lexicographically
          best = count;
          cp.mode = value;
        }
      }
      if (counts.empty()) {
        p.warnings_.push_back("column '" + name + "' has no observed values; dropped");
      }
      for (const auto& value : cp.categories) p.feature_names_.push_back(name + "=" + value);
    }
    p.columns_.push_back(std::move(params));
  }
  return p;
}

Dataset Preprocessor::transform(const RawTable& table, std::span<const std::size_t> rows_in) const {
  const auto rows = all_rows_if_empty(rows_in, table.rows);
  Dataset d;
  d.features = Matrix(rows.size(), feature_names_.size());
  d.feature_names = feature_names_;
  d.class_names = class_names_;
  d.class_count = static_cast<int>(class_names_.size());
  d.warnings = warnings_;

  std::size_t unseen = 0;
  std::size_t out_col = 0;
  for (const auto& params : columns_) {
    const std::size_t c = params.source;
    if (params.kind == ColumnKind::kNumeric) {
      const auto& np = params.numeric;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        double v = table.missing[c][r] ? np.median : parse_real(table.cells[c][r]).value_or(np.median);
        d.features(i, out_col) = np.stddev > 0.0 ? (v - np.mean) / np.stddev : 0.0;
      }
      ++out_col;
    } else {
      const auto& cats = params.categorical.categories;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        const std::string& v = table.missing[c][r] ? params.categorical.mode : table.cells[c][r];
        auto it = std::lower_bound(cats.begin(), cats.end(), v);
        if (it != cats.end() && *it == v) {
          d.features(i, out_col + static_cast<std::size_t>(it - cats.begin())) = 1.0;
        } else {
          ++unseen;
        }
      }
      out_col += cats.size();
    }
  }
  if (unseen > 0) {
    d.warnings.push_back(std::to_string(unseen) +
                         " categorical cells held values unseen at fit time; encoded as all-zero");
  }

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& value = table.cells[label_index_][rows[i]];
    auto it = std::lower_bound(class_names_.begin(), class_names_.end(), value);
    d.clean_labels.push_back(static_cast<ClassId>(it - class_names_.begin()));
    d.instance_ids.push_back(static_cast<InstanceId>(rows[i]));
  }
  d.set_noisy_labels(d.clean_labels);
  return d;
}

Dataset preprocess(const RawTable& table, const std::string& label_column) {
  return Preprocessor::fit(table, label_column).transform(table);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(
    std::span<const ClassId> labels, const SplitSpec& spec,
    const std::vector<std::string>& class_names) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw Error("test_fraction must lie in (0, 1)");
  }
  Rng rng(spec.seed);
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  auto take = [&](std::vector<std::size_t> idx, std::size_t n_test) {
    rng.shuffle(idx);
    test.insert(test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  };
  if (spec.stratified) {
    std::map<ClassId, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (auto& [cls, idx] : by_class) {
      if (idx.size() < 2) {
        const std::string name = static_cast<std::size_t>(cls) < class_names.size()
                                     ? class_names[static_cast<std::size_t>(cls)]
                                     : std::to_string(cls);
        throw Error("class '" + name + "' has fewer than 2 instances; cannot stratify");
      }
      auto n_test = static_cast<std::size_t>(
          std::llround(spec.test_fraction * static_cast<double>(idx.size())));
      n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
      take(std::move(idx), n_test);
    }
  } else {
    std::vector<std::size_t> idx(labels.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto n_test = static_cast<std::size_t>(
        std::llround(spec.test_fraction * static_cast<double>(idx.size())));
    take(std::move(idx), n_test);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec) {
  auto [train, test] = partition(dataset.clean_labels, spec, dataset.class_names);
  return {dataset.subset(train), dataset.subset(test)};
}

namespace {
std::vector<ClassId> raw_labels(const RawTable& table, std::size_t label_index,
                                std::vector<std::string>* names) {
  std::set<std::string> classes(table.cells[label_index].begin(), table.cells[label_index].end());
  names->assign(classes.begin(), classes.end());
  std::vector<ClassId> labels;
  labels.reserve(table.rows);
  for (const auto& v : table.cells[label_index]) {
    labels.push_back(static_cast<ClassId>(
        std::lower_bound(names->begin(), names->end(), v) - names->begin()));
  }
  return labels;
}
}  // namespace

std::pair<Dataset, Dataset> split_and_preprocess(const RawTable& table,
                                                 const std::string& label_column,
                                                 const SplitSpec& spec) {
  std::vector<std::string> names;
  const auto labels = raw_labels(table, table.column_index(label_column), &names);
  auto [train_rows, test_rows] = partition(labels, spec, names);
  const auto pre = Preprocessor::fit(table, label_column, train_rows);
  return {pre.transform(table, train_rows), pre.transform(table, test_rows)};
}

RawTable stratified_subsample(const RawTable& table, const std::string& label_column,
                              std::size_t n, std::uint64_t seed) {
  if (n >= table.rows) return table;
  std::vector<std::string> names;
  const auto labels = raw_labels(table, table.column_index(label_column), &names);
  std::map<ClassId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  const double fraction = static_cast<double>(n) / static_cast<double>(table.rows);
  std::vector<std::size_t> keep;
  for (auto& [cls, idx] : by_class) {
    rng.shuffle(idx);
    auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    k = std::clamp<std::size_t>(k, std::min<std::size_t>(2, idx.size()), idx.size());
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(keep.begin(), keep.end());
  RawTable out;
  out.schema = table.schema;
  out.rows = keep.size();
  out.cells.resize(table.cells.size());
  out.missing.resize(table.missing.size());
  for (std::size_t c = 0; c < table.cells.size(); ++c) {
    for (std::size_t r : keep) {
      out.cells[c].push_back(table.cells[c][r]);
      out.missing[c].push_back(table.missing[c][r]);
    }
  }
  return out;
}

void save_cache(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kCacheMagic, sizeof(kCacheMagic));
  write_pod(out, kCacheVersion);
  write_pod<std::uint64_t>(out, dataset.size());
  write_pod<std::uint64_t>(out, dataset.feature_count());
  write_pod<std::int32_t>(out, dataset.class_count);
  write_vec(out, dataset.instance_ids);
  write_vec(out, dataset.clean_labels);
  write_vec(out, dataset.noisy_labels);
  // column-major feature block
  std::vector<double> column(dataset.size());
  for (std::size_t f = 0; f < dataset.feature_count(); ++f) {
    for (std::size_t i = 0; i < dataset.size(); ++i) column[i] = dataset.features(i, f);
    write_vec(out, column);
  }
  write_strings(out, dataset.feature_names);
  write_strings(out, dataset.class_names);
  if (!out) throw Error("I/O failure writing " + path.string());
}

Dataset load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  char magic[sizeof(kCacheMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kCacheMagic))) {
    throw Error(path.string() + " is not a dataset cache");
  }
  std::uint32_t version = 0;
  read_pod(in, version);
  if (version != kCacheVersion) {
    throw Error("dataset cache version " + std::to_string(version) + " unsupported");
  }
  std::uint64_t n = 0, d = 0;
  std::int32_t c = 0;
  read_pod(in, n);
  read_pod(in, d);
  read_pod(in, c);
  Dataset out;
  out.class_count = c;
  read_vec(in, out.instance_ids);
  read_vec(in, out.clean_labels);
  std::vector<ClassId> noisy;
  read_vec(in, noisy);
  out.features = Matrix(n, d);
  std::vector<double> column;
  for (std::size_t f = 0; f < d; ++f) {
    read_vec(in, column);
    if (column.size() != n) throw Error("corrupt dataset cache");
    for (std::size_t i = 0; i < n; ++i) out.features(i, f) = column[i];
  }
  read_strings(in, out.feature_names);
  read_strings(in, out.class_names);
  out.set_noisy_labels(std::move(noisy));
  out.validate();
  return out;
}

}  // namespace noisygbdt::data

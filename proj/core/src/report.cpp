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


#include "noisygbdt/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "json.hpp"

namespace noisygbdt::report {
namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double ratio(std::size_t a, std::size_t b) {
  return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json detectors_json(const std::vector<DetectorRound>& rows) {
  json out = json::array();
  for (const auto& d : rows) {
    out.push_back({{"method", detect::to_string(d.method)},
                   {"accuracy", d.accuracy},
                   {"precision", d.precision},
                   {"recall", d.recall},
                   {"estimated_noise_rate", d.estimated_noise_rate},
                   {"flagged", d.flagged},
                   {"flagged_noisy", d.flagged_noisy},
                   {"active", d.active}});
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

ClassificationMetrics classification_metrics(std::span<const ClassId> predicted,
                                             std::span<const ClassId> truth, int class_count) {
  if (predicted.size() != truth.size()) throw Error("prediction and label counts differ");
  if (truth.empty()) throw Error("classification metrics over no instances");
  if (class_count < 2) throw Error("classification metrics need at least two classes");
  const auto c = static_cast<std::size_t>(class_count);
  std::vector<std::size_t> tp(c, 0), fp(c, 0), fn(c, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto p = static_cast<std::size_t>(predicted[i]);
    const auto t = static_cast<std::size_t>(truth[i]);
    if (p >= c || t >= c) throw Error("class id out of range");
    if (p == t) {
      ++correct;
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  auto per_class = [&](std::size_t k) {
    ClassificationMetrics m;
    m.precision = ratio(tp[k], tp[k] + fp[k]);
    m.recall = ratio(tp[k], tp[k] + fn[k]);
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
  };
  ClassificationMetrics out;
  out.accuracy = ratio(correct, truth.size());
  if (c == 2) {
    const auto m = per_class(1);
    out.precision = m.precision;
    out.recall = m.recall;
    out.f1 = m.f1;
  } else {
    for (std::size_t k = 0; k < c; ++k) {
      const auto m = per_class(k);
      out.precision += m.precision;
      out.recall += m.recall;
      out.f1 += m.f1;
    }
    out.precision /= static_cast<double>(c);
    out.recall /= static_cast<double>(c);
    out.f1 /= static_cast<double>(c);
  }
  return out;
}

PredictionTypeCounts prediction_type_counts(std::span<const ClassId> predicted,
                                            std::span<const ClassId> clean,
                                            std::span<const ClassId> noisy) {
  if (predicted.size() != clean.size() || clean.size() != noisy.size()) {
    throw Error("prediction and label counts differ");
  }
  PredictionTypeCounts out;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (clean[i] == noisy[i]) continue;
    if (predicted[i] == clean[i]) {
      ++out.true_match;
    } else if (predicted[i] == noisy[i]) {
      ++out.noisy_match;
    } else {
      ++out.other;
    }
  }
  return out;
}

const EvaluationPoint* RunReport::point(const std::string& name) const {
  for (const auto& p : evaluation_points) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

std::string report_to_json(const RunReport& r, const std::string& created_at) {
  json series = json::array();
  for (const auto& s : r.series) {
    series.push_back({{"round", s.round},
                      {"train_logloss", s.train_logloss},
                      {"train_accuracy", s.train_accuracy},
                      {"monitor_loss", opt(s.monitor_loss)},
                      {"test_logloss", opt(s.test_logloss)},
                      {"test_accuracy", opt(s.test_accuracy)},
                      {"removed", s.removed},
                      {"prediction_types",
                       {{"true_match", s.types.true_match},
                        {"noisy_match", s.types.noisy_match},
                        {"other", s.types.other}}},
                      {"detectors", detectors_json(s.detectors)}});
  }
  json points = json::array();
  for (const auto& p : r.evaluation_points) {
    points.push_back({{"name", p.name}, {"round", p.round}, {"detectors", detectors_json(p.detectors)}});
  }
  json config = r.config_json.empty() ? json(nullptr) : json::parse(r.config_json);
  json doc = {
      {"schema", "noisygbdt-report"},
      {"version", kReportSchemaVersion},
      {"created_at", created_at},
      {"dataset", r.dataset},
      {"subsampled", r.subsampled},
      {"noise", {{"kind", r.noise_kind}, {"rate", r.noise_rate}, {"empirical_rate", r.empirical_noise_rate}}},
      {"detection", r.detection},
      {"correction", r.correction},
      {"seed", r.seed},
      {"trial", r.trial},
      {"sizes", {{"train", r.train_size}, {"monitor", r.monitor_size}, {"test", r.test_size}}},
      {"class_count", r.class_count},
      {"best_round", r.best_round},
      {"rounds_trained", r.rounds_trained},
      {"stopped_early", r.stopped_early},
      {"final_metrics",
       {{"accuracy", r.final_metrics.accuracy},
        {"precision", r.final_metrics.precision},
        {"recall", r.final_metrics.recall},
        {"f1", r.final_metrics.f1}}},
      {"correction_summary", {{"removed", r.removed}, {"relabeled", r.relabeled}, {"budget_hit", r.budget_hit}}},
      {"evaluation_points", std::move(points)},
      {"series", std::move(series)},
      {"warnings", r.warnings},
      {"config", std::move(config)}};
  return doc.dump(1) + "\n";
}

void write_series_csv(std::ostream& out, const RunReport& r) {
  std::vector<detect::Method> methods;
  if (!r.series.empty()) {
    for (const auto& d : r.series.front().detectors) methods.push_back(d.method);
  }
  out << "round,train_logloss,train_accuracy,monitor_loss,test_logloss,test_accuracy,removed,"
         "true_match,noisy_match,other";
  for (auto m : methods) {
    const auto name = detect::to_string(m);
    out << ',' << name << "_accuracy," << name << "_precision," << name << "_recall," << name
        << "_flagged_rate";
  }
  out << '\n';
  for (const auto& s : r.series) {
    out << s.round << ',' << num(s.train_logloss) << ',' << num(s.train_accuracy) << ',';
    if (s.monitor_loss) out << num(*s.monitor_loss);
    out << ',';
    if (s.test_logloss) out << num(*s.test_logloss);
    out << ',';
    if (s.test_accuracy) out << num(*s.test_accuracy);
    out << ',' << s.removed << ',' << s.types.true_match << ',' << s.types.noisy_match << ','
        << s.types.other;
    for (std::size_t j = 0; j < methods.size(); ++j) {
      if (j < s.detectors.size()) {
        const auto& d = s.detectors[j];
        out << ',' << num(d.accuracy) << ',' << num(d.precision) << ',' << num(d.recall) << ','
            << num(d.estimated_noise_rate);
      } else {
        out << ",,,,";
      }
    }
    out << '\n';
  }
}

void write_tables_csv(std::ostream& out, std::span<const TableRow> rows) {
  out << "dataset,noise_kind,rate,detection,correction,metric,value,std,is_best\n";
  for (const auto& row : rows) {
    char rate[16];
    std::snprintf(rate, sizeof rate, "%.2f", row.rate);
    char value[32];
    std::snprintf(value, sizeof value, "%.2f", row.value);
    out << row.dataset << ',' << row.noise_kind << ',' << rate << ',' << row.detection << ','
        << row.correction << ',' << row.metric << ',' << value << ',';
    if (row.std) {
      char sd[32];
      std::snprintf(sd, sizeof sd, "%.2f", *row.std);
      out << sd;
    }
    out << ',' << (row.is_best ? 1 : 0) << '\n';
  }
}

std::vector<TableRow> table_rows(const RunReport& r) {
  std::vector<TableRow> rows;
  auto base = [&] {
    TableRow row;
    row.dataset = r.dataset;
    row.noise_kind = r.noise_kind;
    row.rate = r.noise_rate;
    row.correction = r.correction;
    return row;
  };
  if (const auto* p = r.point("early_stop")) {
    for (const auto& d : p->detectors) {
      const auto name = detect::to_string(d.method);
      if (r.detection != "none" && r.detection != name) continue;
      auto row = base();
      row.detection = name;
      row.metric = "detection_accuracy";
      row.value = 100.0 * d.accuracy;
      rows.push_back(row);
    }
  }
  const std::pair<const char*, double> metrics[] = {{"accuracy", r.final_metrics.accuracy},
                                                    {"precision", r.final_metrics.precision},
                                                    {"recall", r.final_metrics.recall},
                                                    {"f1", r.final_metrics.f1}};
  for (const auto& [name, value] : metrics) {
    auto row = base();
    row.detection = r.detection;
    row.metric = name;
    row.value = 100.0 * value;
    rows.push_back(row);
  }
  return rows;
}

void write_report(const RunReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "report.json", report_to_json(r, utc_timestamp()));
  {
    std::ofstream out(dir / "series.csv", std::ios::binary);
    if (!out) throw Error("cannot open " + (dir / "series.csv").string());
    write_series_csv(out, r);
  }
  {
    std::ofstream out(dir / "tables.csv", std::ios::binary);
    if (!out) throw Error("cannot open " + (dir / "tables.csv").string());
    const auto rows = table_rows(r);
    write_tables_csv(out, rows);
  }
  if (!r.events.empty()) {
    std::ofstream out(dir / "events.csv", std::ios::binary);
    if (!out) throw Error("cannot open " + (dir / "events.csv").string());
    correct::write_events_csv(out, r.events);
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace noisygbdt::report

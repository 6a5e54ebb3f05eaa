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


#include "noisygbdt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace noisygbdt::experiment {
namespace {

using nlohmann::json;

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

bool valid_point(const std::string& name) { return name == kFirstAfterWarmup || name == kEarlyStop; }

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) ==
        known.end()) {
      throw Error("unknown key '" + key + "' in " + where);
    }
  }
}

void parse_boost(const json& j, ExperimentConfig& c) {
  reject_unknown(j,
                 {"max_depth", "learning_rate", "n_rounds", "l2_reg", "min_split_gain",
                  "min_child_weight", "objective", "early_stopping", "early_stop_min_delta",
                  "early_stop_patience", "early_stop_reference", "early_stop_after_warmup", "monitor_mean_loss", "warmup_rounds", "hessian_floor"},
                 "boost");
  auto& b = c.boost;
  b.max_depth = j.value("max_depth", b.max_depth);
  b.learning_rate = j.value("learning_rate", b.learning_rate);
  b.n_rounds = j.value("n_rounds", b.n_rounds);
  b.l2_reg = j.value("l2_reg", b.l2_reg);
  b.min_split_gain = j.value("min_split_gain", b.min_split_gain);
  b.min_child_weight = j.value("min_child_weight", b.min_child_weight);
  b.early_stopping = j.value("early_stopping", b.early_stopping);
  b.early_stop_min_delta = j.value("early_stop_min_delta", b.early_stop_min_delta);
  b.early_stop_patience = j.value("early_stop_patience", b.early_stop_patience);
  if (j.contains("early_stop_reference")) {
    b.early_stop_reference = gbdt::parse_stop_reference(j.at("early_stop_reference").get<std::string>());
  }
  b.early_stop_after_warmup = j.value("early_stop_after_warmup", b.early_stop_after_warmup);
  b.monitor_mean_loss = j.value("monitor_mean_loss", b.monitor_mean_loss);
  b.warmup_rounds = j.value("warmup_rounds", b.warmup_rounds);
  b.hessian_floor = j.value("hessian_floor", b.hessian_floor);
  if (j.contains("objective")) {
    const auto name = j.at("objective").get<std::string>();
    c.auto_objective = name == "auto";
    if (!c.auto_objective) b.objective = gbdt::parse_objective(name);
  }
}

ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw Error("config must be a JSON object");
  reject_unknown(j,
                 {"name", "dataset", "data_dir", "split", "noise", "boost", "detectors",
                  "corrections", "threshold", "lrt_epsilon", "window", "removal_budget",
                  "evaluation_points", "monitor", "tables", "seed", "trials", "subsample", "jobs",
                  "out", "outputs"},
                 "config");
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  if (!j.contains("dataset")) throw Error("config needs a 'dataset' section");
  const auto& d = j.at("dataset");
  if (d.is_string()) {
    const auto id = d.get<std::string>();
    auto builtin = builtin_dataset(id);
    if (!builtin) throw Error("unknown dataset id '" + id + "'");
    c.dataset = *builtin;
  } else {
    reject_unknown(d, {"id", "path", "label_column"}, "dataset");
    if (d.contains("id") && !d.contains("path")) {
      auto builtin = builtin_dataset(d.at("id").get<std::string>());
      if (!builtin) throw Error("unknown dataset id '" + d.at("id").get<std::string>() + "'");
      c.dataset = *builtin;
    }
    if (d.contains("id")) c.dataset.id = d.at("id").get<std::string>();
    if (d.contains("path")) c.dataset.path = d.at("path").get<std::string>();
    if (d.contains("label_column")) c.dataset.label_column = d.at("label_column").get<std::string>();
    if (c.dataset.id.empty()) c.dataset.id = c.dataset.path.stem().string();
  }
  if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
  if (j.contains("split")) {
    const auto& s = j.at("split");
    reject_unknown(s, {"test_fraction", "stratified"}, "split");
    c.split.test_fraction = s.value("test_fraction", c.split.test_fraction);
    c.split.stratified = s.value("stratified", c.split.stratified);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    reject_unknown(n, {"kinds", "rates"}, "noise");
    if (n.contains("kinds")) {
      c.noise_kinds.clear();
      for (const auto& k : n.at("kinds")) c.noise_kinds.push_back(noise::parse_noise_kind(k.get<std::string>()));
    }
    if (n.contains("rates")) c.noise_rates = n.at("rates").get<std::vector<double>>();
  }
  if (j.contains("boost")) parse_boost(j.at("boost"), c);
  if (j.contains("detectors")) {
    c.detectors.clear();
    for (const auto& m : j.at("detectors")) c.detectors.push_back(detect::parse_method(m.get<std::string>()));
  }
  if (j.contains("corrections")) {
    c.corrections.clear();
    for (const auto& m : j.at("corrections")) c.corrections.push_back(correct::parse_mode(m.get<std::string>()));
  }
  if (j.contains("threshold") && !j.at("threshold").is_null()) {
    c.threshold = detect::parse_policy(j.at("threshold").get<std::string>());
  }
  c.lrt_epsilon = j.value("lrt_epsilon", c.lrt_epsilon);
  c.window = j.value("window", c.window);
  c.removal_budget = j.value("removal_budget", c.removal_budget);
  if (j.contains("evaluation_points")) {
    c.evaluation_points = j.at("evaluation_points").get<std::vector<std::string>>();
  }
  if (j.contains("monitor")) {
    const auto& m = j.at("monitor");
    if (m.is_string()) {
      c.monitor = parse_monitor(m.get<std::string>());
    } else {
      reject_unknown(m, {"kind", "validation_fraction"}, "monitor");
      if (m.contains("kind")) c.monitor = parse_monitor(m.at("kind").get<std::string>());
      c.validation_fraction = m.value("validation_fraction", c.validation_fraction);
    }
  }
  if (j.contains("tables")) {
    const auto& t = j.at("tables");
    reject_unknown(t, {"detection_rates", "classification_kind", "classification_rate"}, "tables");
    if (t.contains("detection_rates")) c.detection_table_rates = t.at("detection_rates").get<std::vector<double>>();
    if (t.contains("classification_kind")) {
      c.classification_kind = noise::parse_noise_kind(t.at("classification_kind").get<std::string>());
    }
    c.classification_rate = t.value("classification_rate", c.classification_rate);
  }
  c.seed = j.value("seed", c.seed);
  c.trials = j.value("trials", c.trials);
  if (j.contains("subsample") && !j.at("subsample").is_null()) {
    c.subsample = j.at("subsample").get<std::size_t>();
  }
  c.jobs = j.value("jobs", c.jobs);
  if (j.contains("out")) c.out = j.at("out").get<std::string>();
  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    reject_unknown(o, {"scores", "dynamics", "model"}, "outputs");
    c.dump_scores = o.value("scores", c.dump_scores);
    c.dump_dynamics = o.value("dynamics", c.dump_dynamics);
    c.save_model = o.value("model", c.save_model);
  }
  return c;
}

// Runs tasks 0..count-1 on up to `jobs` threads; the first exception is rethrown.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        {
          std::lock_guard lock(mu);
          if (failure) return;
        }
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<NoiseCell> noise_cells(const ExperimentConfig& c) {
  std::vector<NoiseCell> cells;
  for (int t = 0; t < c.trials; ++t) {
    for (auto kind : c.noise_kinds) {
      for (double rate : c.noise_rates) cells.push_back({kind, rate, t});
    }
  }
  return cells;
}

std::vector<RunSpec> stage2_runs(const ExperimentConfig& c) {
  std::vector<RunSpec> runs = {RunSpec{}};
  for (auto mode : c.corrections) {
    if (mode == correct::Mode::kNone) continue;
    for (auto m : c.detectors) runs.push_back({m, mode, std::nullopt});
  }
  return runs;
}

// Records detector outputs before correction and prediction types after
// every round.
class Recorder : public gbdt::TrainingCallback {
 public:
  Recorder(const ExperimentConfig& config, std::vector<detect::Method> methods)
      : config_(config), methods_(std::move(methods)) {}

  // Per round and tracked method: score and flag of every instance.
  struct Snapshot {
    std::vector<std::vector<float>> scores;
    std::vector<std::vector<std::uint8_t>> flags;
    std::vector<ClassId> labels;
  };

  void observe(const gbdt::RoundContext& ctx) override {
    const auto& labels = ctx.state.labels;
    const auto& weights = ctx.state.weights;
    const auto& clean = ctx.train.clean_labels;
    if (config_.dump_dynamics) {
      dynamics::write_record_csv(dynamics_, ctx.log.latest(), labels, ctx.train.instance_ids,
                                 ctx.round == 1);
    }
    Snapshot snap;
    if (config_.dump_scores) snap.labels = labels;
    std::vector<report::DetectorRound> rows;
    for (auto m : methods_) {
      const auto det = detect::run_detector(config_.detector_config(m), ctx.log, labels,
                                            ctx.train.instance_ids, weights);
      if (config_.dump_scores) {
        auto& sc = snap.scores.emplace_back(det.scores.size());
        auto& fl = snap.flags.emplace_back(det.scores.size());
        for (std::size_t i = 0; i < det.scores.size(); ++i) {
          sc[i] = static_cast<float>(det.scores[i].score);
          fl[i] = det.scores[i].flagged_noisy;
        }
      }
      if (!det.warning.empty() && warned_.insert(m).second) {
        warnings_.push_back("round " + std::to_string(ctx.round) + " " + detect::to_string(m) +
                            ": " + det.warning);
      }
      std::vector<std::uint8_t> flags;
      std::vector<std::uint8_t> mask;
      report::DetectorRound row;
      row.method = m;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        const bool f = det.scores[i].flagged_noisy;
        const bool noisy = clean[i] != labels[i];
        flags.push_back(f);
        mask.push_back(noisy);
        row.flagged += f ? 1 : 0;
        row.flagged_noisy += f && noisy ? 1 : 0;
      }
      row.active = flags.size();
      if (!flags.empty()) {
        const auto dm = detect::detection_metrics(flags, mask);
        row.accuracy = dm.accuracy;
        row.precision = dm.precision;
        row.recall = dm.recall;
        row.estimated_noise_rate = detect::estimated_noise_rate(flags);
      }
      rows.push_back(row);
    }
    detectors_.push_back(std::move(rows));
    if (config_.dump_scores) snapshots_.push_back(std::move(snap));
  }

  void after_round(const gbdt::RoundSummary& s) override {
    types_.push_back(report::prediction_type_counts(s.train_predictions.predicted,
                                                    s.train.clean_labels, s.train.noisy_labels));
  }

  const std::vector<std::vector<report::DetectorRound>>& detectors() const { return detectors_; }
  const std::vector<report::PredictionTypeCounts>& types() const { return types_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::vector<Snapshot>& snapshots() const { return snapshots_; }
  const std::vector<detect::Method>& methods() const { return methods_; }
  std::string dynamics_csv() const { return dynamics_.str(); }

 private:
  const ExperimentConfig& config_;
  std::vector<detect::Method> methods_;
  std::vector<std::vector<report::DetectorRound>> detectors_;
  std::vector<report::PredictionTypeCounts> types_;
  std::set<detect::Method> warned_;
  std::vector<std::string> warnings_;
  std::vector<Snapshot> snapshots_;
  std::ostringstream dynamics_;
};

// instance_id,method,label,score,flagged,noise_mask for one recorded round.
std::string scores_csv(const Recorder& rec, const data::Dataset& train, int round) {
  const auto& snap = rec.snapshots()[static_cast<std::size_t>(round - 1)];
  std::ostringstream out;
  out.precision(9);
  out << "instance_id,method,label,score,flagged,noise_mask\n";
  for (std::size_t k = 0; k < rec.methods().size(); ++k) {
    const std::string name = detect::to_string(rec.methods()[k]);
    for (std::size_t i = 0; i < snap.labels.size(); ++i) {
      out << train.instance_ids[i] << ',' << name << ',' << snap.labels[i] << ','
          << snap.scores[k][i] << ',' << int{snap.flags[k][i]} << ','
          << (train.clean_labels[i] != snap.labels[i] ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::vector<report::TableRow> read_tables_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing upstream report " + path.string() + " (run stage 2 first)");
  std::string line;
  std::getline(in, line);
  std::vector<report::TableRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 9) throw Error("malformed row in " + path.string());
    report::TableRow r;
    r.dataset = f[0];
    r.noise_kind = f[1];
    r.rate = std::stod(f[2]);
    r.detection = f[3];
    r.correction = f[4];
    r.metric = f[5];
    r.value = std::stod(f[6]);
    if (!f[7].empty()) r.std = std::stod(f[7]);
    r.is_best = f[8] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

bool same_rate(double a, double b) { return std::abs(a - b) < 1e-9; }

}  // namespace

std::optional<DatasetSpec> builtin_dataset(const std::string& id) {
  if (id == "adult") return DatasetSpec{id, "adult.csv", "income"};
  if (id == "breast_cancer") return DatasetSpec{id, "breast_cancer.csv", "target"};
  if (id == "dry_bean") return DatasetSpec{id, "dry_bean.csv", "Class"};
  if (id == "covertype") return DatasetSpec{id, "covertype.csv", "Cover_Type"};
  return std::nullopt;
}

std::string to_string(MonitorKind kind) {
  switch (kind) {
    case MonitorKind::kValidation: return "validation";
    case MonitorKind::kTest: return "test";
    case MonitorKind::kNone: return "none";
  }
  return "?";
}

MonitorKind parse_monitor(const std::string& name) {
  if (name == "validation") return MonitorKind::kValidation;
  if (name == "test") return MonitorKind::kTest;
  if (name == "none") return MonitorKind::kNone;
  throw Error("unknown monitor '" + name + "' (expected validation, test or none)");
}

void ExperimentConfig::validate() const {
  if (dataset.path.empty()) throw Error("dataset path is empty");
  if (dataset.label_column.empty()) throw Error("dataset label_column is empty");
  if (noise_kinds.empty()) throw Error("noise kinds grid is empty");
  if (noise_rates.empty()) throw Error("noise rates grid is empty");
  for (double r : noise_rates) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error("noise rate " + std::to_string(r) + " outside [0, 1]");
  }
  if (detectors.empty()) throw Error("detector grid is empty");
  if (corrections.empty()) throw Error("correction grid is empty");
  if (!(split.test_fraction > 0.0 && split.test_fraction < 1.0)) {
    throw Error("split.test_fraction must lie in (0, 1)");
  }
  if (!(lrt_epsilon > 0.0)) throw Error("lrt_epsilon must be positive");
  if (window == 0) throw Error("window must be at least 1");
  if (!(removal_budget >= 0.0 && removal_budget <= 1.0)) throw Error("removal_budget must lie in [0, 1]");
  if (monitor == MonitorKind::kValidation &&
      !(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw Error("monitor.validation_fraction must lie in (0, 1)");
  }
  for (const auto& p : evaluation_points) {
    if (!valid_point(p)) throw Error("unknown evaluation point '" + p + "'");
  }
  if (trials < 1) throw Error("trials must be at least 1");
  if (jobs < 1) throw Error("jobs must be at least 1");
  if (subsample && *subsample < 2) throw Error("subsample must be at least 2");
  if (threshold && threshold->kind == detect::ThresholdPolicy::Kind::kQuantile &&
      !(threshold->value >= 0.0 && threshold->value <= 1.0)) {
    throw Error("quantile threshold must lie in [0, 1]");
  }
  boost.validate();
}

std::filesystem::path ExperimentConfig::dataset_path() const {
  if (dataset.path.is_absolute()) return dataset.path;
  std::filesystem::path dir = data_dir;
  if (dir.empty()) {
    const char* env = std::getenv("NOISYGBDT_DATA_DIR");
    dir = env && *env ? env : "data";
  }
  return dir / dataset.path;
}

detect::DetectorConfig ExperimentConfig::detector_config(detect::Method method) const {
  detect::DetectorConfig d;
  d.method = method;
  d.policy = threshold;
  d.lrt_epsilon = lrt_epsilon;
  return d;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    throw Error(std::string("config has a field of the wrong type: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json kinds = json::array();
  for (auto k : c.noise_kinds) kinds.push_back(noise::to_string(k));
  json detectors = json::array();
  for (auto m : c.detectors) detectors.push_back(detect::to_string(m));
  json corrections = json::array();
  for (auto m : c.corrections) corrections.push_back(correct::to_string(m));
  const auto& b = c.boost;
  json j = {
      {"name", c.name},
      {"dataset", {{"id", c.dataset.id}, {"path", c.dataset.path.string()}, {"label_column", c.dataset.label_column}}},
      {"data_dir", c.data_dir.string()},
      {"split", {{"test_fraction", c.split.test_fraction}, {"stratified", c.split.stratified}}},
      {"noise", {{"kinds", kinds}, {"rates", c.noise_rates}}},
      {"boost",
       {{"max_depth", b.max_depth},
        {"learning_rate", b.learning_rate},
        {"n_rounds", b.n_rounds},
        {"l2_reg", b.l2_reg},
        {"min_split_gain", b.min_split_gain},
        {"min_child_weight", b.min_child_weight},
        {"objective", c.auto_objective ? std::string("auto") : gbdt::to_string(b.objective)},
        {"early_stopping", b.early_stopping},
        {"early_stop_min_delta", b.early_stop_min_delta},
        {"early_stop_patience", b.early_stop_patience},
        {"early_stop_reference", gbdt::to_string(b.early_stop_reference)},
        {"early_stop_after_warmup", b.early_stop_after_warmup},
        {"monitor_mean_loss", b.monitor_mean_loss},
        {"warmup_rounds", b.warmup_rounds},
        {"hessian_floor", b.hessian_floor}}},
      {"detectors", detectors},
      {"corrections", corrections},
      {"threshold", c.threshold ? json(detect::to_string(*c.threshold)) : json(nullptr)},
      {"lrt_epsilon", c.lrt_epsilon},
      {"window", c.window},
      {"removal_budget", c.removal_budget},
      {"evaluation_points", c.evaluation_points},
      {"monitor", {{"kind", to_string(c.monitor)}, {"validation_fraction", c.validation_fraction}}},
      {"tables",
       {{"detection_rates", c.detection_table_rates},
        {"classification_kind", noise::to_string(c.classification_kind)},
        {"classification_rate", c.classification_rate}}},
      {"seed", c.seed},
      {"trials", c.trials},
      {"subsample", c.subsample ? json(*c.subsample) : json(nullptr)},
      {"jobs", c.jobs},
      {"out", c.out.string()},
      {"outputs", {{"scores", c.dump_scores}, {"dynamics", c.dump_dynamics}, {"model", c.save_model}}}};
  return j.dump(2) + "\n";
}

void apply_environment(ExperimentConfig& c) {
  if (const char* out = std::getenv("NOISYGBDT_OUT"); out && *out) c.out = out;
  if (c.data_dir.empty()) {
    if (const char* dir = std::getenv("NOISYGBDT_DATA_DIR"); dir && *dir) c.data_dir = dir;
  }
}

std::uint64_t trial_seed(const ExperimentConfig& c, int trial) {
  return trial == 0 ? c.seed : derive_seed(c.seed, 1000 + static_cast<std::uint64_t>(trial));
}

Workspace::Workspace(const ExperimentConfig& config)
    : Workspace(config, data::load_csv(config.dataset_path(),
                                       data::CsvOptions{',', {"", "?"}, config.dataset.label_column})) {}

Workspace::Workspace(const ExperimentConfig& config, data::RawTable table)
    : config_(config), table_(std::move(table)) {
  table_.column_index(config_.dataset.label_column);
}

CellData Workspace::prepare(const NoiseCell& cell) const {
  CellData out;
  out.cell = cell;
  out.seed = trial_seed(config_, cell.trial);

  const data::RawTable* table = &table_;
  data::RawTable sampled;
  if (config_.subsample && *config_.subsample < table_.rows) {
    sampled = data::stratified_subsample(table_, config_.dataset.label_column, *config_.subsample,
                                         derive_seed(out.seed, 2));
    table = &sampled;
    out.subsampled = true;
  }
  data::SplitSpec split = config_.split;
  split.seed = derive_seed(out.seed, 1);
  auto [train, test] = data::split_and_preprocess(*table, config_.dataset.label_column, split);

  const auto matrix = noise::make_matrix(cell.kind, train.class_count, cell.rate);
  const std::uint64_t stream = 100 + 10000 * static_cast<std::uint64_t>(cell.kind) +
                               static_cast<std::uint64_t>(std::llround(cell.rate * 1000.0));
  auto injection = noise::inject(train.clean_labels, matrix, derive_seed(out.seed, stream));
  train.set_noisy_labels(std::move(injection.noisy_labels));

  if (config_.monitor == MonitorKind::kValidation) {
    data::SplitSpec carve{config_.validation_fraction, true, derive_seed(out.seed, stream + 1)};
    auto [rest, val] = data::partition(train.noisy_labels, carve, train.class_names);
    out.validation = train.subset(val);
    out.train = train.subset(rest);
  } else {
    out.train = std::move(train);
  }
  out.test = std::move(test);
  return out;
}

RunOutcome run_cell(const ExperimentConfig& config, const CellData& data, const RunSpec& spec) {
  if (spec.correction != correct::Mode::kNone && !spec.detector) {
    throw Error("a correction run needs a detector");
  }
  gbdt::BoostConfig boost = config.boost;
  if (config.auto_objective) boost.objective = gbdt::default_objective(data.train.class_count);

  std::vector<detect::Method> tracked;
  if (spec.tracked) {
    tracked = *spec.tracked;
  } else if (spec.detector) {
    tracked = {*spec.detector};
  } else {
    tracked = config.detectors;
  }
  Recorder recorder(config, tracked);
  std::optional<correct::Corrector> corrector;
  std::vector<gbdt::TrainingCallback*> callbacks = {&recorder};
  if (spec.correction != correct::Mode::kNone) {
    corrector.emplace(spec.correction, config.detector_config(*spec.detector),
                      data.train.clean_labels, config.removal_budget);
    callbacks.push_back(&*corrector);
  }

  std::ostringstream metrics_log;
  gbdt::TrainOptions options;
  options.metrics_log = &metrics_log;
  options.test = &data.test;
  options.dynamics_window = config.window;
  options.removal_budget = config.removal_budget;
  if (config.monitor == MonitorKind::kValidation) {
    options.monitor = &*data.validation;
  } else if (config.monitor == MonitorKind::kTest) {
    options.monitor = &data.test;
  }

  RunOutcome outcome;
  outcome.result = gbdt::train(data.train, boost, options, callbacks);
  const auto& result = outcome.result;

  auto& r = outcome.report;
  r.dataset = config.dataset.id;
  r.noise_kind = noise::to_string(data.cell.kind);
  r.noise_rate = data.cell.rate;
  r.empirical_noise_rate = noise::empirical_rate(data.train.noise_mask);
  r.detection = spec.detector ? detect::to_string(*spec.detector) : "none";
  r.correction = correct::to_string(spec.correction);
  r.seed = data.seed;
  r.trial = data.cell.trial;
  r.subsampled = data.subsampled;
  r.train_size = data.train.size();
  r.monitor_size = data.validation ? data.validation->size() : 0;
  r.test_size = data.test.size();
  r.class_count = data.train.class_count;
  r.best_round = result.best_round;
  r.rounds_trained = result.rounds_trained;
  r.stopped_early = result.stopped_early;

  const auto pred = gbdt::predict(result.ensemble, data.test.features);
  r.final_metrics =
      report::classification_metrics(pred.predicted, data.test.clean_labels, data.train.class_count);

  for (std::size_t i = 0; i < result.series.size(); ++i) {
    const auto& m = result.series[i];
    report::SeriesRow row;
    row.round = m.round;
    row.train_logloss = m.train_logloss;
    row.train_accuracy = m.train_accuracy;
    row.monitor_loss = m.monitor_loss;
    row.test_logloss = m.test_logloss;
    row.test_accuracy = m.test_accuracy;
    row.removed = m.removed;
    row.types = recorder.types()[i];
    row.detectors = recorder.detectors()[i];
    r.series.push_back(std::move(row));
  }
  for (const auto& name : config.evaluation_points) {
    int round = name == kFirstAfterWarmup ? boost.warmup_rounds + 1 : result.best_round + 1;
    round = std::min(round, result.rounds_trained);
    if (round < 1) continue;
    r.evaluation_points.push_back({name, round, recorder.detectors()[static_cast<std::size_t>(round - 1)]});
    if (config.dump_scores) outcome.score_dumps.push_back({name, scores_csv(recorder, data.train, round)});
  }
  outcome.metrics_csv = metrics_log.str();
  if (config.dump_dynamics) outcome.dynamics_csv = recorder.dynamics_csv();
  if (config.save_model) outcome.model_json = gbdt::model_to_json(result.ensemble, boost);
  if (corrector) {
    const auto& st = corrector->state();
    r.removed = st.removed_count;
    r.relabeled = st.relabeled_count;
    r.budget_hit = st.budget_hit;
    r.events = st.events;
  }
  r.warnings = data.train.warnings;
  for (const auto& w : recorder.warnings()) r.warnings.push_back(w);
  r.config_json = config_to_json(config);
  return outcome;
}

void write_run(const RunOutcome& outcome, const std::filesystem::path& dir) {
  report::write_report(outcome.report, dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << text;
  };
  put("metrics.csv", outcome.metrics_csv);
  if (!outcome.dynamics_csv.empty()) put("dynamics.csv", outcome.dynamics_csv);
  if (!outcome.model_json.empty()) put("model.json", outcome.model_json);
  for (const auto& [point, csv] : outcome.score_dumps) put("scores_" + point + ".csv", csv);
}

std::string cell_dir_name(const NoiseCell& cell) {
  return noise::to_string(cell.kind) + "_" + fixed2(cell.rate) + "/trial" + std::to_string(cell.trial);
}

std::string run_dir_name(const RunSpec& spec) {
  return (spec.detector ? detect::to_string(*spec.detector) : std::string("none")) + "_" +
         correct::to_string(spec.correction);
}

std::vector<report::RunReport> run_stage1(const ExperimentConfig& config, const Progress& progress) {
  config.validate();
  const Workspace ws(config);
  const auto cells = noise_cells(config);
  std::vector<report::RunReport> reports(cells.size());
  std::mutex mu;
  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const auto data = ws.prepare(cells[i]);
    auto outcome = run_cell(config, data, RunSpec{});
    const auto dir = config.out / "stage1" / cell_dir_name(cells[i]);
    write_run(outcome, dir);
    std::ofstream matrix(dir / "noise_matrix.csv");
    noise::make_matrix(cells[i].kind, data.train.class_count, cells[i].rate).write_csv(matrix);
    reports[i] = std::move(outcome.report);
    if (progress) {
      std::lock_guard lock(mu);
      progress("stage1 " + cell_dir_name(cells[i]) + " done");
    }
  });
  return reports;
}

std::vector<report::RunReport> run_stage2(const ExperimentConfig& config, const Progress& progress) {
  config.validate();
  const Workspace ws(config);
  const auto cells = noise_cells(config);
  const auto runs = stage2_runs(config);
  const std::size_t total = cells.size() * runs.size();
  std::vector<report::RunReport> reports(total);
  std::mutex mu;
  parallel_for(total, config.jobs, [&](std::size_t t) {
    const auto& cell = cells[t / runs.size()];
    const auto& run = runs[t % runs.size()];
    const auto data = ws.prepare(cell);
    auto outcome = run_cell(config, data, run);
    write_run(outcome, config.out / "stage2" / cell_dir_name(cell) / run_dir_name(run));
    reports[t] = std::move(outcome.report);
    if (progress) {
      std::lock_guard lock(mu);
      progress("stage2 " + cell_dir_name(cell) + " " + run_dir_name(run) + " done");
    }
  });
  return reports;
}

std::vector<report::TableRow> aggregate_tables(const ExperimentConfig& config,
                                               std::span<const report::TableRow> rows) {
  // (kind, rate, detection, correction, metric) -> values across trials
  using Key = std::tuple<std::string, long long, std::string, std::string, std::string>;
  std::map<Key, std::vector<double>> values;
  std::string dataset = config.dataset.id;
  for (const auto& r : rows) {
    values[{r.noise_kind, std::llround(r.rate * 1000.0), r.detection, r.correction, r.metric}].push_back(r.value);
  }
  auto stat = [&](const Key& key) -> std::optional<std::pair<double, std::optional<double>>> {
    auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    const auto& v = it->second;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    std::optional<double> sd;
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return std::make_pair(mean, sd);
  };

  std::vector<report::TableRow> out;
  // Detection accuracy at the early-stop point, best correction per detector.
  for (auto kind : config.noise_kinds) {
    for (double rate : config.detection_table_rates) {
      if (rate < 0.1 - 1e-9 || rate > 0.4 + 1e-9) continue;
      if (std::none_of(config.noise_rates.begin(), config.noise_rates.end(),
                       [&](double r) { return same_rate(r, rate); })) {
        continue;
      }
      const std::size_t first = out.size();
      for (auto m : config.detectors) {
        std::optional<report::TableRow> best;
        for (auto mode : config.corrections) {
          if (mode == correct::Mode::kNone) continue;
          const Key key{noise::to_string(kind), std::llround(rate * 1000.0), detect::to_string(m),
                        correct::to_string(mode), "detection_accuracy"};
          const auto s = stat(key);
          if (!s) continue;
          if (!best || s->first > best->value) {
            report::TableRow row{dataset, noise::to_string(kind), rate, detect::to_string(m),
                                 correct::to_string(mode), "detection_accuracy", s->first, s->second,
                                 false};
            best = row;
          }
        }
        if (best) out.push_back(*best);
      }
      double top = -1.0;
      for (std::size_t i = first; i < out.size(); ++i) top = std::max(top, out[i].value);
      for (std::size_t i = first; i < out.size(); ++i) out[i].is_best = out[i].value == top;
    }
  }
  // Classification metrics on the clean test set.
  const char* metrics[] = {"accuracy", "precision", "recall", "f1"};
  const auto kind = noise::to_string(config.classification_kind);
  const auto rate_key = std::llround(config.classification_rate * 1000.0);
  std::vector<std::pair<std::string, std::string>> combos = {{"none", "none"}};
  for (auto mode : config.corrections) {
    if (mode == correct::Mode::kNone) continue;
    for (auto m : config.detectors) combos.emplace_back(detect::to_string(m), correct::to_string(mode));
  }
  for (const char* metric : metrics) {
    const std::size_t first = out.size();
    for (const auto& [det, mode] : combos) {
      const auto s = stat({kind, rate_key, det, mode, metric});
      if (!s) continue;
      out.push_back({dataset, kind, config.classification_rate, det, mode, metric, s->first, s->second, false});
    }
    double top = -1.0;
    for (std::size_t i = first; i < out.size(); ++i) top = std::max(top, out[i].value);
    for (std::size_t i = first; i < out.size(); ++i) out[i].is_best = out[i].value == top;
  }
  return out;
}

std::vector<report::TableRow> run_stage3(const ExperimentConfig& config, const Progress& progress) {
  config.validate();
  std::vector<report::TableRow> rows;
  for (const auto& cell : noise_cells(config)) {
    for (const auto& run : stage2_runs(config)) {
      const auto path = config.out / "stage2" / cell_dir_name(cell) / run_dir_name(run) / "tables.csv";
      for (auto& r : read_tables_csv(path)) rows.push_back(std::move(r));
    }
  }
  auto table = aggregate_tables(config, rows);
  const auto dir = config.out / "stage3";
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "tables.csv", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "tables.csv").string());
  report::write_tables_csv(out, table);
  if (progress) progress("stage3 wrote " + (dir / "tables.csv").string());
  return table;
}

}  // namespace noisygbdt::experiment

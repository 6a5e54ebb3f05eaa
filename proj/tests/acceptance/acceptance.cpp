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


// Acceptance runner: `noisygbdt_acceptance --criterion N [--data-dir DIR]`
// prints one "criterion N: PASS|FAIL ..." line and exits nonzero on FAIL.
// Every tolerance and reference value is pinned here.

#include <gtest/gtest.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "noisygbdt/detect.hpp"
#include "noisygbdt/experiment.hpp"
#include "noisygbdt/gbdt.hpp"
#include "noisygbdt/report.hpp"

namespace fs = std::filesystem;
using namespace noisygbdt;
using namespace noisygbdt::experiment;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Verdict {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + what + (ok ? "" : " [miss]");
  }
  void info(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

class TempDir {
 public:
  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "noisygbdt_acceptance_XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) throw Error("cannot create a temporary directory");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ExperimentConfig base_config(const std::string& dataset, const fs::path& data_dir) {
  ExperimentConfig c;
  c.name = dataset;
  c.dataset = *builtin_dataset(dataset);
  c.data_dir = data_dir;
  c.seed = kSeed;
  c.jobs = 1;
  c.save_model = false;
  return c;
}

bool available(const ExperimentConfig& c, Verdict& v) {
  if (fs::exists(c.dataset_path())) return true;
  v.pass = false;
  v.detail = "dataset unavailable (" + c.dataset_path().string() + ")";
  return false;
}

// Stage 2 followed by stage 3 in a scratch directory.
std::vector<report::TableRow> tables(ExperimentConfig c) {
  TempDir dir;
  c.out = dir.path();
  run_stage2(c);
  return run_stage3(c);
}

std::optional<double> lookup(const std::vector<report::TableRow>& rows, double rate,
                             const std::string& detection, const std::string& metric,
                             const std::string& correction = "") {
  for (const auto& r : rows) {
    if (std::abs(r.rate - rate) < 1e-9 && r.detection == detection && r.metric == metric &&
        (correction.empty() || r.correction == correction)) {
      return r.value;
    }
  }
  return std::nullopt;
}

// Baseline runs (no correction) tracking every detector, one per rate.
std::vector<report::RunReport> baselines(const ExperimentConfig& c, noise::NoiseKind kind,
                                         const std::vector<double>& rates) {
  Workspace ws(c);
  std::vector<report::RunReport> out;
  for (double rate : rates) {
    const auto data = ws.prepare({kind, rate, 0});
    out.push_back(run_cell(c, data, RunSpec{}).report);
  }
  return out;
}

const report::DetectorRound& detector_at(const report::RunReport& r, const std::string& point,
                                         detect::Method m) {
  const auto* p = r.point(point);
  if (p == nullptr) throw Error("missing evaluation point " + point);
  for (const auto& d : p->detectors) {
    if (d.method == m) return d;
  }
  throw Error("detector not tracked: " + detect::to_string(m));
}

// Collects the training-set record of every round.
class RecordTap : public gbdt::TrainingCallback {
 public:
  explicit RecordTap(std::function<void(const gbdt::RoundContext&)> fn) : fn_(std::move(fn)) {}
  void observe(const gbdt::RoundContext& ctx) override { fn_(ctx); }

 private:
  std::function<void(const gbdt::RoundContext&)> fn_;
};

gbdt::BoostConfig resolved_boost(const ExperimentConfig& c, const data::Dataset& train) {
  auto b = c.boost;
  if (c.auto_objective) b.objective = gbdt::default_objective(train.class_count);
  return b;
}

// ------------------------------------------------------------------ criteria

Verdict adult_detection(const fs::path& data_dir) {
  Verdict v;
  auto c = base_config("adult", data_dir);
  if (!available(c, v)) return v;
  c.noise_kinds = {noise::NoiseKind::kPair};
  c.noise_rates = {0.1, 0.2, 0.3};
  c.detection_table_rates = c.noise_rates;
  c.detectors = {detect::Method::kAum, detect::Method::kLrt};
  const auto rows = tables(c);
  for (double rate : c.noise_rates) {
    for (const char* m : {"AUM", "LRT"}) {
      const double a = lookup(rows, rate, m, "detection_accuracy").value_or(NAN);
      v.check(a >= 97.0, std::string(m) + fmt(" %.1f: %.2f >= 97.0", rate, a));
    }
  }
  return v;
}

Verdict bc_confcorr(const fs::path& data_dir) {
  Verdict v;
  auto c = base_config("breast_cancer", data_dir);
  if (!available(c, v)) return v;
  c.noise_kinds = {noise::NoiseKind::kPair};
  c.noise_rates = {0.1, 0.2, 0.3};
  c.detection_table_rates = c.noise_rates;
  c.detectors = {detect::Method::kConfCorr};
  const std::map<double, double> reference = {{0.1, 92.06}, {0.2, 90.75}, {0.3, 85.25}};
  const auto rows = tables(c);
  for (const auto& [rate, ref] : reference) {
    const double a = lookup(rows, rate, "ConfCorr", "detection_accuracy").value_or(NAN);
    v.check(std::abs(a - ref) <= 5.0, fmt("%.1f: %.2f vs %.2f +-5", rate, a, ref));
  }
  c.trials = 10;
  const auto mean = tables(c);
  std::string line = "10-trial mean";
  for (const auto& [rate, ref] : reference) {
    line += fmt(" %.2f", lookup(mean, rate, "ConfCorr", "detection_accuracy").value_or(NAN));
  }
  v.info(line + " (info)");
  return v;
}

Verdict bc_gradients_remove(const fs::path& data_dir) {
  Verdict v;
  auto c = base_config("breast_cancer", data_dir);
  if (!available(c, v)) return v;
  c.noise_kinds = {noise::NoiseKind::kPair};
  c.noise_rates = {0.3};
  c.detection_table_rates = c.noise_rates;
  c.classification_rate = 0.3;
  c.detectors = {detect::Method::kGradients};
  c.corrections = {correct::Mode::kRemove};
  const auto rows = tables(c);
  const double acc = lookup(rows, 0.3, "Gradients", "accuracy", "remove").value_or(NAN);
  const double f1 = lookup(rows, 0.3, "Gradients", "f1", "remove").value_or(NAN);
  v.check(acc >= 89.0, fmt("accuracy %.2f >= 89", acc));
  v.check(f1 >= 90.0, fmt("F1 %.2f >= 90", f1));
  c.trials = 10;
  const auto mean = tables(c);
  v.info(fmt("10-trial mean accuracy %.2f F1 %.2f (info)",
             lookup(mean, 0.3, "Gradients", "accuracy", "remove").value_or(NAN),
             lookup(mean, 0.3, "Gradients", "f1", "remove").value_or(NAN)));
  c.trials = 1;
  c.monitor = MonitorKind::kTest;
  const auto test_monitor = tables(c);
  v.info(fmt("test-set monitor accuracy %.2f F1 %.2f (info)",
             lookup(test_monitor, 0.3, "Gradients", "accuracy", "remove").value_or(NAN),
             lookup(test_monitor, 0.3, "Gradients", "f1", "remove").value_or(NAN)));
  return v;
}

Verdict dry_bean_floor(const fs::path& data_dir) {
  Verdict v;
  auto c = base_config("dry_bean", data_dir);
  if (!available(c, v)) return v;
  const std::vector<double> rates = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const auto runs = baselines(c, noise::NoiseKind::kSymmetric, rates);
  for (const auto& r : runs) {
    for (auto m : detect::kAllMethods) {
      const double a = 100.0 * detector_at(r, kFirstAfterWarmup, m).accuracy;
      const bool margin = m == detect::Method::kAum || m == detect::Method::kLrt;
      const double floor = margin ? 88.0 : 65.0;
      v.check(a >= floor, detect::to_string(m) + fmt(" %.1f: %.2f >= %.0f", r.noise_rate, a, floor));
    }
  }
  return v;
}

Verdict dry_bean_rate_estimate(const fs::path& data_dir) {
  Verdict v;
  auto c = base_config("dry_bean", data_dir);
  if (!available(c, v)) return v;
  const auto runs = baselines(c, noise::NoiseKind::kSymmetric, {0.1, 0.2, 0.3, 0.4});
  for (const auto& r : runs) {
    for (auto m : {detect::Method::kAum, detect::Method::kLrt}) {
      const double est = detector_at(r, kFirstAfterWarmup, m).estimated_noise_rate;
      v.check(std::abs(est - r.noise_rate) <= 0.05,
              detect::to_string(m) + fmt(" %.1f: flagged %.3f", r.noise_rate, est));
    }
  }
  return v;
}

Verdict dry_bean_half_pair(const fs::path& data_dir) {
  Verdict v;
  auto c = base_config("dry_bean", data_dir);
  if (!available(c, v)) return v;
  const auto runs = baselines(c, noise::NoiseKind::kPair, {0.5});
  for (auto m : detect::kAllMethods) {
    const double a = 100.0 * detector_at(runs[0], kFirstAfterWarmup, m).accuracy;
    v.check(std::abs(a - 50.0) <= 7.0, detect::to_string(m) + fmt(" %.2f vs 50 +-7", a));
  }
  return v;
}

Verdict dry_bean_gradient_gap(const fs::path& data_dir) {
  Verdict v;
  auto c = base_config("dry_bean", data_dir);
  if (!available(c, v)) return v;
  Workspace ws(c);
  const auto data = ws.prepare({noise::NoiseKind::kPair, 0.3, 0});
  double noisy = 0.0, clean = 0.0;
  std::size_t n_noisy = 0, n_clean = 0;
  RecordTap tap([&](const gbdt::RoundContext& ctx) {
    if (ctx.round != 10) return;
    const auto& g = ctx.log.latest().max_abs_gradient;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (data.train.noise_mask[i]) {
        noisy += g[i];
        ++n_noisy;
      } else {
        clean += g[i];
        ++n_clean;
      }
    }
  });
  auto boost = resolved_boost(c, data.train);
  boost.early_stopping = false;
  boost.n_rounds = 10;
  boost.warmup_rounds = 5;
  gbdt::TrainingCallback* cbs[] = {&tap};
  gbdt::train(data.train, boost, {}, cbs);
  const double ratio = (noisy / static_cast<double>(n_noisy)) / (clean / static_cast<double>(n_clean));
  v.check(ratio >= 1.3, fmt("round 10 noisy/clean mean max|g| = %.3f >= 1.3", ratio));
  return v;
}

Verdict lrt_aum_overlap(const fs::path& data_dir) {
  Verdict v;
  std::size_t compared = 0, disagree = 0, runs = 0;
  for (const char* id : {"breast_cancer", "adult", "dry_bean"}) {
    auto c = base_config(id, data_dir);
    if (!fs::exists(c.dataset_path())) continue;
    Workspace ws(c);
    for (auto kind : {noise::NoiseKind::kPair, noise::NoiseKind::kSymmetric}) {
      const auto data = ws.prepare({kind, 0.3, 0});
      dynamics::DynamicsLog log(data.train.size(), data.train.class_count, 1);
      RecordTap tap([&](const gbdt::RoundContext& ctx) {
        log.record(ctx.log.latest(), ctx.state.labels);
        const detect::DetectorConfig lrt{detect::Method::kLrt, std::nullopt, 1.0};
        const detect::DetectorConfig aum{detect::Method::kAum, std::nullopt, 1.0};
        const auto a = detect::run_detector(lrt, log, ctx.state.labels).flags();
        const auto b = detect::run_detector(aum, log, ctx.state.labels).flags();
        for (std::size_t i = 0; i < a.size(); ++i) disagree += a[i] != b[i];
        compared += a.size();
      });
      auto boost = resolved_boost(c, data.train);
      gbdt::TrainOptions opt;
      if (data.validation) opt.monitor = &*data.validation;
      gbdt::TrainingCallback* cbs[] = {&tap};
      gbdt::train(data.train, boost, opt, cbs);
      ++runs;
    }
  }
  if (runs == 0) {
    v.pass = false;
    v.detail = "dataset unavailable";
    return v;
  }
  v.check(compared > 0 && disagree == 0,
          fmt("%.0f runs, %.0f instance-rounds, %.0f disagreements", static_cast<double>(runs),
              static_cast<double>(compared), static_cast<double>(disagree)));
  return v;
}

Verdict dry_bean_curves(const fs::path& data_dir) {
  Verdict v;
  auto c = base_config("dry_bean", data_dir);
  if (!available(c, v)) return v;
  c.boost.early_stopping = false;
  c.detectors = {};
  const auto low = baselines(c, noise::NoiseKind::kPair, {0.1, 0.3});
  int sign_changes = 0;
  int last = 0;
  for (const auto& row : low[0].series) {
    const auto diff = static_cast<long>(row.types.true_match) - static_cast<long>(row.types.noisy_match);
    const int s = diff > 0 ? 1 : diff < 0 ? -1 : 0;
    if (s != 0 && last != 0 && s != last) ++sign_changes;
    if (s != 0) last = s;
  }
  v.check(sign_changes > 0, fmt("true/noisy-match curves cross %.0f time(s) at 10%% pair", sign_changes));
  const auto& first = low[1].series.front();
  const double gap = first.test_accuracy.value_or(NAN) - first.train_accuracy;
  v.check(std::abs(gap - 0.3) <= 0.05, fmt("initial test-train accuracy gap %.3f vs 0.30 +-0.05", gap));
  return v;
}

Verdict covertype_subsample(const fs::path& data_dir) {
  Verdict v;
  auto c = base_config("covertype", data_dir);
  if (!available(c, v)) return v;
  c.subsample = 50000;
  c.noise_kinds = {noise::NoiseKind::kPair};
  c.noise_rates = {0.1, 0.2, 0.3};
  c.detection_table_rates = c.noise_rates;
  const std::map<std::pair<double, std::string>, double> detection = {
      {{0.1, "AUM"}, 80.94}, {{0.1, "ConfCorr"}, 83.06}, {{0.1, "Gradients"}, 77.20}, {{0.1, "LRT"}, 80.94},
      {{0.2, "AUM"}, 80.90}, {{0.2, "ConfCorr"}, 82.90}, {{0.2, "Gradients"}, 79.90}, {{0.2, "LRT"}, 80.90},
      {{0.3, "AUM"}, 79.60}, {{0.3, "ConfCorr"}, 81.00}, {{0.3, "Gradients"}, 78.80}, {{0.3, "LRT"}, 79.60}};
  struct Row {
    const char* correction;
    const char* detection;
    double accuracy, precision, recall, f1;
  };
  const Row classification[] = {
      {"none", "none", 76.94, 78.06, 62.44, 66.06},
      {"relabel", "AUM", 73.75, 76.56, 56.16, 59.44},
      {"relabel", "ConfCorr", 74.60, 76.75, 57.34, 61.16},
      {"relabel", "Gradients", 74.50, 76.60, 57.16, 60.72},
      {"relabel", "LRT", 73.70, 76.30, 56.20, 59.44},
      {"remove", "AUM", 74.44, 78.00, 58.70, 62.90},
      {"remove", "ConfCorr", 72.60, 77.06, 52.97, 53.30},
      {"remove", "Gradients", 73.30, 78.80, 52.12, 53.06},
      {"remove", "LRT", 74.44, 78.00, 58.60, 62.75}};
  TempDir dir;
  c.out = dir.path();
  const auto reports = run_stage2(c);
  const auto rows = run_stage3(c);
  const bool labeled = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.subsampled; });
  v.check(labeled && !reports.empty(), "every report labeled subsampled");
  std::size_t within = 0, total = 0;
  for (const auto& [key, ref] : detection) {
    const double a = lookup(rows, key.first, key.second, "detection_accuracy").value_or(NAN);
    ++total;
    if (std::abs(a - ref) <= 8.0) {
      ++within;
    } else {
      v.check(false, key.second + fmt(" %.1f detection %.2f vs %.2f", key.first, a, ref));
    }
  }
  for (const auto& row : classification) {
    const std::pair<const char*, double> metrics[] = {
        {"accuracy", row.accuracy}, {"precision", row.precision}, {"recall", row.recall}, {"f1", row.f1}};
    for (const auto& [metric, ref] : metrics) {
      const double a = lookup(rows, 0.3, row.detection, metric, row.correction).value_or(NAN);
      ++total;
      if (std::abs(a - ref) <= 8.0) {
        ++within;
      } else {
        v.check(false, std::string(row.correction) + "/" + row.detection + " " + metric +
                           fmt(" %.2f vs %.2f", a, ref));
      }
    }
  }
  v.info(fmt("%.0f of %.0f cells within +-8", static_cast<double>(within), static_cast<double>(total)));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisygbdt acceptance checks"};
  int criterion = 0;
#ifdef NOISYGBDT_TEST_DATA_DIR
  std::string data_dir = NOISYGBDT_TEST_DATA_DIR;
#else
  std::string data_dir = "data";
#endif
  app.add_option("--criterion", criterion, "criterion number")->required()->check(CLI::Range(1, 11));
  app.add_option("--data-dir", data_dir, "directory holding the dataset CSVs");
  app.allow_extras();
  CLI11_PARSE(app, argc, argv);

  if (criterion == 9) {
    ::testing::InitGoogleTest(&argc, argv);
    ::testing::GTEST_FLAG(filter) = "Property*";
    const int rc = RUN_ALL_TESTS();
    const auto* unit = ::testing::UnitTest::GetInstance();
    std::printf("criterion 9: %s %d property tests, %d failed\n", rc == 0 ? "PASS" : "FAIL",
                unit->test_to_run_count(), unit->failed_test_count());
    return rc == 0 ? 0 : 1;
  }

  using Check = Verdict (*)(const fs::path&);
  const std::map<int, Check> checks = {
      {1, adult_detection},       {2, bc_confcorr},           {3, bc_gradients_remove},
      {4, dry_bean_floor},        {5, dry_bean_rate_estimate}, {6, dry_bean_half_pair},
      {7, dry_bean_gradient_gap}, {8, lrt_aum_overlap},       {10, dry_bean_curves},
      {11, covertype_subsample}};
  Verdict v;
  try {
    v = checks.at(criterion)(data_dir);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("error: ") + e.what();
  }
  std::printf("criterion %d: %s %s\n", criterion, v.pass ? "PASS" : "FAIL", v.detail.c_str());
  return v.pass ? 0 : 1;
}

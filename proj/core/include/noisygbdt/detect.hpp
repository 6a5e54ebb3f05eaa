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

// Per-instance label-noise scores computed from training dynamics, and the
// thresholding policies that turn scores into noisy/clean flags.
//
//   LRT        p(label) / p(predicted) on the latest round; low is noisy.
//   AUM        mean over the window of  z_label - max_{k != label} z_k; low is noisy.
//   ConfCorr   (confidence + correctness) / 2 over all rounds; low is noisy.
//   Gradients  max over the window of the largest |gradient|; high is noisy.

#ifndef NOISYGBDT_DETECT_HPP_
#define NOISYGBDT_DETECT_HPP_

#include <array>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "noisygbdt/common.hpp"
#include "noisygbdt/dynamics.hpp"

namespace noisygbdt::detect {

enum class Method { kLrt, kAum, kConfCorr, kGradients };
enum class Polarity { kLowIsNoisy, kHighIsNoisy };

std::string to_string(Method method);
Method parse_method(const std::string& name);
Polarity polarity_of(Method method);
inline constexpr std::array<Method, 4> kAllMethods = {Method::kAum, Method::kConfCorr,
                                                     Method::kGradients, Method::kLrt};

struct NoiseScore {
  std::size_t index = 0;  // position in the training set
  InstanceId instance_id = 0;
  Method method = Method::kLrt;
  double score = 0.0;
  bool flagged_noisy = false;
  double threshold_used = 0.0;
  Polarity polarity = Polarity::kLowIsNoisy;
};

struct ConfCorrStats {
  double confidence = 0.0;   // mean p(label)
  double variability = 0.0;  // population std of p(label)
  double correctness = 0.0;  // fraction of rounds predicted as label
};

struct Gaussian {
  double mean = 0.0;
  double variance = 1.0;
  double weight = 0.5;
};

// Two-component mixture on the real line, components ordered by mean.
struct Gmm1D {
  std::array<Gaussian, 2> components;
  // Mean per-sample log-likelihood after each EM iteration (first entry is
  // the initialization).
  std::vector<double> log_likelihood_trace;
  int iterations = 0;

  // Posterior probability that x belongs to component `k`.
  double posterior(double x, std::size_t k) const;
  // Point between the two means where the posteriors cross, if any.
  std::optional<double> decision_boundary() const;
};

// EM from percentile initialization (25th / 75th). Stops when the mean
// log-likelihood changes by less than `tol` or after `max_iter` iterations.
// Variances are floored at 1e-9 * range^2. Throws if values has fewer than
// two distinct entries.
Gmm1D fit_gmm_1d(std::span<const double> values, int max_iter = 200, double tol = 1e-6);

struct ThresholdPolicy {
  enum class Kind { kFixed, kGmm, kQuantile };
  Kind kind = Kind::kGmm;
  double value = 0.0;

  static ThresholdPolicy fixed(double v) { return {Kind::kFixed, v}; }
  static ThresholdPolicy gmm() { return {Kind::kGmm, 0.0}; }
  // Flags the (1 - q) fraction of most-noisy scores.
  static ThresholdPolicy quantile(double q) { return {Kind::kQuantile, q}; }
};

std::string to_string(const ThresholdPolicy& policy);
ThresholdPolicy parse_policy(const std::string& text);

struct ThresholdResult {
  std::vector<std::uint8_t> flags;
  double threshold_used = 0.0;
  std::string warning;
};

// The GMM policy cuts where the component posteriors cross between the two
// means (their midpoint when they do not cross) and flags the noisy side.
// `ids` breaks quantile ties (lower id first); positions are used when empty.
// The GMM policy flags nothing, with a warning, when the scores spread less
// than 1e-9 (relative to max(1, |score|)).
ThresholdResult threshold(std::span<const double> scores, Polarity polarity,
                          const ThresholdPolicy& policy, std::span<const InstanceId> ids = {});

// --- scorers. `ids` may be empty, in which case positions stand in for ids.

std::vector<NoiseScore> lrt_scores(const Matrix& probabilities, std::span<const ClassId> labels,
                                   double epsilon = 1.0, std::span<const InstanceId> ids = {});

std::vector<NoiseScore> aum_scores(const std::deque<dynamics::EpochRecord>& window,
                                   std::span<const ClassId> labels,
                                   std::span<const InstanceId> ids = {});

std::vector<ConfCorrStats> confcorr_stats(const dynamics::DynamicsLog& log);
std::vector<NoiseScore> confcorr_scores(const dynamics::DynamicsLog& log,
                                        std::span<const InstanceId> ids = {},
                                        std::string* warning = nullptr);

std::vector<NoiseScore> gradient_scores(const std::deque<dynamics::EpochRecord>& window,
                                        std::span<const InstanceId> ids = {},
                                        std::string* warning = nullptr);

// Detector configuration with the default policy per method:
// LRT fixed(epsilon), AUM fixed(0), ConfCorr and Gradients GMM.
struct DetectorConfig {
  Method method = Method::kAum;
  std::optional<ThresholdPolicy> policy;
  double lrt_epsilon = 1.0;

  ThresholdPolicy effective_policy() const;
};

struct Detection {
  std::vector<NoiseScore> scores;  // one per training instance
  std::string warning;

  std::vector<std::uint8_t> flags() const;
};

// Scores every instance; thresholds are fitted over instances whose weight
// is positive (all when `weights` is empty). Inactive instances are never
// flagged.
Detection run_detector(const DetectorConfig& config, const dynamics::DynamicsLog& log,
                       std::span<const ClassId> labels, std::span<const InstanceId> ids = {},
                       std::span<const double> weights = {});

struct DetectionMetrics {
  double accuracy = 0.0;
  double precision = 0.0;  // 0 when nothing is flagged
  double recall = 0.0;     // 0 when nothing is noisy
};

DetectionMetrics detection_metrics(std::span<const std::uint8_t> flags,
                                   std::span<const std::uint8_t> noise_mask);

double estimated_noise_rate(std::span<const std::uint8_t> flags);

// instance_id,method,score,flagged,noise_mask
void write_scores_csv(std::ostream& out, std::span<const NoiseScore> scores,
                      std::span<const std::uint8_t> noise_mask, bool header = true);

}  // namespace noisygbdt::detect

#endif  // NOISYGBDT_DETECT_HPP_

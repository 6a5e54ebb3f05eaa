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

// Second-order gradient boosting with exact greedy trees, exposing every
// round's logits, probabilities and gradients to training callbacks.

#ifndef NOISYGBDT_GBDT_HPP_
#define NOISYGBDT_GBDT_HPP_

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "noisygbdt/common.hpp"
#include "noisygbdt/data.hpp"
#include "noisygbdt/dynamics.hpp"

namespace noisygbdt::gbdt {

enum class Objective { kSoftprob, kLogistic };
// What a monitored loss must beat by min_delta to count as an improvement.
enum class StopReference { kBest, kPrevious };

std::string to_string(Objective objective);
Objective parse_objective(const std::string& name);
// logistic for two classes, softprob otherwise.
Objective default_objective(int class_count);
std::string to_string(StopReference reference);
StopReference parse_stop_reference(const std::string& name);

struct BoostConfig {
  int max_depth = 6;
  double learning_rate = 0.3;
  int n_rounds = 100;
  double l2_reg = 1.0;
  double min_split_gain = 0.0;
  // Minimum hessian mass per child.
  double min_child_weight = 1.0;
  Objective objective = Objective::kSoftprob;
  bool early_stopping = true;
  double early_stop_min_delta = 0.5;
  int early_stop_patience = 10;
  StopReference early_stop_reference = StopReference::kPrevious;
  // Warm-up rounds are neither best-round candidates nor counted towards
  // patience, so corrections always get a chance to act.
  bool early_stop_after_warmup = true;
  // Monitor loss is summed over instances unless this is set.
  bool monitor_mean_loss = false;
  int warmup_rounds = 15;
  double hessian_floor = 1e-16;

  // Throws Error on an inconsistent configuration.
  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Instances with x[feature] < threshold go left.
class Tree {
 public:
  Tree() : nodes_(1) {}
  explicit Tree(std::vector<TreeNode> nodes);

  static Tree leaf(double value);

  double predict(std::span<const double> x) const;
  std::size_t leaf_index(std::span<const double> x) const;
  int depth() const;
  std::size_t leaf_count() const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(Objective objective, int class_count, double base_score = 0.0);

  Objective objective() const { return objective_; }
  int class_count() const { return class_count_; }
  double base_score() const { return base_score_; }
  // Trees per round: one per class for softprob, one for logistic.
  int outputs() const { return objective_ == Objective::kLogistic ? 1 : class_count_; }
  std::size_t rounds() const { return trees_.size(); }
  const std::vector<std::vector<Tree>>& trees() const { return trees_; }

  void add_round(std::vector<Tree> trees);
  void truncate(std::size_t rounds);

  // Raw outputs, n x outputs().
  Matrix margins(const Matrix& features) const;

  friend bool operator==(const Ensemble&, const Ensemble&) = default;

 private:
  Objective objective_ = Objective::kSoftprob;
  int class_count_ = 2;
  double base_score_ = 0.0;
  std::vector<std::vector<Tree>> trees_;
};

// Maps raw outputs to class probabilities: softmax for softprob, [1 - s, s]
// with s = sigmoid(z) for logistic. Throws on non-finite input.
std::vector<double> probabilities(std::span<const double> outputs, Objective objective);
// Per-class logits from raw outputs; logistic z becomes [0, z].
std::vector<double> class_logits(std::span<const double> outputs, Objective objective);

struct GradHess {
  std::vector<double> grad;
  std::vector<double> hess;
};

// Cross-entropy derivatives w.r.t. the raw outputs for one instance.
GradHess grad_hess(std::span<const double> probs, ClassId label, Objective objective,
                   double hessian_floor = 1e-16);

// Cross-entropy of `label` under per-class logits.
double logloss(std::span<const double> class_logits, ClassId label);

double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  double l2_reg);
double leaf_value(double grad_sum, double hess_sum, double l2_reg, double learning_rate);

// Exact greedy tree learner over presorted feature columns. Instances with
// zero weight take no part in split search or leaf values.
class TreeBuilder {
 public:
  explicit TreeBuilder(const Matrix& features);

  Tree build(std::span<const double> grad, std::span<const double> hess,
             std::span<const double> weights, const BoostConfig& config) const;

  std::size_t instances() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> columns_;                // column-major values
  std::vector<std::vector<std::uint32_t>> order_;  // per-feature ascending order
};

Tree build_tree(const Matrix& features, std::span<const double> grad, std::span<const double> hess,
                std::span<const double> weights, const BoostConfig& config);

struct Predictions {
  Matrix logits;         // per class
  Matrix probabilities;  // per class
  std::vector<ClassId> predicted;
};

Predictions predict(const Ensemble& ensemble, const Matrix& features);
Predictions predictions_from_margins(const Matrix& margins, Objective objective, int class_count);

// Tracks the monitored loss. A round improves when it beats the reference
// (best loss so far, or the previous round's loss) by more than `min_delta`;
// the best round is the last improving one. Training stops after `patience`
// consecutive rounds without improvement.
class EarlyStopper {
 public:
  EarlyStopper(double min_delta, int patience, StopReference reference = StopReference::kPrevious);

  // Feeds the next loss; returns true when training should stop.
  bool update(double loss);
  // Zero-based position of the best loss seen.
  int best_index() const { return best_index_; }
  double best_loss() const { return best_loss_; }

 private:
  double min_delta_;
  int patience_;
  StopReference reference_;
  double previous_ = 0.0;
  int seen_ = 0;
  int best_index_ = -1;
  double best_loss_ = 0.0;
  int stale_ = 0;
};

// Labels and weights a correction callback may rewrite.
struct LabelState {
  std::vector<ClassId> labels;
  std::vector<double> weights;
  // Maximum fraction of instances whose weight may be zero.
  double removal_budget = 0.8;
};

struct RoundContext {
  int round = 0;
  bool after_warmup = false;
  const data::Dataset& train;
  const dynamics::DynamicsLog& log;
  const LabelState& state;
};

struct RoundMetrics {
  int round = 0;
  double train_logloss = 0.0;    // mean, vs noisy labels
  double train_accuracy = 0.0;   // vs noisy labels
  std::optional<double> monitor_loss;  // aggregated as configured
  std::optional<double> test_logloss;  // mean, vs clean labels
  std::optional<double> test_accuracy;
  std::size_t removed = 0;
};

struct RoundSummary {
  const RoundMetrics& metrics;
  const data::Dataset& train;
  const Predictions& train_predictions;  // after this round's trees
  const LabelState& state;
};

class TrainingCallback {
 public:
  virtual ~TrainingCallback() = default;
  // Every round, after the round is recorded and before trees are fitted.
  virtual void observe(const RoundContext& /*ctx*/) {}
  // Rounds past warm-up only; may rewrite labels and zero weights.
  virtual void correct(const RoundContext& /*ctx*/, LabelState& /*state*/) {}
  // After the round's trees are added.
  virtual void after_round(const RoundSummary& /*summary*/) {}
};

struct TrainOptions {
  // Early stopping watches this set (its noisy labels) when present.
  const data::Dataset* monitor = nullptr;
  // Clean-label evaluation set for per-round reporting.
  const data::Dataset* test = nullptr;
  std::size_t dynamics_window = 5;
  double removal_budget = 0.8;
  // Streams round,train_logloss,monitor_logloss,train_accuracy,test_accuracy.
  std::ostream* metrics_log = nullptr;
  // Initial weights; all ones when empty.
  std::vector<double> weights;
};

struct TrainResult {
  Ensemble ensemble;  // truncated to best_round trees
  dynamics::DynamicsLog dynamics;
  std::vector<RoundMetrics> series;
  int best_round = 0;  // number of trees kept
  int rounds_trained = 0;
  bool stopped_early = false;
  LabelState final_state;
};

TrainResult train(const data::Dataset& train, const BoostConfig& config,
                  const TrainOptions& options = {},
                  std::span<TrainingCallback* const> callbacks = {});

// Versioned JSON model document.
inline constexpr int kModelFormatVersion = 1;
std::string model_to_json(const Ensemble& ensemble, const BoostConfig& config);
Ensemble model_from_json(const std::string& text, BoostConfig* config = nullptr);

}  // namespace noisygbdt::gbdt

#endif  // NOISYGBDT_GBDT_HPP_

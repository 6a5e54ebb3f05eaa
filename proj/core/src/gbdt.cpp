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

#include "noisygbdt/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace noisygbdt::gbdt {

std::string to_string(Objective objective) {
  return objective == Objective::kSoftprob ? "softprob" : "logistic";
}

Objective parse_objective(const std::string& name) {
  if (name == "softprob") return Objective::kSoftprob;
  if (name == "logistic") return Objective::kLogistic;
  throw Error("unknown objective '" + name + "'");
}

Objective default_objective(int class_count) {
  return class_count == 2 ? Objective::kLogistic : Objective::kSoftprob;
}

std::string to_string(StopReference reference) {
  return reference == StopReference::kBest ? "best" : "previous";
}

StopReference parse_stop_reference(const std::string& name) {
  if (name == "best") return StopReference::kBest;
  if (name == "previous") return StopReference::kPrevious;
  throw Error("unknown early-stop reference '" + name + "'");
}

void BoostConfig::validate() const {
  if (max_depth < 0) throw Error("max_depth must be non-negative");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (n_rounds < 1) throw Error("n_rounds must be at least 1");
  if (!(l2_reg >= 0.0)) throw Error("l2_reg must be non-negative");
  if (!(min_split_gain >= 0.0)) throw Error("min_split_gain must be non-negative");
  if (!(min_child_weight >= 0.0)) throw Error("min_child_weight must be non-negative");
  if (early_stop_patience < 1) throw Error("early_stop_patience must be at least 1");
  if (warmup_rounds < 0 || warmup_rounds >= n_rounds) {
    throw Error("warmup_rounds must lie in [0, n_rounds)");
  }
  if (!(hessian_floor > 0.0)) throw Error("hessian_floor must be positive");
}

// ---------------------------------------------------------------- trees

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error("tree needs at least one node");
  for (const auto& node : nodes_) {
    if (node.is_leaf()) {
      if (!std::isfinite(node.leaf_value)) throw Error("non-finite leaf value");
    } else if (node.left <= 0 || node.right <= 0 ||
               static_cast<std::size_t>(node.left) >= nodes_.size() ||
               static_cast<std::size_t>(node.right) >= nodes_.size()) {
      throw Error("tree node has an invalid child index");
    }
  }
}

Tree Tree::leaf(double value) {
  TreeNode node;
  node.leaf_value = value;
  return Tree({node});
}

std::size_t Tree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] < node.threshold
                                     ? node.left
                                     : node.right);
  }
  return i;
}

double Tree::predict(std::span<const double> x) const { return nodes_[leaf_index(x)].leaf_value; }

int Tree::depth() const {
  std::vector<int> depth(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    if (node.is_leaf()) continue;
    for (int child : {node.left, node.right}) {
      depth[static_cast<std::size_t>(child)] = depth[i] + 1;
      deepest = std::max(deepest, depth[i] + 1);
    }
  }
  return deepest;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

Ensemble::Ensemble(Objective objective, int class_count, double base_score)
    : objective_(objective), class_count_(class_count), base_score_(base_score) {
  if (class_count < 2) throw Error("ensemble needs at least 2 classes");
  if (objective == Objective::kLogistic && class_count != 2) {
    throw Error("logistic objective requires exactly 2 classes");
  }
}

void Ensemble::add_round(std::vector<Tree> trees) {
  if (static_cast<int>(trees.size()) != outputs()) throw Error("wrong number of trees for round");
  trees_.push_back(std::move(trees));
}

void Ensemble::truncate(std::size_t rounds) {
  if (rounds < trees_.size()) trees_.resize(rounds);
}

Matrix Ensemble::margins(const Matrix& features) const {
  const auto k = static_cast<std::size_t>(outputs());
  Matrix out(features.rows(), k, base_score_);
  for (const auto& round : trees_) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < features.rows(); ++i) out(i, j) += round[j].predict(features.row(i));
    }
  }
  return out;
}

// ---------------------------------------------------------------- objective

std::vector<double> class_logits(std::span<const double> outputs, Objective objective) {
  if (objective == Objective::kLogistic) {
    if (outputs.size() != 1) throw Error("logistic model has a single output");
    return {0.0, outputs[0]};
  }
  return {outputs.begin(), outputs.end()};
}

std::vector<double> probabilities(std::span<const double> outputs, Objective objective) {
  for (double z : outputs) {
    if (!std::isfinite(z)) throw Error("non-finite logit");
  }
  if (objective == Objective::kLogistic) {
    if (outputs.size() != 1) throw Error("logistic model has a single output");
    const double z = outputs[0];
    const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return {1.0 - s, s};
  }
  if (outputs.empty()) throw Error("softmax of empty logits");
  const double zmax = *std::max_element(outputs.begin(), outputs.end());
  std::vector<double> p(outputs.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    p[k] = std::exp(outputs[k] - zmax);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

GradHess grad_hess(std::span<const double> probs, ClassId label, Objective objective,
                   double hessian_floor) {
  GradHess out;
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw Error("label out of range in grad_hess");
  }
  if (objective == Objective::kLogistic) {
    const double p = probs[1];
    out.grad = {p - (label == 1 ? 1.0 : 0.0)};
    out.hess = {std::max(hessian_floor, p * (1.0 - p))};
    return out;
  }
  out.grad.resize(probs.size());
  out.hess.resize(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double p = probs[k];
    out.grad[k] = p - (static_cast<ClassId>(k) == label ? 1.0 : 0.0);
    out.hess[k] = std::max(hessian_floor, 2.0 * p * (1.0 - p));
  }
  return out;
}

double logloss(std::span<const double> logits, ClassId label) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - zmax);
  return zmax + std::log(sum) - logits[static_cast<std::size_t>(label)];
}

double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  double l2_reg) {
  const double g = grad_left + grad_right;
  const double h = hess_left + hess_right;
  return 0.5 * (grad_left * grad_left / (hess_left + l2_reg) +
                grad_right * grad_right / (hess_right + l2_reg) - g * g / (h + l2_reg));
}

double leaf_value(double grad_sum, double hess_sum, double l2_reg, double learning_rate) {
  return -learning_rate * grad_sum / (hess_sum + l2_reg);
}

// ---------------------------------------------------------------- tree learner

TreeBuilder::TreeBuilder(const Matrix& features)
    : n_(features.rows()), d_(features.cols()), columns_(n_ * d_), order_(d_) {
  for (std::size_t f = 0; f < d_; ++f) {
    double* col = columns_.data() + f * n_;
    for (std::size_t i = 0; i < n_; ++i) col[i] = features(i, f);
    auto& ord = order_[f];
    ord.resize(n_);
    std::iota(ord.begin(), ord.end(), std::uint32_t{0});
    std::stable_sort(ord.begin(), ord.end(),
                     [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
}

namespace {

struct SplitCandidate {
  double gain = -std::numeric_limits<double>::infinity();
  int feature = -1;
  double threshold = 0.0;
  double grad_left = 0.0;
  double hess_left = 0.0;
};

struct NodeStats {
  int node = 0;
  double grad = 0.0;
  double hess = 0.0;
};

}  // namespace

Tree TreeBuilder::build(std::span<const double> grad, std::span<const double> hess,
                        std::span<const double> weights, const BoostConfig& config) const {
  if (grad.size() != n_ || hess.size() != n_ || weights.size() != n_) {
    throw Error("gradient/hessian/weight length does not match the feature matrix");
  }
  std::vector<double> g(n_, 0.0);
  std::vector<double> h(n_, 0.0);
  std::vector<int> position(n_, -1);
  NodeStats root;
  bool any = false;
  for (std::size_t i = 0; i < n_; ++i) {
    if (weights[i] < 0.0) throw Error("negative instance weight");
    if (weights[i] > 0.0) {
      g[i] = weights[i] * grad[i];
      h[i] = weights[i] * hess[i];
      position[i] = 0;
      root.grad += g[i];
      root.hess += h[i];
      any = true;
    }
  }
  if (!any) throw Error("all instance weights are zero");

  std::vector<TreeNode> nodes(1);
  std::vector<NodeStats> frontier = {root};
  auto make_leaf = [&](const NodeStats& s) {
    nodes[static_cast<std::size_t>(s.node)].leaf_value =
        leaf_value(s.grad, s.hess, config.l2_reg, config.learning_rate);
  };

  for (int depth = 0; depth < config.max_depth && !frontier.empty(); ++depth) {
    const std::size_t m = frontier.size();
    std::vector<int> slot_of(nodes.size(), -1);
    for (std::size_t s = 0; s < m; ++s) slot_of[static_cast<std::size_t>(frontier[s].node)] = static_cast<int>(s);

    std::vector<SplitCandidate> best(m);
    std::vector<double> gl(m), hl(m), last(m);
    std::vector<char> seen(m);
    for (std::size_t f = 0; f < d_; ++f) {
      std::fill(gl.begin(), gl.end(), 0.0);
      std::fill(hl.begin(), hl.end(), 0.0);
      std::fill(seen.begin(), seen.end(), 0);
      const double* col = columns_.data() + f * n_;
      for (std::uint32_t idx : order_[f]) {
        const int p = position[idx];
        if (p < 0) continue;
        const int slot = slot_of[static_cast<std::size_t>(p)];
        if (slot < 0) continue;
        const auto s = static_cast<std::size_t>(slot);
        const double v = col[idx];
        if (seen[s] && v > last[s]) {
          const double grad_right = frontier[s].grad - gl[s];
          const double hess_right = frontier[s].hess - hl[s];
          if (hl[s] >= config.min_child_weight && hess_right >= config.min_child_weight) {
            const double gain = split_gain(gl[s], hl[s], grad_right, hess_right, config.l2_reg);
            if (gain > best[s].gain) {
              double threshold = last[s] + (v - last[s]) / 2.0;
              if (threshold <= last[s]) threshold = v;
              best[s] = {gain, static_cast<int>(f), threshold, gl[s], hl[s]};
            }
          }
        }
        gl[s] += g[idx];
        hl[s] += h[idx];
        last[s] = v;
        seen[s] = 1;
      }
    }

    std::vector<NodeStats> next;
    std::vector<char> split_here(nodes.size(), 0);
    for (std::size_t s = 0; s < m; ++s) {
      const auto& stats = frontier[s];
      const auto& cand = best[s];
      if (cand.feature < 0 || !(cand.gain > config.min_split_gain)) {
        make_leaf(stats);
        continue;
      }
      const int left = static_cast<int>(nodes.size());
      const int right = left + 1;
      auto& node = nodes[static_cast<std::size_t>(stats.node)];
      node.feature = cand.feature;
      node.threshold = cand.threshold;
      node.left = left;
      node.right = right;
      nodes.emplace_back();
      nodes.emplace_back();
      split_here[static_cast<std::size_t>(stats.node)] = 1;
      next.push_back({left, cand.grad_left, cand.hess_left});
      next.push_back({right, stats.grad - cand.grad_left, stats.hess - cand.hess_left});
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const int p = position[i];
      if (p < 0 || !split_here[static_cast<std::size_t>(p)]) continue;
      const auto& node = nodes[static_cast<std::size_t>(p)];
      position[i] = columns_[static_cast<std::size_t>(node.feature) * n_ + i] < node.threshold
                        ? node.left
                        : node.right;
    }
    frontier = std::move(next);
  }
  for (const auto& stats : frontier) make_leaf(stats);
  return Tree(std::move(nodes));
}

Tree build_tree(const Matrix& features, std::span<const double> grad, std::span<const double> hess,
                std::span<const double> weights, const BoostConfig& config) {
  return TreeBuilder(features).build(grad, hess, weights, config);
}

// ---------------------------------------------------------------- prediction

Predictions predictions_from_margins(const Matrix& margins, Objective objective, int class_count) {
  const auto c = static_cast<std::size_t>(class_count);
  Predictions out;
  out.logits = Matrix(margins.rows(), c);
  out.probabilities = Matrix(margins.rows(), c);
  out.predicted.resize(margins.rows());
  for (std::size_t i = 0; i < margins.rows(); ++i) {
    const auto z = class_logits(margins.row(i), objective);
    const auto p = probabilities(margins.row(i), objective);
    std::copy(z.begin(), z.end(), out.logits.row(i).begin());
    std::copy(p.begin(), p.end(), out.probabilities.row(i).begin());
    out.predicted[i] = static_cast<ClassId>(argmax(p));
  }
  return out;
}

Predictions predict(const Ensemble& ensemble, const Matrix& features) {
  return predictions_from_margins(ensemble.margins(features), ensemble.objective(),
                                  ensemble.class_count());
}

EarlyStopper::EarlyStopper(double min_delta, int patience, StopReference reference)
    : min_delta_(min_delta), patience_(patience), reference_(reference) {
  if (patience < 1) throw Error("patience must be at least 1");
}

bool EarlyStopper::update(double loss) {
  const int index = seen_++;
  const double ref = reference_ == StopReference::kBest ? best_loss_ : previous_;
  previous_ = loss;
  if (best_index_ < 0 || loss < ref - min_delta_) {
    best_index_ = index;
    best_loss_ = loss;
    stale_ = 0;
    return false;
  }
  return ++stale_ >= patience_;
}

// ---------------------------------------------------------------- training

namespace {

void add_tree_outputs(Matrix& margins, std::size_t output, const Tree& tree, const Matrix& features) {
  for (std::size_t i = 0; i < features.rows(); ++i) margins(i, output) += tree.predict(features.row(i));
}

struct LossAcc {
  double sum = 0.0;
  std::size_t correct = 0;
};

LossAcc evaluate(const Predictions& pred, std::span<const ClassId> labels) {
  LossAcc acc;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    acc.sum += logloss(pred.logits.row(i), labels[i]);
    acc.correct += pred.predicted[i] == labels[i] ? 1 : 0;
  }
  return acc;
}

void check_state(const LabelState& state, std::size_t n, int class_count) {
  if (state.labels.size() != n || state.weights.size() != n) {
    throw Error("correction changed the number of instances");
  }
  std::size_t zero = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (state.labels[i] < 0 || state.labels[i] >= class_count) {
      throw Error("correction produced an out-of-range label");
    }
    if (!(state.weights[i] >= 0.0)) throw Error("correction produced a negative weight");
    zero += state.weights[i] == 0.0 ? 1 : 0;
  }
  const auto budget = static_cast<std::size_t>(std::floor(state.removal_budget * static_cast<double>(n) + 1e-9));
  if (zero > budget) {
    throw Error("correction removed " + std::to_string(zero) + " instances; budget is " +
                std::to_string(budget));
  }
}

}  // namespace

TrainResult train(const data::Dataset& train_set, const BoostConfig& config,
                  const TrainOptions& options, std::span<TrainingCallback* const> callbacks) {
  config.validate();
  train_set.validate();
  const std::size_t n = train_set.size();
  const int c = train_set.class_count;
  if (n == 0) throw Error("empty training set");
  for (const auto* other : {options.monitor, options.test}) {
    if (other && other->feature_count() != train_set.feature_count()) {
      throw Error("evaluation set feature width does not match training set");
    }
  }

  TrainResult result;
  result.ensemble = Ensemble(config.objective, c);
  auto& ensemble = result.ensemble;
  const auto k = static_cast<std::size_t>(ensemble.outputs());

  LabelState& state = result.final_state;
  state.labels = train_set.noisy_labels;
  state.weights = options.weights.empty() ? std::vector<double>(n, 1.0) : options.weights;
  state.removal_budget = options.removal_budget;
  check_state(state, n, c);

  result.dynamics = dynamics::DynamicsLog(n, c, options.dynamics_window);
  const TreeBuilder builder(train_set.features);

  Matrix margins(n, k, ensemble.base_score());
  Matrix monitor_margins;
  Matrix test_margins;
  if (options.monitor) monitor_margins = Matrix(options.monitor->size(), k, ensemble.base_score());
  if (options.test) test_margins = Matrix(options.test->size(), k, ensemble.base_score());

  Predictions current = predictions_from_margins(margins, config.objective, c);
  std::vector<std::vector<double>> grad(k, std::vector<double>(n));
  std::vector<std::vector<double>> hess(k, std::vector<double>(n));
  std::vector<double> max_abs(n);
  auto compute_gradients = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      auto gh = grad_hess(current.probabilities.row(i), state.labels[i], config.objective,
                          config.hessian_floor);
      double m = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        grad[j][i] = gh.grad[j];
        hess[j][i] = gh.hess[j];
        m = std::max(m, std::abs(gh.grad[j]));
      }
      max_abs[i] = m;
    }
  };

  EarlyStopper stopper(config.early_stop_min_delta, config.early_stop_patience,
                       config.early_stop_reference);
  const bool stopping = config.early_stopping && options.monitor != nullptr;
  if (options.metrics_log) {
    *options.metrics_log << "round,train_logloss,monitor_logloss,train_accuracy,test_accuracy\n";
  }

  for (int round = 1; round <= config.n_rounds; ++round) {
    compute_gradients();
    dynamics::EpochRecord record{round, current.logits, current.probabilities, current.predicted,
                                 max_abs};
    result.dynamics.record(std::move(record), state.labels);

    const bool after_warmup = round > config.warmup_rounds;
    RoundContext ctx{round, after_warmup, train_set, result.dynamics, state};
    for (auto* cb : callbacks) cb->observe(ctx);
    if (after_warmup && !callbacks.empty()) {
      for (auto* cb : callbacks) cb->correct(ctx, state);
      check_state(state, n, c);
      compute_gradients();
    }

    std::vector<Tree> trees;
    trees.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      trees.push_back(builder.build(grad[j], hess[j], state.weights, config));
      add_tree_outputs(margins, j, trees.back(), train_set.features);
      if (options.monitor) add_tree_outputs(monitor_margins, j, trees.back(), options.monitor->features);
      if (options.test) add_tree_outputs(test_margins, j, trees.back(), options.test->features);
    }
    ensemble.add_round(std::move(trees));
    current = predictions_from_margins(margins, config.objective, c);

    RoundMetrics metrics;
    metrics.round = round;
    const auto train_eval = evaluate(current, train_set.noisy_labels);
    metrics.train_logloss = train_eval.sum / static_cast<double>(n);
    metrics.train_accuracy = static_cast<double>(train_eval.correct) / static_cast<double>(n);
    metrics.removed = static_cast<std::size_t>(
        std::count(state.weights.begin(), state.weights.end(), 0.0));
    if (options.monitor) {
      const auto pred = predictions_from_margins(monitor_margins, config.objective, c);
      const auto ev = evaluate(pred, options.monitor->noisy_labels);
      metrics.monitor_loss =
          config.monitor_mean_loss ? ev.sum / static_cast<double>(options.monitor->size()) : ev.sum;
    }
    if (options.test) {
      const auto pred = predictions_from_margins(test_margins, config.objective, c);
      const auto ev = evaluate(pred, options.test->clean_labels);
      metrics.test_logloss = ev.sum / static_cast<double>(options.test->size());
      metrics.test_accuracy =
          static_cast<double>(ev.correct) / static_cast<double>(options.test->size());
    }
    for (double v : {metrics.train_logloss, metrics.monitor_loss.value_or(0.0),
                     metrics.test_logloss.value_or(0.0)}) {
      if (!std::isfinite(v)) {
        throw Error("non-finite loss at round " + std::to_string(round) +
                    " (train_logloss=" + std::to_string(metrics.train_logloss) + ")");
      }
    }
    if (options.metrics_log) {
      auto& log = *options.metrics_log;
      log << round << ',' << metrics.train_logloss << ',';
      if (metrics.monitor_loss) log << *metrics.monitor_loss;
      log << ',' << metrics.train_accuracy << ',';
      if (metrics.test_accuracy) log << *metrics.test_accuracy;
      log << '\n';
    }
    result.series.push_back(metrics);
    result.rounds_trained = round;
    RoundSummary summary{result.series.back(), train_set, current, state};
    for (auto* cb : callbacks) cb->after_round(summary);

    const bool watched = !config.early_stop_after_warmup || round > config.warmup_rounds;
    if (stopping && watched && stopper.update(*metrics.monitor_loss)) {
      result.stopped_early = true;
      break;
    }
  }

  const int offset = config.early_stop_after_warmup ? config.warmup_rounds : 0;
  result.best_round = stopping && stopper.best_index() >= 0 ? offset + stopper.best_index() + 1
                                                            : result.rounds_trained;
  ensemble.truncate(static_cast<std::size_t>(result.best_round));
  return result;
}

// ---------------------------------------------------------------- serialization

namespace {

nlohmann::json config_to_json(const BoostConfig& c) {
  return {{"max_depth", c.max_depth},
          {"learning_rate", c.learning_rate},
          {"n_rounds", c.n_rounds},
          {"l2_reg", c.l2_reg},
          {"min_split_gain", c.min_split_gain},
          {"min_child_weight", c.min_child_weight},
          {"objective", to_string(c.objective)},
          {"early_stopping", c.early_stopping},
          {"early_stop_min_delta", c.early_stop_min_delta},
          {"early_stop_patience", c.early_stop_patience},
          {"early_stop_reference", to_string(c.early_stop_reference)},
          {"early_stop_after_warmup", c.early_stop_after_warmup},
          {"monitor_mean_loss", c.monitor_mean_loss},
          {"warmup_rounds", c.warmup_rounds},
          {"hessian_floor", c.hessian_floor}};
}

}  // namespace

std::string model_to_json(const Ensemble& ensemble, const BoostConfig& config) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& round : ensemble.trees()) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : round) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& node : tree.nodes()) {
        if (node.is_leaf()) {
          nodes.push_back({{"leaf", node.leaf_value}});
        } else {
          nodes.push_back({{"feature", node.feature},
                           {"threshold", node.threshold},
                           {"left", node.left},
                           {"right", node.right}});
        }
      }
      trees.push_back({{"nodes", std::move(nodes)}});
    }
    rounds.push_back(std::move(trees));
  }
  nlohmann::json doc = {{"format", "noisygbdt-model"},
                        {"version", kModelFormatVersion},
                        {"objective", to_string(ensemble.objective())},
                        {"class_count", ensemble.class_count()},
                        {"base_score", ensemble.base_score()},
                        {"config", config_to_json(config)},
                        {"rounds", std::move(rounds)}};
  return doc.dump(1);
}

Ensemble model_from_json(const std::string& text, BoostConfig* config) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    if (doc.value("format", "") != "noisygbdt-model") throw Error("not a noisygbdt model document");
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw Error("unsupported model version " + doc.at("version").dump());
    }
    Ensemble ensemble(parse_objective(doc.at("objective").get<std::string>()),
                      doc.at("class_count").get<int>(), doc.at("base_score").get<double>());
    for (const auto& round : doc.at("rounds")) {
      std::vector<Tree> trees;
      for (const auto& tree : round) {
        std::vector<TreeNode> nodes;
        for (const auto& jn : tree.at("nodes")) {
          TreeNode node;
          if (jn.contains("leaf")) {
            node.leaf_value = jn.at("leaf").get<double>();
          } else {
            node.feature = jn.at("feature").get<int>();
            node.threshold = jn.at("threshold").get<double>();
            node.left = jn.at("left").get<int>();
            node.right = jn.at("right").get<int>();
          }
          nodes.push_back(node);
        }
        trees.emplace_back(std::move(nodes));
      }
      ensemble.add_round(std::move(trees));
    }
    if (config) {
      const auto& jc = doc.at("config");
      BoostConfig c;
      c.max_depth = jc.at("max_depth").get<int>();
      c.learning_rate = jc.at("learning_rate").get<double>();
      c.n_rounds = jc.at("n_rounds").get<int>();
      c.l2_reg = jc.at("l2_reg").get<double>();
      c.min_split_gain = jc.at("min_split_gain").get<double>();
      c.min_child_weight = jc.at("min_child_weight").get<double>();
      c.objective = parse_objective(jc.at("objective").get<std::string>());
      c.early_stopping = jc.at("early_stopping").get<bool>();
      c.early_stop_min_delta = jc.at("early_stop_min_delta").get<double>();
      c.early_stop_patience = jc.at("early_stop_patience").get<int>();
      c.early_stop_reference = parse_stop_reference(jc.value("early_stop_reference", "previous"));
      c.early_stop_after_warmup = jc.value("early_stop_after_warmup", true);
      c.monitor_mean_loss = jc.at("monitor_mean_loss").get<bool>();
      c.warmup_rounds = jc.at("warmup_rounds").get<int>();
      c.hessian_floor = jc.at("hessian_floor").get<double>();
      *config = c;
    }
    return ensemble;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace noisygbdt::gbdt

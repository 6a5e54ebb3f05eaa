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

#ifndef NOISYGBDT_DYNAMICS_HPP_
#define NOISYGBDT_DYNAMICS_HPP_

#include <deque>
#include <ostream>
#include <span>
#include <vector>

#include "noisygbdt/common.hpp"

namespace noisygbdt::dynamics {

// Model state for every training instance at one boosting round.
// `logits` are per-class (a logistic model stores [0, z]).
struct EpochRecord {
  int round = 0;
  Matrix logits;
  Matrix probabilities;
  std::vector<ClassId> predicted;
  std::vector<double> max_abs_gradient;

  std::size_t size() const { return predicted.size(); }
};

// Sliding window over the most recent records plus running sums over every
// recorded round:
//   sum_p        = sum_t p^t(label)
//   sum_p_sq     = sum_t p^t(label)^2
//   correct      = #{t : p^t(label) == max_k p^t(k)}
// where `label` is the instance's label at the time of recording.
class DynamicsLog {
 public:
  DynamicsLog() = default;
  DynamicsLog(std::size_t instances, int class_count, std::size_t window = 5);

  // Rounds must be consecutive. `labels` are the labels in force for this round.
  void record(EpochRecord record, std::span<const ClassId> labels);

  const std::deque<EpochRecord>& window() const { return window_; }
  const EpochRecord& latest() const;
  std::size_t window_capacity() const { return capacity_; }
  std::size_t instances() const { return instances_; }
  int class_count() const { return class_count_; }
  // Number of recorded rounds (T).
  int rounds() const { return rounds_; }
  int last_round() const { return last_round_; }

  std::span<const double> sum_p() const { return sum_p_; }
  std::span<const double> sum_p_sq() const { return sum_p_sq_; }
  std::span<const double> correct() const { return correct_; }

 private:
  std::size_t instances_ = 0;
  int class_count_ = 0;
  std::size_t capacity_ = 5;
  int rounds_ = 0;
  int last_round_ = 0;
  std::deque<EpochRecord> window_;
  std::vector<double> sum_p_;
  std::vector<double> sum_p_sq_;
  std::vector<double> correct_;
};

// Writes one record as CSV rows (round, instance_id, label, predicted,
// p_label, margin, max_abs_gradient). Header is written when `header` is set.
void write_record_csv(std::ostream& out, const EpochRecord& record,
                      std::span<const ClassId> labels, std::span<const InstanceId> ids,
                      bool header);

}  // namespace noisygbdt::dynamics

#endif  // NOISYGBDT_DYNAMICS_HPP_

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

#include "noisygbdt/dynamics.hpp"

#include <limits>

namespace noisygbdt::dynamics {

DynamicsLog::DynamicsLog(std::size_t instances, int class_count, std::size_t window)
    : instances_(instances),
      class_count_(class_count),
      capacity_(window),
      sum_p_(instances, 0.0),
      sum_p_sq_(instances, 0.0),
      correct_(instances, 0.0) {
  if (window == 0) throw Error("dynamics window must hold at least one round");
}

void DynamicsLog::record(EpochRecord rec, std::span<const ClassId> labels) {
  if (rounds_ > 0 && rec.round != last_round_ + 1) {
    throw Error("out-of-order round " + std::to_string(rec.round) + " after " +
                std::to_string(last_round_));
  }
  if (rec.size() != instances_ || labels.size() != instances_ ||
      rec.probabilities.rows() != instances_ || rec.logits.rows() != instances_ ||
      rec.max_abs_gradient.size() != instances_) {
    throw Error("epoch record size does not match the log");
  }
  for (std::size_t i = 0; i < instances_; ++i) {
    const double p = rec.probabilities(i, static_cast<std::size_t>(labels[i]));
    sum_p_[i] += p;
    sum_p_sq_[i] += p * p;
    // A label tied with the argmax counts as predicted; otherwise the
    // empty-model round would charge every class but the lowest.
    const double top = rec.probabilities(i, static_cast<std::size_t>(rec.predicted[i]));
    correct_[i] += rec.predicted[i] == labels[i] || p == top ? 1.0 : 0.0;
  }
  ++rounds_;
  last_round_ = rec.round;
  window_.push_back(std::move(rec));
  if (window_.size() > capacity_) window_.pop_front();
}

const EpochRecord& DynamicsLog::latest() const {
  if (window_.empty()) throw Error("dynamics log is empty");
  return window_.back();
}

void write_record_csv(std::ostream& out, const EpochRecord& record,
                      std::span<const ClassId> labels, std::span<const InstanceId> ids,
                      bool header) {
  if (header) out << "round,instance_id,label,predicted,p_label,margin,max_abs_gradient\n";
  const std::size_t c = record.logits.cols();
  for (std::size_t i = 0; i < record.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    double other = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) {
      if (k != y && record.logits(i, k) > other) other = record.logits(i, k);
    }
    out << record.round << ',' << ids[i] << ',' << labels[i] << ',' << record.predicted[i] << ','
        << record.probabilities(i, y) << ',' << record.logits(i, y) - other << ','
        << record.max_abs_gradient[i] << '\n';
  }
}

}  // namespace noisygbdt::dynamics

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


// Removal and relabeling of instances flagged as mislabeled.

#ifndef NOISYGBDT_CORRECT_HPP_
#define NOISYGBDT_CORRECT_HPP_

#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "noisygbdt/common.hpp"
#include "noisygbdt/detect.hpp"
#include "noisygbdt/dynamics.hpp"
#include "noisygbdt/gbdt.hpp"

namespace noisygbdt::correct {

enum class Mode { kNone, kRemove, kRelabel };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& name);

struct CorrectionEvent {
  enum class Action { kRemove, kRelabel, kBudgetHit };
  int round = 0;
  Action action = Action::kRemove;
  // Unset for budget-hit events.
  std::optional<InstanceId> instance_id;
  std::optional<ClassId> old_label;
  std::optional<ClassId> new_label;
  bool was_actually_noisy = false;
};

std::string to_string(CorrectionEvent::Action action);

struct CorrectionState {
  Mode mode = Mode::kNone;
  // Cumulative cap on removals as a fraction of the original size.
  double removal_budget = 0.8;
  std::size_t original_size = 0;
  std::vector<ClassId> labels;
  std::vector<double> weights;
  std::vector<std::uint8_t> removed;
  std::vector<std::uint8_t> relabeled;
  std::size_t removed_count = 0;
  std::size_t relabeled_count = 0;
  bool budget_hit = false;
  std::vector<CorrectionEvent> events;

  CorrectionState() = default;
  CorrectionState(Mode mode, std::vector<ClassId> labels, double removal_budget = 0.8);

  // floor(removal_budget * original_size).
  std::size_t removal_capacity() const;
};

// Context attached to events; `clean_labels` may be empty.
struct EventContext {
  int round = 0;
  std::span<const ClassId> clean_labels;
};

// Zeroes the weight of every flagged instance not yet removed. When the
// batch would exceed the cumulative budget, the most extreme scores are
// admitted first (ties by instance id) and a budget-hit event is logged.
void apply_removal(CorrectionState& state, std::span<const detect::NoiseScore> flagged,
                   const EventContext& ctx = {});

// Reassigns each flagged instance not yet relabeled to the argmax of its
// window-averaged probabilities (ties to the lowest class).
void apply_relabel(CorrectionState& state, std::span<const detect::NoiseScore> flagged,
                   const std::deque<dynamics::EpochRecord>& window, const EventContext& ctx = {});

// Runs one detector every round past warm-up and applies the configured
// correction to its flags.
class Corrector : public gbdt::TrainingCallback {
 public:
  Corrector(Mode mode, detect::DetectorConfig detector, std::vector<ClassId> clean_labels = {},
            double removal_budget = 0.8);

  void correct(const gbdt::RoundContext& ctx, gbdt::LabelState& state) override;

  const CorrectionState& state() const { return state_; }
  Mode mode() const { return mode_; }
  const detect::DetectorConfig& detector() const { return detector_; }

 private:
  Mode mode_;
  detect::DetectorConfig detector_;
  std::vector<ClassId> clean_;
  double budget_;
  CorrectionState state_;
  bool initialized_ = false;
};

// round,instance_id,action,old_label,new_label,was_actually_noisy
void write_events_csv(std::ostream& out, std::span<const CorrectionEvent> events);

}  // namespace noisygbdt::correct

#endif  // NOISYGBDT_CORRECT_HPP_

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


#include "noisygbdt/correct.hpp"

#include <algorithm>
#include <cmath>

namespace noisygbdt::correct {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kNone: return "none";
    case Mode::kRemove: return "remove";
    case Mode::kRelabel: return "relabel";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  if (name == "none") return Mode::kNone;
  if (name == "remove" || name == "removal") return Mode::kRemove;
  if (name == "relabel" || name == "relabeling") return Mode::kRelabel;
  throw Error("unknown correction mode '" + name + "'");
}

std::string to_string(CorrectionEvent::Action action) {
  switch (action) {
    case CorrectionEvent::Action::kRemove: return "remove";
    case CorrectionEvent::Action::kRelabel: return "relabel";
    case CorrectionEvent::Action::kBudgetHit: return "budget_hit";
  }
  return "?";
}

CorrectionState::CorrectionState(Mode m, std::vector<ClassId> initial, double budget)
    : mode(m),
      removal_budget(budget),
      original_size(initial.size()),
      labels(std::move(initial)),
      weights(original_size, 1.0),
      removed(original_size, 0),
      relabeled(original_size, 0) {
  if (!(budget >= 0.0 && budget <= 1.0)) throw Error("removal budget must lie in [0, 1]");
}

std::size_t CorrectionState::removal_capacity() const {
  return static_cast<std::size_t>(std::floor(removal_budget * static_cast<double>(original_size)));
}

namespace {

bool actually_noisy(const EventContext& ctx, std::size_t i, ClassId label) {
  return !ctx.clean_labels.empty() && ctx.clean_labels[i] != label;
}

}  // namespace

void apply_removal(CorrectionState& state, std::span<const detect::NoiseScore> flagged,
                   const EventContext& ctx) {
  std::vector<const detect::NoiseScore*> fresh;
  std::vector<std::uint8_t> seen(state.original_size, 0);
  for (const auto& s : flagged) {
    if (s.index >= state.original_size) throw Error("flagged index out of range");
    if (state.removed[s.index] || seen[s.index]) continue;
    seen[s.index] = 1;
    fresh.push_back(&s);
  }

  const std::size_t room = state.removal_capacity() - std::min(state.removal_capacity(), state.removed_count);
  if (fresh.size() > room) {
    std::sort(fresh.begin(), fresh.end(), [](const detect::NoiseScore* a, const detect::NoiseScore* b) {
      if (a->score != b->score) {
        return a->polarity == detect::Polarity::kLowIsNoisy ? a->score < b->score
                                                            : a->score > b->score;
      }
      return a->instance_id < b->instance_id;
    });
    fresh.resize(room);
    state.budget_hit = true;
    CorrectionEvent ev;
    ev.round = ctx.round;
    ev.action = CorrectionEvent::Action::kBudgetHit;
    state.events.push_back(ev);
  }
  for (const auto* s : fresh) {
    state.removed[s->index] = 1;
    state.weights[s->index] = 0.0;
    ++state.removed_count;
    CorrectionEvent ev;
    ev.round = ctx.round;
    ev.action = CorrectionEvent::Action::kRemove;
    ev.instance_id = s->instance_id;
    ev.old_label = state.labels[s->index];
    ev.was_actually_noisy = actually_noisy(ctx, s->index, state.labels[s->index]);
    state.events.push_back(ev);
  }
}

void apply_relabel(CorrectionState& state, std::span<const detect::NoiseScore> flagged,
                   const std::deque<dynamics::EpochRecord>& window, const EventContext& ctx) {
  if (window.empty()) throw Error("relabeling needs a non-empty probability window");
  const std::size_t c = window.front().probabilities.cols();
  std::vector<double> mean(c);
  for (const auto& s : flagged) {
    const std::size_t i = s.index;
    if (i >= state.original_size) throw Error("flagged index out of range");
    if (state.relabeled[i]) continue;
    std::fill(mean.begin(), mean.end(), 0.0);
    for (const auto& rec : window) {
      const auto row = rec.probabilities.row(i);
      for (std::size_t k = 0; k < c; ++k) mean[k] += row[k];
    }
    const auto next = static_cast<ClassId>(argmax(mean));
    CorrectionEvent ev;
    ev.round = ctx.round;
    ev.action = CorrectionEvent::Action::kRelabel;
    ev.instance_id = s.instance_id;
    ev.old_label = state.labels[i];
    ev.new_label = next;
    ev.was_actually_noisy = actually_noisy(ctx, i, state.labels[i]);
    state.events.push_back(ev);
    state.labels[i] = next;
    state.relabeled[i] = 1;
    ++state.relabeled_count;
  }
}

Corrector::Corrector(Mode mode, detect::DetectorConfig detector, std::vector<ClassId> clean_labels,
                     double removal_budget)
    : mode_(mode), detector_(detector), clean_(std::move(clean_labels)), budget_(removal_budget) {}

void Corrector::correct(const gbdt::RoundContext& ctx, gbdt::LabelState& state) {
  if (mode_ == Mode::kNone) return;
  if (!initialized_) {
    state_ = CorrectionState(mode_, state.labels, budget_);
    state_.weights = state.weights;
    for (std::size_t i = 0; i < state_.weights.size(); ++i) {
      if (state_.weights[i] == 0.0) {
        state_.removed[i] = 1;
        ++state_.removed_count;
      }
    }
    initialized_ = true;
  }
  state_.labels = state.labels;
  state_.weights = state.weights;

  const auto detection =
      detect::run_detector(detector_, ctx.log, state.labels, ctx.train.instance_ids, state.weights);
  std::vector<detect::NoiseScore> flagged;
  for (const auto& s : detection.scores) {
    if (s.flagged_noisy) flagged.push_back(s);
  }
  const EventContext ectx{ctx.round, clean_};
  if (mode_ == Mode::kRemove) {
    apply_removal(state_, flagged, ectx);
  } else {
    apply_relabel(state_, flagged, ctx.log.window(), ectx);
  }
  state.labels = state_.labels;
  state.weights = state_.weights;
}

void write_events_csv(std::ostream& out, std::span<const CorrectionEvent> events) {
  out << "round,instance_id,action,old_label,new_label,was_actually_noisy\n";
  for (const auto& e : events) {
    out << e.round << ',';
    if (e.instance_id) out << *e.instance_id;
    out << ',' << to_string(e.action) << ',';
    if (e.old_label) out << *e.old_label;
    out << ',';
    if (e.new_label) out << *e.new_label;
    out << ',';
    if (e.action != CorrectionEvent::Action::kBudgetHit) out << (e.was_actually_noisy ? 1 : 0);
    out << '\n';
  }
}

}  // namespace noisygbdt::correct

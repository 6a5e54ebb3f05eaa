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

#include "noisygbdt/noise.hpp"

#include <cmath>

namespace noisygbdt::noise {
namespace {

void check_args(int class_count, double rate) {
  if (class_count < 2) throw Error("transition matrix needs at least 2 classes");
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error("noise rate must lie in [0, 1]");
}

}  // namespace

std::string to_string(NoiseKind kind) {
  return kind == NoiseKind::kSymmetric ? "symmetric" : "pair";
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "symmetric") return NoiseKind::kSymmetric;
  if (name == "pair") return NoiseKind::kPair;
  throw Error("unknown noise kind '" + name + "'");
}

TransitionMatrix::TransitionMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
    throw Error("transition matrix must be square");
  }
  for (std::size_t i = 0; i < entries_.rows(); ++i) {
    double sum = 0.0;
    for (double p : entries_.row(i)) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error("transition entry outside [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw Error("transition row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

void TransitionMatrix::write_csv(std::ostream& out) const {
  out << "from";
  for (std::size_t j = 0; j < entries_.cols(); ++j) out << ",to_" << j;
  out << '\n';
  const auto saved = out.precision(15);
  for (std::size_t i = 0; i < entries_.rows(); ++i) {
    out << i;
    for (double p : entries_.row(i)) out << ',' << p;
    out << '\n';
  }
  out.precision(saved);
}

TransitionMatrix symmetric_matrix(int class_count, double rate) {
  check_args(class_count, rate);
  const auto c = static_cast<std::size_t>(class_count);
  Matrix s(c, c, rate / static_cast<double>(c - 1));
  for (std::size_t i = 0; i < c; ++i) s(i, i) = 1.0 - rate;
  return TransitionMatrix(std::move(s));
}

TransitionMatrix pair_matrix(int class_count, double rate) {
  check_args(class_count, rate);
  const auto c = static_cast<std::size_t>(class_count);
  Matrix s(c, c, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    s(i, i) = 1.0 - rate;
    s(i, (i + 1) % c) = rate;
  }
  return TransitionMatrix(std::move(s));
}

TransitionMatrix make_matrix(NoiseKind kind, int class_count, double rate) {
  return kind == NoiseKind::kSymmetric ? symmetric_matrix(class_count, rate)
                                       : pair_matrix(class_count, rate);
}

Injection inject(std::span<const ClassId> labels, const TransitionMatrix& matrix,
                 std::uint64_t seed) {
  const int c = matrix.class_count();
  Rng rng(seed);
  Injection out;
  out.noisy_labels.reserve(labels.size());
  out.noise_mask.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const ClassId y = labels[i];
    if (y < 0 || y >= c) {
      throw Error("label " + std::to_string(y) + " out of range at position " + std::to_string(i));
    }
    // One categorical draw per instance, always consumed so positions stay aligned.
    const double u = rng.uniform();
    ClassId drawn = y;
    double cumulative = 0.0;
    for (int j = 0; j < c; ++j) {
      cumulative += matrix(y, j);
      if (u < cumulative) {
        drawn = j;
        break;
      }
    }
    // u can exceed the rounded cumulative sum by an ulp; fall back to the last
    // class with positive mass.
    if (u >= cumulative) {
      for (int j = c - 1; j >= 0; --j) {
        if (matrix(y, j) > 0.0) {
          drawn = j;
          break;
        }
      }
    }
    out.noisy_labels.push_back(drawn);
    out.noise_mask.push_back(drawn != y ? 1 : 0);
  }
  return out;
}

double empirical_rate(std::span<const std::uint8_t> noise_mask) {
  if (noise_mask.empty()) throw Error("empirical_rate of an empty mask");
  std::size_t flipped = 0;
  for (auto m : noise_mask) flipped += m ? 1 : 0;
  return static_cast<double>(flipped) / static_cast<double>(noise_mask.size());
}

}  // namespace noisygbdt::noise

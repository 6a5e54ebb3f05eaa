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

#ifndef NOISYGBDT_NOISE_HPP_
#define NOISYGBDT_NOISE_HPP_

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "noisygbdt/common.hpp"

namespace noisygbdt::noise {

enum class NoiseKind { kSymmetric, kPair };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kSymmetric;
  double rate = 0.0;
  std::uint64_t seed = 0;
};

// Row-stochastic label transition matrix: entry (i, j) = p(noisy = j | clean = i).
class TransitionMatrix {
 public:
  explicit TransitionMatrix(Matrix entries);

  int class_count() const { return static_cast<int>(entries_.rows()); }
  double operator()(int from, int to) const {
    return entries_(static_cast<std::size_t>(from), static_cast<std::size_t>(to));
  }
  const Matrix& entries() const { return entries_; }

  // Writes the matrix as CSV with a "from" column and one column per target class.
  void write_csv(std::ostream& out) const;

 private:
  Matrix entries_;
};

// Uniform flips: diagonal 1 - rate, off-diagonal rate / (c - 1).
TransitionMatrix symmetric_matrix(int class_count, double rate);
// Flips to the cyclic successor class only: (i, i+1 mod c) = rate.
TransitionMatrix pair_matrix(int class_count, double rate);
TransitionMatrix make_matrix(NoiseKind kind, int class_count, double rate);

struct Injection {
  std::vector<ClassId> noisy_labels;
  std::vector<std::uint8_t> noise_mask;
};

// Resamples every label independently from its row of `matrix`.
Injection inject(std::span<const ClassId> labels, const TransitionMatrix& matrix,
                 std::uint64_t seed);

// Fraction of true entries; throws on an empty mask.
double empirical_rate(std::span<const std::uint8_t> noise_mask);

}  // namespace noisygbdt::noise

#endif  // NOISYGBDT_NOISE_HPP_

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


// Small synthetic datasets shared by the unit, property and acceptance tests.

#ifndef NOISYGBDT_TESTS_FIXTURES_HPP_
#define NOISYGBDT_TESTS_FIXTURES_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "noisygbdt/common.hpp"
#include "noisygbdt/data.hpp"

namespace noisygbdt::testing {

inline data::Dataset make_dataset(Matrix features, std::vector<ClassId> labels, int class_count) {
  data::Dataset d;
  const std::size_t n = labels.size();
  d.features = std::move(features);
  d.class_count = class_count;
  d.clean_labels = labels;
  d.noisy_labels = labels;
  d.noise_mask.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) d.instance_ids.push_back(static_cast<InstanceId>(i));
  for (std::size_t j = 0; j < d.features.cols(); ++j) d.feature_names.push_back("f" + std::to_string(j));
  for (int k = 0; k < class_count; ++k) d.class_names.push_back("c" + std::to_string(k));
  return d;
}

// Balanced two-class set separated along feature 0; feature 1 is noise.
inline data::Dataset separable_toy(std::size_t n = 100, std::uint64_t seed = 1) {
  Rng rng(seed);
  Matrix x(n, 2);
  std::vector<ClassId> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<ClassId>(i % 2);
    x(i, 0) = (y[i] == 0 ? -2.0 : 1.0) + rng.uniform();
    x(i, 1) = rng.uniform();
  }
  return make_dataset(std::move(x), std::move(y), 2);
}

// Gaussian-ish blobs (sum of uniforms) around class centres on a circle;
// `spread` controls overlap.
inline data::Dataset blobs(std::size_t n, int class_count, double spread, std::uint64_t seed,
                           std::size_t features = 4) {
  Rng rng(seed);
  Matrix x(n, features);
  std::vector<ClassId> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<ClassId>(i % static_cast<std::size_t>(class_count));
    y[i] = k;
    const double angle = 2.0 * 3.141592653589793 * k / class_count;
    for (std::size_t j = 0; j < features; ++j) {
      double z = 0.0;
      for (int r = 0; r < 4; ++r) z += rng.uniform() - 0.5;
      const double centre = j == 0 ? std::cos(angle) : j == 1 ? std::sin(angle) : 0.0;
      x(i, j) = 2.0 * centre + spread * z;
    }
  }
  return make_dataset(std::move(x), std::move(y), class_count);
}

}  // namespace noisygbdt::testing

#endif  // NOISYGBDT_TESTS_FIXTURES_HPP_

/*
 * Copyright 2026 The fedbm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fedbm/numeric.hpp"

namespace fedbm {

/// Seeded random stream. All stochastic operations in the library draw from
/// an explicit Rng so that identical seeds give bit-identical results; the
/// mapping from engine output to doubles is fixed here instead of relying on
/// std:: distributions, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  void seed(std::uint64_t s) {
    engine_.seed(s);
    has_spare_normal_ = false;
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) {
    require(p >= 0.0 && p <= 1.0, "bernoulli probability outside [0,1]");
    return uniform() < p;
  }

  /// Normal draw via Box-Muller (pairs are cached across calls).
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (has_spare_normal_) {
      has_spare_normal_ = false;
      return mean + stddev * spare_normal_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
      u1 = uniform();
    }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_normal_ = r * std::sin(theta);
    has_spare_normal_ = true;
    return mean + stddev * r * std::cos(theta);
  }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    require(n > 0, "index bound must be positive");
    const std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  /// Elementwise Bernoulli sample of a probability matrix. Entries are
  /// consumed in row-major order; every sampler in the library goes through
  /// here so the stream layout is part of the reproducibility contract.
  Matrix sample_bernoulli(const Matrix& probs) {
    Matrix out(probs.rows(), probs.cols());
    for (Index i = 0; i < probs.rows(); ++i) {
      for (Index j = 0; j < probs.cols(); ++j) {
        out(i, j) = bernoulli(probs(i, j)) ? 1.0 : 0.0;
      }
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace fedbm

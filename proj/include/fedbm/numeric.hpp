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

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedbm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Numerically stable logistic function.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + e^x) without overflow for large |x|.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline Matrix sigmoid(Matrix m) {
  return m.unaryExpr([](double x) { return sigmoid(x); });
}

/// x*log(x) with the 0*log(0) = 0 convention.
inline double xlogx(double x) {
  return x > 0.0 ? x * std::log(x) : 0.0;
}

/// Entropy of a Bernoulli(p) variable in nats.
inline double bernoulli_entropy(double p) {
  return -xlogx(p) - xlogx(1.0 - p);
}

/// log(sum_i e^{x_i}) shifted by the maximum for stability.
inline double log_sum_exp(const Vector& x) {
  if (x.size() == 0) {
    return -std::numeric_limits<double>::infinity();
  }
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) {
    return m;
  }
  return m + std::log((x.array() - m).exp().sum());
}

/// Running log-sum-exp accumulator for enumeration loops.
class LogSumExpAccumulator {
 public:
  void add(double logterm) {
    if (logterm == -std::numeric_limits<double>::infinity()) {
      return;
    }
    if (logterm <= shift_) {
      sum_ += std::exp(logterm - shift_);
      return;
    }
    // New maximum: rescale the accumulated sum.
    if (sum_ > 0.0) {
      sum_ *= std::exp(shift_ - logterm);
    }
    sum_ += 1.0;
    shift_ = logterm;
  }

  double value() const {
    if (sum_ == 0.0) {
      return -std::numeric_limits<double>::infinity();
    }
    return shift_ + std::log(sum_);
  }

 private:
  double shift_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

inline void require(bool condition, const char* what) {
  if (!condition) {
    throw std::invalid_argument(what);
  }
}

}  // namespace fedbm

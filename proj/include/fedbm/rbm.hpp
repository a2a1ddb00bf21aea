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

#include <utility>

#include "fedbm/numeric.hpp"

namespace fedbm {

/// Restricted Boltzmann machine over binary units with the joint
/// p(v,h) = e^{-E(v,h)} / Z and energy
///
///   E(v,h) = -a'v - b'h - v'Wh
///
/// where W is n_visible x n_hidden, a the visible and b the hidden bias.
struct Rbm {
  Matrix weights;
  Vector visbias;
  Vector hidbias;

  Rbm() = default;

  Rbm(Matrix w, Vector a, Vector b)
      : weights(std::move(w)), visbias(std::move(a)), hidbias(std::move(b)) {
    validate();
  }

  static Rbm zeros(Index n_visible, Index n_hidden) {
    return Rbm(Matrix::Zero(n_visible, n_hidden), Vector::Zero(n_visible),
               Vector::Zero(n_hidden));
  }

  Index n_visible() const { return weights.rows(); }
  Index n_hidden() const { return weights.cols(); }

  void validate() const {
    require(weights.rows() >= 1 && weights.cols() >= 1,
            "RBM needs at least one visible and one hidden unit");
    require(visbias.size() == weights.rows(),
            "visible bias length does not match weight rows");
    require(hidbias.size() == weights.cols(),
            "hidden bias length does not match weight columns");
    require(weights.allFinite() && visbias.allFinite() && hidbias.allFinite(),
            "RBM parameters must be finite");
  }
};

inline double energy(const Rbm& m, const Vector& v, const Vector& h) {
  require(v.size() == m.n_visible(), "visible vector length mismatch");
  require(h.size() == m.n_hidden(), "hidden vector length mismatch");
  return -m.visbias.dot(v) - m.hidbias.dot(h) - v.dot(m.weights * h);
}

/// Pre-sigmoid input of the hidden layer for a batch of visible rows,
/// scaled by `factor` (used for the doubled-input DBM pretraining).
template <typename Derived>
Matrix hidden_potential(const Rbm& m, const Eigen::MatrixBase<Derived>& v,
                        double factor = 1.0) {
  require(v.cols() == m.n_visible(), "visible batch width mismatch");
  return factor * ((v * m.weights).rowwise() + m.hidbias.transpose());
}

template <typename Derived>
Matrix hidden_probability(const Rbm& m, const Eigen::MatrixBase<Derived>& v,
                          double factor = 1.0) {
  return sigmoid(hidden_potential(m, v, factor));
}

template <typename Derived>
Matrix visible_potential(const Rbm& m, const Eigen::MatrixBase<Derived>& h,
                         double factor = 1.0) {
  require(h.cols() == m.n_hidden(), "hidden batch width mismatch");
  return factor * ((h * m.weights.transpose()).rowwise() + m.visbias.transpose());
}

template <typename Derived>
Matrix visible_probability(const Rbm& m, const Eigen::MatrixBase<Derived>& h,
                           double factor = 1.0) {
  return sigmoid(visible_potential(m, h, factor));
}

inline Vector hidden_probability(const Rbm& m, const Vector& v) {
  const Matrix row = hidden_probability(m, v.transpose());
  return row.row(0).transpose();
}

inline Vector visible_probability(const Rbm& m, const Vector& h) {
  const Matrix row = visible_probability(m, h.transpose());
  return row.row(0).transpose();
}

/// log sum_h e^{-E(v,h)} for one visible row: the hidden units marginalize
/// analytically to a'v + sum_j softplus((v'W)_j + b_j).
inline double log_unnormalized_pv(const Rbm& m, const Vector& v) {
  require(v.size() == m.n_visible(), "visible vector length mismatch");
  double s = m.visbias.dot(v);
  const Vector pot = m.weights.transpose() * v + m.hidbias;
  for (Index j = 0; j < pot.size(); ++j) {
    s += softplus(pot(j));
  }
  return s;
}

/// One-step v -> p(h|v) -> p(v|h) reconstruction error: mean absolute
/// difference per variable, averaged over rows. Uses probabilities, never
/// samples, so the value is deterministic.
inline double reconstruction_error_matrix(const Rbm& m, const Matrix& v) {
  require(v.rows() >= 1, "reconstruction error needs at least one row");
  const Matrix recon = visible_probability(m, hidden_probability(m, v));
  return (v - recon).cwiseAbs().mean();
}

}  // namespace fedbm

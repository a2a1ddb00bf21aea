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

#include <algorithm>

#include <Eigen/Eigenvalues>

#include "fedbm/dataset.hpp"
#include "fedbm/dbm.hpp"
#include "fedbm/numeric.hpp"

namespace fedbm {

/// Two-dimensional representation of the latent features: mean-field
/// top-layer activations per row, centered and projected onto the two
/// directions of maximal variance. The deterministic sign convention makes
/// repeated runs identical.
inline Matrix top2latentdims(const Dbm& m, const BinaryDataset& data) {
  require(data.cols() == m.n_visible(), "dataset width mismatch");
  require(data.rows() >= 2, "top2latentdims needs at least 2 rows");
  const Matrix top = meanfield(m, data.values).back();
  const Matrix centered = top.rowwise() - top.colwise().mean();
  const Matrix cov = centered.transpose() * centered /
                     static_cast<double>(top.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  require(solver.info() == Eigen::Success, "eigendecomposition failed");
  const Index d = cov.rows();
  Matrix proj = Matrix::Zero(d, 2);
  for (Index k = 0; k < std::min<Index>(2, d); ++k) {
    Vector dir = solver.eigenvectors().col(d - 1 - k);  // descending variance
    Index imax = 0;
    dir.cwiseAbs().maxCoeff(&imax);
    if (dir(imax) < 0.0) {
      dir = -dir;
    }
    proj.col(k) = dir;
  }
  return centered * proj;
}

}  // namespace fedbm

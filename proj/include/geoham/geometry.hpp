// Copyright 2026 The geoham Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

namespace geoham {

using Matrix = Eigen::MatrixXd;

// Cartesian positions in Angstrom, one row per atom.
using Coordinates = Eigen::Matrix<double, Eigen::Dynamic, 3>;

inline constexpr double kHartreeToEv = 27.2114;
inline constexpr double kBohrPerAngstrom = 1.0 / 0.529177210903;

inline Eigen::MatrixXd pairwise_distances(const Coordinates& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
    }
  }
  return d;
}

}  // namespace geoham

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

// Helpers shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "geoham/nn.hpp"

namespace geoham::testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  return m;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

using LossFn = std::function<diff::Var(Context&)>;

// Central-difference check of d loss / d parameter over every parameter in
// `ps` (at most `per_param` coordinates each). Returns the max relative error
// |analytic - numeric| / max(1, |numeric|).
inline double parameter_grad_check(ParameterSet& ps, const LossFn& loss, double eps = 1e-5,
                                   Eigen::Index per_param = 6, std::uint64_t seed = 7) {
  ps.zero_grad();
  {
    Context ctx;
    const diff::Var l = loss(ctx);
    ctx.backward(l);
  }
  auto eval = [&] {
    Context ctx(false);
    return loss(ctx).scalar();
  };
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (Parameter& p : ps.all()) {
    const Eigen::Index n = p.value.size();
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    for (Eigen::Index s = 0; s < std::min(n, per_param); ++s) {
      const Eigen::Index k = n <= per_param ? s : pick(rng);
      const double keep = p.value(k);
      p.value(k) = keep + eps;
      const double up = eval();
      p.value(k) = keep - eps;
      const double down = eval();
      p.value(k) = keep;
      const double numeric = (up - down) / (2.0 * eps);
      worst = std::max(worst, std::abs(p.grad(k) - numeric) / std::max(1.0, std::abs(numeric)));
    }
  }
  return worst;
}

}  // namespace geoham::testing

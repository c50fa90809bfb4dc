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

// Cross-modal disentangling of geometric embeddings and the learned affine map
// that pushes token embeddings toward geometry.

#include <random>
#include <string>
#include <vector>

#include "geoham/nn.hpp"

namespace geoham {

// Two-layer tanh maps U, T, V+ and V-, all d -> d.
struct Disentangler {
  Mlp u;
  Mlp t;
  Mlp v_plus;
  Mlp v_minus;

  static Disentangler create(ParameterSet& ps, int width, std::mt19937_64& rng,
                             const std::string& prefix = "dis");
};

// Row-softmax of cosines between U(v_i) and T(t_j). Throws ZeroNormRow.
Var attention_matrix(Context& ctx, const Disentangler& p, const Var& v, const Var& t);

struct Disentangled {
  Var beta;
  Var plus;   // beta V+(v)
  Var minus;  // (I - beta) V-(v)
};
Disentangled disentangle(Context& ctx, const Disentangler& p, const Var& v, const Var& t);

// Per-molecule affine parameters. Rows are 1 x d unless noted.
template <class M>
struct AffineParamsT {
  M angles;  // 1 x (d-1), planes (i, i+1)
  M scales;
  M p;  // K x d shear directions
  M w;  // K x d
  M b;
  M a;
  M omega;
  M phi;
};
using AffineParams = AffineParamsT<Matrix>;
using AffineVars = AffineParamsT<Var>;

AffineParams neutral_affine(int width, int shears);

// Product of adjacent-plane Givens rotations (1,2)(2,3)...(d-1,d).
Matrix build_rotation(const Matrix& angles);
// R diag(s) (I + sum_k p_k w_k^T).
Matrix build_affine(const AffineParams& p);
// Row i: A t_i + b + a * sin(omega * t_i + phi).
Matrix compensate(const Matrix& t, const AffineParams& p);

// Differentiable counterparts.
Var givens_rotation(const Var& angles);
Var affine_matrix(const AffineVars& p);
Var compensate(const Var& t, const AffineVars& p);

struct GeneratorConfig {
  int width = 32;
  int shears = 4;
};

// Maps mean_rows(v-) to one AffineVars per molecule.
class ParamGenerator {
 public:
  static ParamGenerator create(ParameterSet& ps, const GeneratorConfig& cfg,
                               std::mt19937_64& rng, const std::string& prefix = "gen");
  AffineVars operator()(Context& ctx, const Var& v_minus) const;
  const GeneratorConfig& config() const { return cfg_; }

 private:
  GeneratorConfig cfg_;
  Linear hidden_;
  Linear angles_, scales_, b_, a_, omega_, phi_;
  std::vector<Linear> p_, w_;
};

// Mean smooth-L1 D(v, t*) + lambda1 * D(t, v+).
Var discrepancy_loss(const Var& v, const Var& t_star, const Var& t, const Var& v_plus,
                     double lambda1);

}  // namespace geoham

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

// Fragment-level alignment of geometric and compensated token embeddings with
// a pairwise sigmoid contrastive objective.

#include <random>
#include <span>
#include <string>
#include <vector>

#include "geoham/nn.hpp"

namespace geoham {

using AtomGroups = std::vector<std::vector<std::size_t>>;

struct Aligner {
  Parameter* wq = nullptr;
  Parameter* wk = nullptr;
  Parameter* wv = nullptr;
  Parameter* log_tau = nullptr;  // tau = exp(log_tau)

  static Aligner create(ParameterSet& ps, int width, std::mt19937_64& rng,
                        const std::string& prefix = "align");
};

inline constexpr double kInitialTemperature = 0.5;

// One matrix per fragment holding its member rows in the listed order.
std::vector<Var> segment_embeddings(const Var& emb, const AtomGroups& fragments);

// mean_rows(softmax((t Wq)(v Wk)^T / sqrt(d)) v Wv): one 1 x d vector.
Var contextual_pool(Context& ctx, const Aligner& p, const Var& t_frag, const Var& v_frag);

enum class ContrastiveForm { LogSigmoid, Literal };

// Rows of `v` and `t` are paired fragment vectors; row i of each is the
// positive pair, every other (i, j) combination a negative. Throws EmptyBatch.
Var contrastive_loss(const Var& v, const Var& t, const Var& tau,
                     ContrastiveForm form = ContrastiveForm::LogSigmoid);

// Everything the pretraining objective needs from one molecule.
struct AlignmentSample {
  Var v;        // geometric embeddings
  Var t;        // token embeddings
  Var t_star;   // compensated token embeddings
  Var v_plus;   // token-relevant geometric part
  AtomGroups fragments;
};

struct PretrainTerms {
  Var discrepancy;  // mean over molecules
  Var contrastive;
  Var total;
};

// Mean discrepancy over molecules plus one contrastive term over all
// fragments of the batch. With `compensated` false the discrepancy term is
// dropped and t_star is expected to be t.
PretrainTerms pretrain_terms(Context& ctx, const Aligner& p, std::span<const AlignmentSample> batch,
                             double lambda1, ContrastiveForm form = ContrastiveForm::LogSigmoid,
                             bool compensated = true);

Var pretrain_loss(Context& ctx, const Aligner& p, std::span<const AlignmentSample> batch,
                  double lambda1, ContrastiveForm form = ContrastiveForm::LogSigmoid);

}  // namespace geoham

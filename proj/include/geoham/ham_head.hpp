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

// Hamiltonian head: per-atom embeddings to a symmetric matrix over the toy
// orbital basis.
//
// Entry (mu on atom i, nu on atom j) = sum_k Q_mu(t_i)_k C(i, j)_k Q_nu(t_j)_k,
// where Q are per-slot tanh projections and C comes from a per-atom MLP on
// diagonal blocks and from an MLP of (t_i + t_j, (t_i - t_j)^2) on
// off-diagonal blocks. Only upper-triangle entries are computed; the lower
// triangle is a copy.

#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "geoham/basis.hpp"
#include "geoham/nn.hpp"

namespace geoham {

struct HamHeadConfig {
  int width = 32;
  int rank = 16;
  int hidden = 32;
};

class HamHead {
 public:
  static HamHead create(ParameterSet& ps, const HamHeadConfig& cfg, std::mt19937_64& rng,
                        const std::string& prefix = "head");

  // Throws ShapeMismatch unless emb has one row per layout atom.
  Var operator()(Context& ctx, const Var& emb, const BlockLayout& layout) const;
  const HamHeadConfig& config() const { return cfg_; }

 private:
  HamHeadConfig cfg_;
  std::vector<Linear> q_;  // per orbital slot
  Linear diag_hidden_;
  std::vector<Linear> diag_out_;  // per unordered slot pair
  Parameter* pair_sum_ = nullptr;
  Parameter* pair_diff_ = nullptr;
  Parameter* pair_bias_ = nullptr;
  std::vector<Linear> pair_out_;
};

// Scatters upper-triangle entries (rows[k] <= cols[k]) into an n x n matrix,
// mirroring them below the diagonal.
Var sym_from_upper(const Var& values, Eigen::Index n, std::vector<std::size_t> rows,
                   std::vector<std::size_t> cols);

// Frozen token embeddings plus geometric embeddings.
Var fuse_modalities(const Var& t, const Var& v);

// lambda2 mean(|H*-H| + (H*-H)^2) + (1-lambda2) mean(|H*-H~| + (H*-H~)^2)
Var finetune_loss(const Var& target, const Var& full, const Var& masked, double lambda2);

// u64 dimension then the upper triangle row by row, all little-endian.
std::string encode_upper(const Matrix& h);
Matrix decode_upper(std::string_view bytes);  // throws CorruptFile

// Writes `path` (matrix bytes) and `path` + ".json" (layout).
void write_hamiltonian(const std::filesystem::path& path, const Matrix& h,
                       const BlockLayout& layout);
std::pair<Matrix, BlockLayout> read_hamiltonian(const std::filesystem::path& path);

}  // namespace geoham

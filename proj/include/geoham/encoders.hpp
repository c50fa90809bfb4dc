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

// Token-sequence and geometry encoders. Both produce one d-wide row per
// expanded atom (heavy atoms first, then implicit hydrogens in parent order).

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "geoham/geometry.hpp"
#include "geoham/nn.hpp"
#include "geoham/smiles.hpp"

namespace geoham {

// Vocabulary: mask, plain/aromatic/bracket atoms per element, bond symbols,
// ring closure and branches.
inline constexpr std::size_t kVocabSize = 54;
std::size_t vocab_id(const Token& token);  // throws UnknownTokenKind

// Which token rows pool into each expanded atom. Implicit hydrogens pool
// their parent's tokens and are flagged.
struct AtomTokenMap {
  std::vector<std::vector<std::size_t>> tokens;
  std::vector<std::uint8_t> implicit_h;
  std::size_t token_count = 0;

  std::size_t size() const { return tokens.size(); }
};
AtomTokenMap atom_token_map(const MolGraph& mol, const ExpandedMolecule& expanded);

struct TokenEncoderConfig {
  int width = 32;
  int layers = 2;
};

// Fixed sinusoidal position table, scaled down to sit below the embeddings.
Matrix positional_encoding(std::size_t length, int width);

class TokenEncoder {
 public:
  static TokenEncoder create(ParameterSet& ps, const TokenEncoderConfig& cfg,
                             std::mt19937_64& rng, const std::string& prefix = "tok");

  // `tokens` may be masked; the map comes from the unmasked parse.
  Var encode(Context& ctx, std::span<const Token> tokens, const AtomTokenMap& map) const;
  const TokenEncoderConfig& config() const { return cfg_; }

 private:
  struct Block {
    Parameter* wq;
    Parameter* wk;
    Parameter* wv;
    Parameter* wo;
    Mlp ff;
  };
  TokenEncoderConfig cfg_;
  Parameter* table_ = nullptr;
  Parameter* bracket_ = nullptr;  // 2 x d: charge and H-count directions
  Parameter* hydrogen_ = nullptr;
  std::vector<Block> blocks_;
};

struct GeomEncoderConfig {
  int width = 32;
  int rounds = 3;
  double cutoff = 5.0;  // Angstrom
  int radial_bases = 16;
};

inline constexpr double kMessageScale = 0.2;

// Gaussian radial features times a cosine cutoff; zero at and beyond cutoff.
std::vector<double> radial_features(double r, const GeomEncoderConfig& cfg);

class GeomEncoder {
 public:
  static GeomEncoder create(ParameterSet& ps, const GeomEncoderConfig& cfg, std::mt19937_64& rng,
                            const std::string& prefix = "geo");

  Var encode(Context& ctx, std::span<const Element> elements, const Coordinates& coords) const;
  const GeomEncoderConfig& config() const { return cfg_; }

 private:
  struct Round {
    Parameter* w_in;
    Parameter* filters;  // radial_bases x d
    Linear out;
  };
  GeomEncoderConfig cfg_;
  Parameter* elements_ = nullptr;
  std::vector<Round> rounds_;
};

}  // namespace geoham

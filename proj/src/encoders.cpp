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

#include "geoham/encoders.hpp"

#include <cmath>
#include <numbers>

#include "geoham/error.hpp"

namespace geoham {

namespace {

constexpr std::size_t kAtomBase = 1;
constexpr std::size_t kAromaticBase = kAtomBase + kElementCount;
constexpr std::size_t kBracketBase = kAromaticBase + kElementCount;
constexpr std::size_t kBracketAromaticBase = kBracketBase + kElementCount;
constexpr std::size_t kBondBase = kBracketAromaticBase + kElementCount;
constexpr std::size_t kRingId = kBondBase + 6;
constexpr std::size_t kBranchOpenId = kRingId + 1;
constexpr std::size_t kBranchCloseId = kRingId + 2;
static_assert(kBranchCloseId + 1 == kVocabSize);

constexpr double kPositionalScale = 0.1;

std::vector<std::size_t> to_index(std::span<const Token> tokens) {
  std::vector<std::size_t> ids(tokens.size());
  for (std::size_t k = 0; k < tokens.size(); ++k) ids[k] = vocab_id(tokens[k]);
  return ids;
}

}  // namespace

std::size_t vocab_id(const Token& token) {
  switch (token.kind) {
    case TokenKind::Mask:
      return 0;
    case TokenKind::Atom:
    case TokenKind::BracketAtom: {
      const AtomDescriptor d = describe_atom_token(token);
      const auto e = static_cast<std::size_t>(d.element);
      if (token.kind == TokenKind::Atom) return (d.aromatic ? kAromaticBase : kAtomBase) + e;
      return (d.aromatic ? kBracketAromaticBase : kBracketBase) + e;
    }
    case TokenKind::Bond: {
      static constexpr std::string_view kBonds = "-=#:/\\";
      const auto pos = kBonds.find(token.text.empty() ? '?' : token.text[0]);
      if (pos == std::string_view::npos) break;
      return kBondBase + pos;
    }
    case TokenKind::RingClosure:
      return kRingId;
    case TokenKind::BranchOpen:
      return kBranchOpenId;
    case TokenKind::BranchClose:
      return kBranchCloseId;
  }
  throw Error(ErrorCode::UnknownTokenKind, "no vocabulary entry for '" + token.text + "'");
}

AtomTokenMap atom_token_map(const MolGraph& mol, const ExpandedMolecule& expanded) {
  AtomTokenMap map;
  map.token_count = mol.token_owner.size();
  std::vector<std::vector<std::size_t>> owned(mol.atoms.size());
  for (std::size_t k = 0; k < mol.token_owner.size(); ++k) {
    if (mol.token_owner[k] != kNoAtom) owned[mol.token_owner[k]].push_back(k);
  }
  for (std::size_t i = 0; i < expanded.size(); ++i) {
    const std::size_t p = expanded.parent[i];
    if (p >= owned.size()) throw Error(ErrorCode::IndexOutOfRange, "expanded atom parent");
    map.tokens.push_back(owned[p]);
    map.implicit_h.push_back(i >= mol.atoms.size() ? 1 : 0);
  }
  return map;
}

Matrix positional_encoding(std::size_t length, int width) {
  Matrix pe(static_cast<Eigen::Index>(length), width);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (int j = 0; j < width; ++j) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (j / 2)) / width);
      const double angle = static_cast<double>(pos) * freq;
      pe(static_cast<Eigen::Index>(pos), j) =
          kPositionalScale * (j % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

TokenEncoder TokenEncoder::create(ParameterSet& ps, const TokenEncoderConfig& cfg,
                                  std::mt19937_64& rng, const std::string& prefix) {
  if (cfg.width <= 0 || cfg.layers < 0) {
    throw Error(ErrorCode::InvalidArgument, "token encoder width/layers");
  }
  TokenEncoder enc;
  enc.cfg_ = cfg;
  const Eigen::Index d = cfg.width;
  enc.table_ = &ps.add(prefix + ".embed", uniform_init(rng, kVocabSize, d, 0.5));
  enc.bracket_ = &ps.add(prefix + ".bracket", uniform_init(rng, 2, d, 0.1));
  enc.hydrogen_ = &ps.add(prefix + ".hydrogen", uniform_init(rng, 1, d, 0.5));
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string name = prefix + ".block" + std::to_string(l);
    Block b;
    b.wq = &ps.add(name + ".wq", glorot_init(rng, d, d));
    b.wk = &ps.add(name + ".wk", glorot_init(rng, d, d));
    b.wv = &ps.add(name + ".wv", glorot_init(rng, d, d));
    b.wo = &ps.add(name + ".wo", glorot_init(rng, d, d, 0.5));
    b.ff = Mlp::create(ps, name + ".ff", d, d, d, rng);
    enc.blocks_.push_back(b);
  }
  return enc;
}

Var TokenEncoder::encode(Context& ctx, std::span<const Token> tokens,
                         const AtomTokenMap& map) const {
  if (tokens.size() != map.token_count) {
    throw Error(ErrorCode::LengthMismatch, "token count " + std::to_string(tokens.size()) +
                                               " vs atom map over " +
                                               std::to_string(map.token_count));
  }
  const int d = cfg_.width;
  const auto n_tok = static_cast<Eigen::Index>(tokens.size());

  const std::vector<std::size_t> ids = to_index(tokens);
  Matrix features = Matrix::Zero(n_tok, 2);
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k].kind != TokenKind::BracketAtom) continue;
    const AtomDescriptor desc = describe_atom_token(tokens[k]);
    features(static_cast<Eigen::Index>(k), 0) = desc.charge;
    features(static_cast<Eigen::Index>(k), 1) = desc.hydrogens;
  }

  Var x = diff::gather_rows(ctx(*table_), ids);
  x = x + ctx.constant(positional_encoding(tokens.size(), d));
  x = x + diff::matmul(ctx.constant(std::move(features)), ctx(*bracket_));

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (const Block& b : blocks_) {
    const Var q = diff::matmul(x, ctx(*b.wq));
    const Var k = diff::matmul(x, ctx(*b.wk));
    const Var v = diff::matmul(x, ctx(*b.wv));
    const Var att = diff::row_softmax(diff::scale(diff::matmul(q, diff::transpose(k)), inv_sqrt_d));
    x = x + diff::matmul(diff::matmul(att, v), ctx(*b.wo));
    x = x + b.ff(ctx, x);
  }

  const auto n_atoms = static_cast<Eigen::Index>(map.size());
  Matrix pool = Matrix::Zero(n_atoms, n_tok);
  Matrix is_h = Matrix::Zero(n_atoms, 1);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto& owned = map.tokens[i];
    if (owned.empty()) throw Error(ErrorCode::IndexOutOfRange, "atom without tokens");
    for (std::size_t k : owned) {
      pool(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          1.0 / static_cast<double>(owned.size());
    }
    is_h(static_cast<Eigen::Index>(i), 0) = map.implicit_h[i];
  }
  Var out = diff::matmul(ctx.constant(std::move(pool)), x);
  return out + diff::matmul(ctx.constant(std::move(is_h)), ctx(*hydrogen_));
}

std::vector<double> radial_features(double r, const GeomEncoderConfig& cfg) {
  const int k = cfg.radial_bases;
  std::vector<double> out(static_cast<std::size_t>(k), 0.0);
  if (r >= cfg.cutoff) return out;
  const double spacing = cfg.cutoff / (k - 1);
  const double envelope = 0.5 * (std::cos(std::numbers::pi * r / cfg.cutoff) + 1.0);
  for (int b = 0; b < k; ++b) {
    const double z = (r - b * spacing) / spacing;
    out[static_cast<std::size_t>(b)] = std::exp(-0.5 * z * z) * envelope;
  }
  return out;
}

GeomEncoder GeomEncoder::create(ParameterSet& ps, const GeomEncoderConfig& cfg,
                                std::mt19937_64& rng, const std::string& prefix) {
  if (!(cfg.cutoff > 0.0) || cfg.radial_bases < 2 || cfg.width <= 0 || cfg.rounds < 0) {
    throw Error(ErrorCode::InvalidArgument, "geometry encoder config");
  }
  GeomEncoder enc;
  enc.cfg_ = cfg;
  const Eigen::Index d = cfg.width;
  enc.elements_ = &ps.add(prefix + ".elements", uniform_init(rng, kElementCount, d, 0.5));
  for (int m = 0; m < cfg.rounds; ++m) {
    const std::string name = prefix + ".round" + std::to_string(m);
    Round r;
    r.w_in = &ps.add(name + ".in", glorot_init(rng, d, d));
    r.filters = &ps.add(name + ".filters", uniform_init(rng, cfg.radial_bases, d, 1.0));
    r.out = Linear::create(ps, name + ".out", d, d, rng);
    enc.rounds_.push_back(r);
  }
  return enc;
}

Var GeomEncoder::encode(Context& ctx, std::span<const Element> elements,
                        const Coordinates& coords) const {
  const auto n = static_cast<Eigen::Index>(elements.size());
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "geometry of zero atoms");
  if (coords.rows() != n) {
    throw Error(ErrorCode::ShapeMismatch, "coordinates for " + std::to_string(coords.rows()) +
                                              " atoms, elements for " + std::to_string(n));
  }
  if (!coords.allFinite()) throw Error(ErrorCode::NonFiniteCoordinate, "coordinates");

  const int kb = cfg_.radial_bases;
  std::vector<Matrix> edge(static_cast<std::size_t>(kb), Matrix::Zero(n, n));
  std::vector<bool> used(static_cast<std::size_t>(kb), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double r = (coords.row(i) - coords.row(j)).norm();
      if (r >= cfg_.cutoff) continue;
      const std::vector<double> f = radial_features(r, cfg_);
      for (int b = 0; b < kb; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        edge[bi](i, j) = edge[bi](j, i) = kMessageScale * f[bi];
        used[bi] = used[bi] || f[bi] != 0.0;
      }
    }
  }

  std::vector<std::size_t> rows(elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i) rows[i] = static_cast<std::size_t>(elements[i]);
  Var h = diff::gather_rows(ctx(*elements_), rows);

  for (const Round& r : rounds_) {
    const Var x = diff::matmul(h, ctx(*r.w_in));
    const Var filters = ctx(*r.filters);
    Var msg = ctx.constant(Matrix::Zero(n, cfg_.width));
    for (int b = 0; b < kb; ++b) {
      if (!used[static_cast<std::size_t>(b)]) continue;
      const std::size_t row = static_cast<std::size_t>(b);
      const Var filter = diff::gather_rows(filters, std::span<const std::size_t>(&row, 1));
      msg = msg + diff::mul(diff::matmul(ctx.constant(edge[row]), x), filter);
    }
    h = h + diff::tanh(r.out(ctx, msg));
  }
  return h;
}

}  // namespace geoham

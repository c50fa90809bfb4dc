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

// SMILES tokenizer, graph parser, fragmenter and fragment masking.
//
// Only single-component molecules over H, B, C, N, O, F, P, S, Cl, Br and I
// are accepted. Stereo markers are tokenized but carry no meaning in the
// graph; isotope labels inside brackets are skipped.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geoham {

enum class Element : std::uint8_t { H, B, C, N, O, F, P, S, Cl, Br, I };

inline constexpr std::size_t kElementCount = 11;

std::string_view symbol(Element e);
Element element_from_symbol(std::string_view sym);  // throws UnknownSymbol
bool is_heavy(Element e);

enum class TokenKind : std::uint8_t {
  Atom,
  BracketAtom,
  Bond,
  RingClosure,
  BranchOpen,
  BranchClose,
  Mask,
};

inline constexpr std::string_view kMaskText = "<mask>";

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t position;

  bool is_atom() const {
    return kind == TokenKind::Atom || kind == TokenKind::BracketAtom;
  }
  friend bool operator==(const Token&, const Token&) = default;
};

std::vector<Token> tokenize(std::string_view smiles);

// Element and bracket annotations of an atom token.
struct AtomDescriptor {
  Element element;
  bool aromatic;
  int charge;
  int hydrogens;  // only meaningful for bracket atoms
};
AtomDescriptor describe_atom_token(const Token& token);
std::string detokenize(std::span<const Token> tokens);

enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

struct Atom {
  Element element;
  bool aromatic = false;
  int charge = 0;
  int hydrogens = 0;  // implicit or bracket-specified H count
  std::size_t token = 0;
};

struct Bond {
  std::size_t a;
  std::size_t b;
  BondOrder order;
  bool in_ring = false;
};

inline constexpr std::size_t kNoAtom = std::numeric_limits<std::size_t>::max();

struct MolGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  // For every token: the atom that owns it, or kNoAtom. Atom tokens own
  // themselves; ring-closure digits belong to the atom they follow.
  std::vector<std::size_t> token_owner;

  std::vector<std::vector<std::size_t>> adjacency() const;
  std::size_t heavy_atom_count() const;
  std::size_t total_hydrogens() const;
};

MolGraph parse(std::span<const Token> tokens);
inline MolGraph parse(std::string_view smiles) { return parse(tokenize(smiles)); }

struct Fragment {
  std::size_t id;
  std::vector<std::size_t> atoms;   // graph atom indices, ascending
  std::vector<std::size_t> tokens;  // token indices owned by those atoms, ascending
};

// Simplified BRICS-style decomposition. Bonds are visited in index order; an
// acyclic single bond between two heavy atoms is cut when both sides of it,
// within the piece that currently contains it, keep at least two heavy atoms.
std::vector<Fragment> fragment(const MolGraph& mol);

std::string fragments_to_json(std::span<const Fragment> fragments);

// Replaces the atom tokens of every fragment i with keep[i] == 0 by the mask
// token. Positions and length are preserved.
std::vector<Token> mask_tokens(std::span<const Token> tokens,
                               std::span<const Fragment> fragments,
                               std::span<const std::uint8_t> keep);

// Graph atoms followed by their implicit hydrogens, appended in parent order.
struct ExpandedMolecule {
  std::vector<Element> elements;
  std::vector<std::size_t> parent;  // graph atom for each expanded atom
  std::vector<std::pair<std::size_t, std::size_t>> bonds;

  std::size_t size() const { return elements.size(); }
};

ExpandedMolecule expand_hydrogens(const MolGraph& mol);

// Fragments over expanded atoms: each implicit hydrogen joins its parent.
std::vector<std::vector<std::size_t>> expand_fragments(
    std::span<const Fragment> fragments, const ExpandedMolecule& expanded);

}  // namespace geoham

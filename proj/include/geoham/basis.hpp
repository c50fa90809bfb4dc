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

// Toy minimal basis: one orbital on hydrogen, an s-like and a p-effective
// orbital on every heavy element. Each orbital is built from a normalized
// s-type Gaussian and carries an onsite energy for the reference Hamiltonian.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "geoham/smiles.hpp"

namespace geoham {

enum class OrbitalKind : std::uint8_t { S, P };

std::string_view to_string(OrbitalKind k);

struct OrbitalSpec {
  OrbitalKind kind;
  double exponent;  // bohr^-2
  double onsite;    // Hartree
};

class OrbitalBasis {
 public:
  // The built-in table covering all supported elements.
  static const OrbitalBasis& toy();

  std::span<const OrbitalSpec> orbitals(Element e) const;  // throws UnsupportedElement
  std::size_t count(Element e) const { return orbitals(e).size(); }

 private:
  std::array<std::vector<OrbitalSpec>, kElementCount> table_;
};

inline constexpr std::size_t kMaxOrbitalsPerAtom = 2;

struct BlockLayout {
  std::vector<std::size_t> offset;  // first orbital of each atom
  std::vector<std::size_t> count;   // orbitals on each atom
  std::vector<std::size_t> atom;    // owning atom of each orbital
  std::vector<std::size_t> slot;    // index of each orbital within its atom
  std::size_t n_orb = 0;

  std::size_t n_atoms() const { return offset.size(); }
  bool same_atom(std::size_t r, std::size_t c) const { return atom[r] == atom[c]; }

  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

BlockLayout layout(std::span<const Element> elements,
                   const OrbitalBasis& basis = OrbitalBasis::toy());

nlohmann::json layout_to_json(const BlockLayout& l);
BlockLayout layout_from_json(const nlohmann::json& j);  // throws CorruptFile

}  // namespace geoham

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

#include "geoham/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <queue>

#include "json.hpp"

#include "geoham/error.hpp"

namespace geoham {

namespace {

constexpr std::array<std::string_view, kElementCount> kSymbols = {
    "H", "B", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I"};

struct BracketInfo {
  Element element;
  bool aromatic;
  int hydrogens;
  int charge;
};

// Content between '[' and ']'.
BracketInfo parse_bracket(std::string_view s) {
  std::size_t i = 0;
  auto fail = [&](const std::string& why) -> BracketInfo {
    throw Error(ErrorCode::UnknownSymbol, "[" + std::string(s) + "]: " + why);
  };
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i >= s.size()) return fail("missing element");

  BracketInfo info{Element::C, false, 0, 0};
  if (std::islower(static_cast<unsigned char>(s[i]))) {
    switch (s[i]) {
      case 'b': info.element = Element::B; break;
      case 'c': info.element = Element::C; break;
      case 'n': info.element = Element::N; break;
      case 'o': info.element = Element::O; break;
      case 'p': info.element = Element::P; break;
      case 's': info.element = Element::S; break;
      default: return fail("unsupported aromatic element");
    }
    info.aromatic = true;
    ++i;
  } else {
    std::string_view two = s.substr(i, 2);
    // Any capital-lowercase pair is a two-letter symbol; unsupported ones
    // are reported by name.
    if (two.size() == 2 && std::islower(static_cast<unsigned char>(two[1]))) {
      info.element = element_from_symbol(two);
      i += 2;
    } else {
      info.element = element_from_symbol(s.substr(i, 1));
      ++i;
    }
  }
  while (i < s.size() && s[i] == '@') ++i;
  if (i < s.size() && s[i] == 'H') {
    ++i;
    info.hydrogens = 1;
    if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      info.hydrogens = s[i] - '0';
      ++i;
    }
  }
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    const char sign = s[i];
    const int unit = sign == '+' ? 1 : -1;
    ++i;
    int magnitude = 1;
    if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      magnitude = s[i] - '0';
      ++i;
    } else {
      while (i < s.size() && s[i] == sign) {
        ++magnitude;
        ++i;
      }
    }
    info.charge = unit * magnitude;
  }
  if (i < s.size() && s[i] == ':') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  }
  if (i != s.size()) return fail("unexpected character '" + std::string(1, s[i]) + "'");
  return info;
}

std::optional<BondOrder> bond_from_text(char c) {
  switch (c) {
    case '-':
    case '/':
    case '\\': return BondOrder::Single;
    case '=': return BondOrder::Double;
    case '#': return BondOrder::Triple;
    case ':': return BondOrder::Aromatic;
    default: return std::nullopt;
  }
}

int valence_contribution(BondOrder order) {
  switch (order) {
    case BondOrder::Single: return 1;
    case BondOrder::Double: return 2;
    case BondOrder::Triple: return 3;
    case BondOrder::Aromatic: return 1;
  }
  return 1;
}

std::span<const int> standard_valences(Element e) {
  static constexpr int kB[] = {3};
  static constexpr int kC[] = {4};
  static constexpr int kN[] = {3, 5};
  static constexpr int kO[] = {2};
  static constexpr int kP[] = {3, 5};
  static constexpr int kS[] = {2, 4, 6};
  static constexpr int kHal[] = {1};
  switch (e) {
    case Element::B: return kB;
    case Element::C: return kC;
    case Element::N: return kN;
    case Element::O: return kO;
    case Element::P: return kP;
    case Element::S: return kS;
    default: return kHal;
  }
}

// Connected pieces of the graph after removing `removed` bonds.
std::vector<std::size_t> reachable(const MolGraph& mol,
                                   const std::vector<std::vector<std::size_t>>& bond_adj,
                                   const std::vector<bool>& removed, std::size_t start,
                                   std::size_t skip_bond) {
  std::vector<bool> seen(mol.atoms.size(), false);
  std::vector<std::size_t> out;
  std::queue<std::size_t> q;
  q.push(start);
  seen[start] = true;
  while (!q.empty()) {
    const std::size_t a = q.front();
    q.pop();
    out.push_back(a);
    for (std::size_t bi : bond_adj[a]) {
      if (bi == skip_bond || removed[bi]) continue;
      const Bond& b = mol.bonds[bi];
      const std::size_t other = b.a == a ? b.b : b.a;
      if (!seen[other]) {
        seen[other] = true;
        q.push(other);
      }
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> bond_adjacency(const MolGraph& mol) {
  std::vector<std::vector<std::size_t>> adj(mol.atoms.size());
  for (std::size_t i = 0; i < mol.bonds.size(); ++i) {
    adj[mol.bonds[i].a].push_back(i);
    adj[mol.bonds[i].b].push_back(i);
  }
  return adj;
}

}  // namespace

std::string_view symbol(Element e) { return kSymbols[static_cast<std::size_t>(e)]; }

Element element_from_symbol(std::string_view sym) {
  for (std::size_t i = 0; i < kSymbols.size(); ++i) {
    if (kSymbols[i] == sym) return static_cast<Element>(i);
  }
  throw Error(ErrorCode::UnknownSymbol, "unsupported element '" + std::string(sym) + "'");
}

bool is_heavy(Element e) { return e != Element::H; }

std::vector<Token> tokenize(std::string_view smiles) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto push = [&](TokenKind kind, std::size_t len) {
    out.push_back(Token{kind, std::string(smiles.substr(i, len)), out.size()});
    i += len;
  };
  while (i < smiles.size()) {
    const char c = smiles[i];
    if (static_cast<unsigned char>(c) > 127) {
      throw Error(ErrorCode::UnknownSymbol, "non-ASCII byte at offset " + std::to_string(i));
    }
    if (c == '[') {
      const std::size_t close = smiles.find(']', i + 1);
      if (close == std::string_view::npos) {
        throw Error(ErrorCode::UnterminatedBracket, "'[' at offset " + std::to_string(i));
      }
      parse_bracket(smiles.substr(i + 1, close - i - 1));
      push(TokenKind::BracketAtom, close - i + 1);
    } else if (c == 'C' && i + 1 < smiles.size() && smiles[i + 1] == 'l') {
      push(TokenKind::Atom, 2);
    } else if (c == 'B' && i + 1 < smiles.size() && smiles[i + 1] == 'r') {
      push(TokenKind::Atom, 2);
    } else if (std::string_view("BCNOPSFIbcnops").find(c) != std::string_view::npos) {
      push(TokenKind::Atom, 1);
    } else if (bond_from_text(c)) {
      push(TokenKind::Bond, 1);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      push(TokenKind::RingClosure, 1);
    } else if (c == '%') {
      if (i + 2 >= smiles.size() || !std::isdigit(static_cast<unsigned char>(smiles[i + 1])) ||
          !std::isdigit(static_cast<unsigned char>(smiles[i + 2]))) {
        throw Error(ErrorCode::UnknownSymbol, "'%' needs two digits at offset " + std::to_string(i));
      }
      push(TokenKind::RingClosure, 3);
    } else if (c == '(') {
      push(TokenKind::BranchOpen, 1);
    } else if (c == ')') {
      push(TokenKind::BranchClose, 1);
    } else {
      throw Error(ErrorCode::UnknownSymbol,
                  "'" + std::string(1, c) + "' at offset " + std::to_string(i));
    }
  }
  return out;
}

AtomDescriptor describe_atom_token(const Token& token) {
  if (token.kind == TokenKind::BracketAtom) {
    const BracketInfo info =
        parse_bracket(std::string_view(token.text).substr(1, token.text.size() - 2));
    return {info.element, info.aromatic, info.charge, info.hydrogens};
  }
  if (token.kind != TokenKind::Atom) {
    throw Error(ErrorCode::InvalidArgument, "token '" + token.text + "' is not an atom");
  }
  if (std::islower(static_cast<unsigned char>(token.text[0]))) {
    std::string upper = token.text;
    upper[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(upper[0])));
    return {element_from_symbol(upper), true, 0, 0};
  }
  return {element_from_symbol(token.text), false, 0, 0};
}

std::string detokenize(std::span<const Token> tokens) {
  std::string s;
  for (const Token& t : tokens) s += t.text;
  return s;
}

std::vector<std::vector<std::size_t>> MolGraph::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(atoms.size());
  for (const Bond& b : bonds) {
    adj[b.a].push_back(b.b);
    adj[b.b].push_back(b.a);
  }
  return adj;
}

std::size_t MolGraph::heavy_atom_count() const {
  return static_cast<std::size_t>(std::count_if(
      atoms.begin(), atoms.end(), [](const Atom& a) { return is_heavy(a.element); }));
}

std::size_t MolGraph::total_hydrogens() const {
  std::size_t n = 0;
  for (const Atom& a : atoms) n += static_cast<std::size_t>(a.hydrogens);
  return n;
}

MolGraph parse(std::span<const Token> tokens) {
  MolGraph mol;
  mol.token_owner.assign(tokens.size(), kNoAtom);
  std::vector<bool> bracket;

  std::size_t prev = kNoAtom;
  std::optional<BondOrder> pending;
  std::vector<std::size_t> branches;
  struct OpenRing {
    std::size_t atom;
    std::optional<BondOrder> order;
  };
  std::map<std::string, OpenRing> rings;

  auto default_order = [&](std::size_t a, std::size_t b) {
    return mol.atoms[a].aromatic && mol.atoms[b].aromatic ? BondOrder::Aromatic
                                                          : BondOrder::Single;
  };
  auto has_bond = [&](std::size_t a, std::size_t b) {
    return std::any_of(mol.bonds.begin(), mol.bonds.end(), [&](const Bond& x) {
      return (x.a == a && x.b == b) || (x.a == b && x.b == a);
    });
  };
  auto where = [&](std::size_t k) { return " at token " + std::to_string(k); };

  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const Token& t = tokens[k];
    switch (t.kind) {
      case TokenKind::Atom:
      case TokenKind::BracketAtom: {
        const AtomDescriptor desc = describe_atom_token(t);
        Atom atom;
        atom.token = k;
        atom.element = desc.element;
        atom.aromatic = desc.aromatic;
        atom.charge = desc.charge;
        atom.hydrogens = desc.hydrogens;
        const std::size_t idx = mol.atoms.size();
        mol.atoms.push_back(atom);
        bracket.push_back(t.kind == TokenKind::BracketAtom);
        mol.token_owner[k] = idx;
        if (prev != kNoAtom) {
          mol.bonds.push_back(Bond{prev, idx, pending.value_or(default_order(prev, idx))});
        }
        pending.reset();
        prev = idx;
        break;
      }
      case TokenKind::Bond:
        if (prev == kNoAtom || pending) {
          throw Error(ErrorCode::SyntaxError, "misplaced bond '" + t.text + "'" + where(k));
        }
        pending = bond_from_text(t.text[0]);
        break;
      case TokenKind::RingClosure: {
        if (prev == kNoAtom) {
          throw Error(ErrorCode::SyntaxError, "ring closure before any atom" + where(k));
        }
        mol.token_owner[k] = prev;
        auto it = rings.find(t.text);
        if (it == rings.end()) {
          rings.emplace(t.text, OpenRing{prev, pending});
        } else {
          const std::size_t other = it->second.atom;
          if (other == prev || has_bond(other, prev)) {
            throw Error(ErrorCode::UnmatchedRingClosure,
                        "ring " + t.text + " closes onto an existing bond" + where(k));
          }
          const BondOrder order =
              pending ? *pending : it->second.order.value_or(default_order(other, prev));
          mol.bonds.push_back(Bond{other, prev, order});
          rings.erase(it);
        }
        pending.reset();
        break;
      }
      case TokenKind::BranchOpen:
        if (prev == kNoAtom || pending) {
          throw Error(ErrorCode::UnbalancedBranch, "branch opened without an atom" + where(k));
        }
        branches.push_back(prev);
        break;
      case TokenKind::BranchClose:
        if (branches.empty()) {
          throw Error(ErrorCode::UnbalancedBranch, "')' without '('" + where(k));
        }
        if (pending) throw Error(ErrorCode::SyntaxError, "dangling bond" + where(k));
        prev = branches.back();
        branches.pop_back();
        break;
      case TokenKind::Mask:
        throw Error(ErrorCode::SyntaxError, "mask token cannot be parsed" + where(k));
    }
  }
  if (!branches.empty()) throw Error(ErrorCode::UnbalancedBranch, "unclosed '('");
  if (!rings.empty()) {
    throw Error(ErrorCode::UnmatchedRingClosure, "ring " + rings.begin()->first + " never closed");
  }
  if (pending) throw Error(ErrorCode::SyntaxError, "dangling bond at end of input");
  if (mol.atoms.empty()) throw Error(ErrorCode::SyntaxError, "no atoms");

  const auto bond_adj = bond_adjacency(mol);
  const std::vector<bool> none(mol.bonds.size(), false);
  for (std::size_t bi = 0; bi < mol.bonds.size(); ++bi) {
    const auto side = reachable(mol, bond_adj, none, mol.bonds[bi].a, bi);
    mol.bonds[bi].in_ring =
        std::find(side.begin(), side.end(), mol.bonds[bi].b) != side.end();
  }

  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    if (bracket[i]) continue;
    Atom& atom = mol.atoms[i];
    int used = 0;
    for (std::size_t bi : bond_adj[i]) used += valence_contribution(mol.bonds[bi].order);
    if (atom.aromatic && (atom.element == Element::C || atom.element == Element::N ||
                          atom.element == Element::B)) {
      used += 1;
    }
    int valence = -1;
    for (int v : standard_valences(atom.element)) {
      if (v >= used) {
        valence = v;
        break;
      }
    }
    if (valence < 0) {
      if (atom.aromatic) {
        atom.hydrogens = 0;
        continue;
      }
      throw Error(ErrorCode::ValenceExceeded,
                  std::string(symbol(atom.element)) + " at token " + std::to_string(atom.token) +
                      " has " + std::to_string(used) + " bonds");
    }
    atom.hydrogens = valence - used;
  }
  return mol;
}

std::vector<Fragment> fragment(const MolGraph& mol) {
  const auto bond_adj = bond_adjacency(mol);
  std::vector<bool> cut(mol.bonds.size(), false);
  auto heavy_count = [&](const std::vector<std::size_t>& atoms) {
    return std::count_if(atoms.begin(), atoms.end(),
                         [&](std::size_t a) { return is_heavy(mol.atoms[a].element); });
  };
  for (std::size_t bi = 0; bi < mol.bonds.size(); ++bi) {
    const Bond& b = mol.bonds[bi];
    if (b.order != BondOrder::Single || b.in_ring) continue;
    if (!is_heavy(mol.atoms[b.a].element) || !is_heavy(mol.atoms[b.b].element)) continue;
    const auto left = reachable(mol, bond_adj, cut, b.a, bi);
    const auto right = reachable(mol, bond_adj, cut, b.b, bi);
    if (heavy_count(left) >= 2 && heavy_count(right) >= 2) cut[bi] = true;
  }

  std::vector<std::size_t> owner(mol.atoms.size(), kNoAtom);
  std::vector<Fragment> out;
  for (std::size_t a = 0; a < mol.atoms.size(); ++a) {
    if (owner[a] != kNoAtom) continue;
    Fragment f;
    f.id = out.size();
    f.atoms = reachable(mol, bond_adj, cut, a, kNoAtom);
    std::sort(f.atoms.begin(), f.atoms.end());
    for (std::size_t x : f.atoms) owner[x] = f.id;
    out.push_back(std::move(f));
  }
  for (std::size_t k = 0; k < mol.token_owner.size(); ++k) {
    if (mol.token_owner[k] != kNoAtom) out[owner[mol.token_owner[k]]].tokens.push_back(k);
  }
  return out;
}

std::string fragments_to_json(std::span<const Fragment> fragments) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const Fragment& f : fragments) j[std::to_string(f.id)] = f.atoms;
  return j.dump();
}

std::vector<Token> mask_tokens(std::span<const Token> tokens, std::span<const Fragment> fragments,
                               std::span<const std::uint8_t> keep) {
  if (keep.size() != fragments.size()) {
    throw Error(ErrorCode::LengthMismatch, "mask has " + std::to_string(keep.size()) +
                                               " entries for " + std::to_string(fragments.size()) +
                                               " fragments");
  }
  std::vector<Token> out(tokens.begin(), tokens.end());
  for (std::size_t f = 0; f < fragments.size(); ++f) {
    if (keep[f]) continue;
    for (std::size_t k : fragments[f].tokens) {
      if (k >= out.size()) throw Error(ErrorCode::IndexOutOfRange, "token " + std::to_string(k));
      if (out[k].is_atom()) out[k] = Token{TokenKind::Mask, std::string(kMaskText), out[k].position};
    }
  }
  return out;
}

ExpandedMolecule expand_hydrogens(const MolGraph& mol) {
  ExpandedMolecule ex;
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    ex.elements.push_back(mol.atoms[i].element);
    ex.parent.push_back(i);
  }
  for (const Bond& b : mol.bonds) ex.bonds.emplace_back(b.a, b.b);
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    for (int h = 0; h < mol.atoms[i].hydrogens; ++h) {
      ex.bonds.emplace_back(i, ex.elements.size());
      ex.elements.push_back(Element::H);
      ex.parent.push_back(i);
    }
  }
  return ex;
}

std::vector<std::vector<std::size_t>> expand_fragments(std::span<const Fragment> fragments,
                                                       const ExpandedMolecule& expanded) {
  std::size_t n_graph = 0;
  for (const Fragment& f : fragments) n_graph += f.atoms.size();
  std::vector<std::size_t> owner(n_graph, kNoAtom);
  for (const Fragment& f : fragments) {
    for (std::size_t a : f.atoms) {
      if (a >= n_graph) throw Error(ErrorCode::IndexOutOfRange, "fragment atom " + std::to_string(a));
      owner[a] = f.id;
    }
  }
  std::vector<std::vector<std::size_t>> out(fragments.size());
  for (std::size_t k = 0; k < expanded.size(); ++k) {
    const std::size_t p = expanded.parent[k];
    if (p >= n_graph) throw Error(ErrorCode::IndexOutOfRange, "parent " + std::to_string(p));
    out[owner[p]].push_back(k);
  }
  return out;
}

}  // namespace geoham

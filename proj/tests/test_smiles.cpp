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

#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "doctest.h"
#include "geoham/error.hpp"
#include "geoham/smiles.hpp"

using namespace geoham;

namespace {

std::vector<std::string> load_corpus() {
  std::ifstream in(std::string(GEOHAM_DATA_DIR) + "/corpus.smi");
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

struct ParserRef {
  std::string smiles;
  std::size_t atoms, bonds, ring_bonds, total_h;
};

std::vector<ParserRef> load_parser_reference() {
  std::ifstream in(std::string(GEOHAM_TEST_DATA) + "/parser_reference.tsv");
  std::vector<ParserRef> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    ParserRef r;
    ss >> r.smiles >> r.atoms >> r.bonds >> r.ring_bonds >> r.total_h;
    out.push_back(r);
  }
  return out;
}

// The widely used regex SMILES tokenizer; an independent reference.
std::vector<std::string> reference_tokenize(const std::string& s) {
  static const std::regex re(
      R"((\[[^\]]+]|Br?|Cl?|N|O|S|P|F|I|b|c|n|o|s|p|\(|\)|\.|=|#|-|\+|\\|\/|:|~|@|\?|>|\*|\$|\%[0-9]{2}|[0-9]))");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

ErrorCode error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("tokenize basic strings") {
  auto t = tokenize("C");
  REQUIRE(t.size() == 1);
  CHECK(t[0].kind == TokenKind::Atom);
  CHECK(t[0].text == "C");

  t = tokenize("CCO");
  REQUIRE(t.size() == 3);
  CHECK(t[2].text == "O");
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i].position == i);

  t = tokenize("c1ccccc1");
  REQUIRE(t.size() == 8);
  CHECK(t[1].kind == TokenKind::RingClosure);
  CHECK(t[7].kind == TokenKind::RingClosure);
  CHECK(std::count_if(t.begin(), t.end(), [](const Token& x) { return x.is_atom(); }) == 6);

  t = tokenize("ClC(Br)[NH3+]C%12CC%12");
  CHECK(t[0].text == "Cl");
  CHECK(t[3].text == "Br");
  CHECK(t[5].kind == TokenKind::BracketAtom);
  CHECK(t[5].text == "[NH3+]");
  CHECK(t[7].text == "%12");
}

TEST_CASE("tokenize agrees with the reference regex tokenizer") {
  const auto refs = load_parser_reference();
  REQUIRE(refs.size() == 100);
  for (const auto& r : refs) {
    const auto toks = tokenize(r.smiles);
    std::vector<std::string> texts;
    for (const auto& t : toks) texts.push_back(t.text);
    CHECK_MESSAGE(texts == reference_tokenize(r.smiles), r.smiles);
  }
}

TEST_CASE("tokenize round trip over the corpus") {
  for (const auto& s : load_corpus()) CHECK(detokenize(tokenize(s)) == s);
}

TEST_CASE("tokenize errors") {
  CHECK(error_of([] { tokenize("CX"); }) == ErrorCode::UnknownSymbol);
  CHECK(error_of([] { tokenize("C.C"); }) == ErrorCode::UnknownSymbol);
  CHECK(error_of([] { tokenize("[Na+]"); }) == ErrorCode::UnknownSymbol);
  CHECK(error_of([] { tokenize("C[NH4"); }) == ErrorCode::UnterminatedBracket);
  CHECK(error_of([] { tokenize("C%1"); }) == ErrorCode::UnknownSymbol);
}

TEST_CASE("parse ethanol and cyclopropane") {
  const MolGraph ethanol = parse("CCO");
  REQUIRE(ethanol.atoms.size() == 3);
  CHECK(ethanol.bonds.size() == 2);
  CHECK(ethanol.atoms[0].hydrogens == 3);
  CHECK(ethanol.atoms[1].hydrogens == 2);
  CHECK(ethanol.atoms[2].hydrogens == 1);
  for (const auto& b : ethanol.bonds) CHECK(b.order == BondOrder::Single);

  const MolGraph cp = parse("C1CC1");
  CHECK(cp.atoms.size() == 3);
  REQUIRE(cp.bonds.size() == 3);
  for (const auto& b : cp.bonds) CHECK(b.in_ring);
}

TEST_CASE("parse marks aromatic rings and stereo is ignored") {
  const MolGraph benzene = parse("c1ccccc1");
  for (const auto& a : benzene.atoms) {
    CHECK(a.aromatic);
    CHECK(a.hydrogens == 1);
  }
  for (const auto& b : benzene.bonds) {
    CHECK(b.order == BondOrder::Aromatic);
    CHECK(b.in_ring);
  }
  const MolGraph a = parse("F/C=C/F");
  const MolGraph b = parse("FC=CF");
  CHECK(a.atoms.size() == b.atoms.size());
  CHECK(a.bonds[1].order == BondOrder::Double);
  CHECK(parse("C[C@@H](O)N").atoms[1].hydrogens == 1);
}

TEST_CASE("parse agrees with the frozen reference parser fixture") {
  for (const auto& r : load_parser_reference()) {
    const MolGraph m = parse(r.smiles);
    std::size_t ring = 0;
    for (const auto& b : m.bonds) ring += b.in_ring;
    CHECK_MESSAGE(m.atoms.size() == r.atoms, r.smiles);
    CHECK_MESSAGE(m.bonds.size() == r.bonds, r.smiles);
    CHECK_MESSAGE(ring == r.ring_bonds, r.smiles);
    CHECK_MESSAGE(m.total_hydrogens() == r.total_h, r.smiles);
  }
}

TEST_CASE("token ownership maps ring digits to the preceding atom") {
  const auto toks = tokenize("C1CC1");
  const MolGraph m = parse(toks);
  REQUIRE(m.token_owner.size() == 5);
  CHECK(m.token_owner[0] == 0);
  CHECK(m.token_owner[1] == 0);
  CHECK(m.token_owner[3] == 2);
  CHECK(m.token_owner[4] == 2);
  const MolGraph br = parse("CC(=O)O");
  CHECK(br.token_owner[2] == kNoAtom);
  CHECK(br.token_owner[3] == kNoAtom);
  for (std::size_t i = 0; i < br.atoms.size(); ++i) CHECK(br.token_owner[br.atoms[i].token] == i);
}

TEST_CASE("parse errors") {
  CHECK(error_of([] { parse("C1CC"); }) == ErrorCode::UnmatchedRingClosure);
  CHECK(error_of([] { parse("C11"); }) == ErrorCode::UnmatchedRingClosure);
  CHECK(error_of([] { parse("C(C"); }) == ErrorCode::UnbalancedBranch);
  CHECK(error_of([] { parse("CC)C"); }) == ErrorCode::UnbalancedBranch);
  CHECK(error_of([] { parse("C(C)(C)(C)(C)C"); }) == ErrorCode::ValenceExceeded);
  CHECK(error_of([] { parse("O=O=O"); }) == ErrorCode::ValenceExceeded);
  CHECK(error_of([] { parse("C=="); }) == ErrorCode::SyntaxError);
  CHECK(error_of([] { parse(""); }) == ErrorCode::SyntaxError);
}

TEST_CASE("unsupported bracket elements are named") {
  for (const char* s : {"C[Si](C)C", "[Na+].[Cl-]", "[Fe]"}) {
    CAPTURE(s);
    try {
      parse(s);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownSymbol);
      const std::string what = e.what();
      const std::string sym = std::string(s).find("Si") != std::string::npos   ? "'Si'"
                              : std::string(s).find("Na") != std::string::npos ? "'Na'"
                                                                               : "'Fe'";
      CHECK(what.find(sym) != std::string::npos);
    }
  }
  CHECK(parse("[Cl-]").atoms.size() == 1);
  CHECK(parse("[Br]").atoms[0].element == Element::Br);
}

TEST_CASE("fragment examples") {
  CHECK(fragment(parse("CCO")).size() == 1);
  CHECK(fragment(parse("c1ccccc1")).size() == 1);

  // Bond 1 (C1-O2) is the first acyclic single bond with two heavy atoms on
  // each side. After it is cut, O2-C3 leaves O2 alone, so it is kept.
  const auto f = fragment(parse("CCOCC"));
  REQUIRE(f.size() == 2);
  CHECK(f[0].atoms == std::vector<std::size_t>{0, 1});
  CHECK(f[1].atoms == std::vector<std::size_t>{2, 3, 4});
  CHECK(f[0].tokens == std::vector<std::size_t>{0, 1});
  CHECK(f[1].tokens == std::vector<std::size_t>{2, 3, 4});
  CHECK(fragments_to_json(f) == R"({"0":[0,1],"1":[2,3,4]})");
}

TEST_CASE("fragments are a connected disjoint cover over the corpus") {
  for (const auto& s : load_corpus()) {
    const MolGraph m = parse(s);
    const auto frags = fragment(m);
    CHECK(fragment(m).size() == frags.size());
    std::vector<int> seen(m.atoms.size(), 0);
    const auto adj = m.adjacency();
    for (const auto& f : frags) {
      for (auto a : f.atoms) ++seen[a];
      // connected: flood fill restricted to the fragment
      std::set<std::size_t> members(f.atoms.begin(), f.atoms.end()), reached{f.atoms[0]};
      std::vector<std::size_t> stack{f.atoms[0]};
      while (!stack.empty()) {
        auto a = stack.back();
        stack.pop_back();
        for (auto b : adj[a]) {
          if (members.count(b) && !reached.count(b)) {
            reached.insert(b);
            stack.push_back(b);
          }
        }
      }
      CHECK_MESSAGE(reached.size() == members.size(), s);
      if (frags.size() > 1) {
        std::size_t heavy = 0;
        for (auto a : f.atoms) heavy += is_heavy(m.atoms[a].element);
        CHECK_MESSAGE(heavy >= 2, s);
      }
    }
    for (int c : seen) CHECK(c == 1);
  }
}

TEST_CASE("mask_tokens") {
  const auto toks = tokenize("CCOCC");
  const auto frags = fragment(parse(toks));
  const std::vector<std::uint8_t> ones(frags.size(), 1);
  CHECK(mask_tokens(toks, frags, ones) == toks);

  const auto masked = mask_tokens(toks, frags, std::vector<std::uint8_t>{1, 0});
  REQUIRE(masked.size() == toks.size());
  CHECK(masked[0] == toks[0]);
  CHECK(masked[1] == toks[1]);
  for (std::size_t k = 2; k < 5; ++k) {
    CHECK(masked[k].kind == TokenKind::Mask);
    CHECK(masked[k].position == k);
  }

  const auto ring = tokenize("c1ccccc1");
  const auto rf = fragment(parse(ring));
  const auto all = mask_tokens(ring, rf, std::vector<std::uint8_t>{0});
  for (const auto& t : all) {
    if (t.kind != TokenKind::RingClosure) CHECK(t.kind == TokenKind::Mask);
  }
  CHECK(all.size() == ring.size());
  CHECK(error_of([&] { mask_tokens(toks, frags, std::vector<std::uint8_t>{1}); }) ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("mask_tokens never changes length on random masks") {
  std::mt19937_64 rng(7);
  const auto corpus = load_corpus();
  for (std::size_t i = 0; i < corpus.size(); i += 13) {
    const auto toks = tokenize(corpus[i]);
    const auto frags = fragment(parse(toks));
    std::vector<std::uint8_t> keep(frags.size());
    for (auto& k : keep) k = rng() & 1;
    const auto masked = mask_tokens(toks, frags, keep);
    REQUIRE(masked.size() == toks.size());
    for (std::size_t k = 0; k < toks.size(); ++k) {
      CHECK(masked[k].position == toks[k].position);
      if (!toks[k].is_atom()) CHECK(masked[k] == toks[k]);
    }
  }
}

TEST_CASE("expand_hydrogens") {
  const auto water = expand_hydrogens(parse("O"));
  REQUIRE(water.size() == 3);
  CHECK(water.elements[1] == Element::H);
  CHECK(water.parent[2] == 0);
  CHECK(water.bonds.size() == 2);

  const auto h2 = expand_hydrogens(parse("[H][H]"));
  CHECK(h2.size() == 2);
  CHECK(h2.bonds.size() == 1);

  const MolGraph m = parse("CCOCC");
  const auto ex = expand_hydrogens(m);
  CHECK(ex.size() == 5 + 10 + 0);
  const auto ef = expand_fragments(fragment(m), ex);
  REQUIRE(ef.size() == 2);
  CHECK(ef[0].size() == 2 + 5);
  CHECK(ef[1].size() == 3 + 5);
}

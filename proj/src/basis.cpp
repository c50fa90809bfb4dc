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

#include "geoham/basis.hpp"

#include <string>

#include "geoham/error.hpp"
#include "geoham/geometry.hpp"

namespace geoham {

namespace {

constexpr double ev(double x) { return x / kHartreeToEv; }

}  // namespace

std::string_view to_string(OrbitalKind k) { return k == OrbitalKind::S ? "s" : "p"; }

const OrbitalBasis& OrbitalBasis::toy() {
  static const OrbitalBasis basis = [] {
    OrbitalBasis b;
    auto set = [&](Element e, std::vector<OrbitalSpec> orbs) {
      b.table_[static_cast<std::size_t>(e)] = std::move(orbs);
    };
    using K = OrbitalKind;
    set(Element::H, {{K::S, 0.40, -0.5}});
    set(Element::B, {{K::S, 0.28, ev(-15.2)}, {K::P, 0.20, ev(-8.5)}});
    set(Element::C, {{K::S, 0.35, ev(-21.4)}, {K::P, 0.25, ev(-11.4)}});
    set(Element::N, {{K::S, 0.40, ev(-26.0)}, {K::P, 0.30, ev(-13.4)}});
    set(Element::O, {{K::S, 0.45, ev(-32.3)}, {K::P, 0.35, ev(-14.8)}});
    set(Element::F, {{K::S, 0.55, ev(-40.0)}, {K::P, 0.40, ev(-18.1)}});
    set(Element::P, {{K::S, 0.25, ev(-18.6)}, {K::P, 0.18, ev(-14.0)}});
    set(Element::S, {{K::S, 0.28, ev(-20.0)}, {K::P, 0.20, ev(-11.0)}});
    set(Element::Cl, {{K::S, 0.32, ev(-26.3)}, {K::P, 0.24, ev(-14.2)}});
    set(Element::Br, {{K::S, 0.25, ev(-22.07)}, {K::P, 0.18, ev(-13.1)}});
    set(Element::I, {{K::S, 0.20, ev(-18.0)}, {K::P, 0.15, ev(-12.7)}});
    return b;
  }();
  return basis;
}

std::span<const OrbitalSpec> OrbitalBasis::orbitals(Element e) const {
  const auto idx = static_cast<std::size_t>(e);
  if (idx >= table_.size() || table_[idx].empty()) {
    throw Error(ErrorCode::UnsupportedElement, "no orbitals for element " + std::to_string(idx));
  }
  return table_[idx];
}

BlockLayout layout(std::span<const Element> elements, const OrbitalBasis& basis) {
  BlockLayout l;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const std::size_t n = basis.count(elements[i]);
    l.offset.push_back(l.n_orb);
    l.count.push_back(n);
    for (std::size_t k = 0; k < n; ++k) {
      l.atom.push_back(i);
      l.slot.push_back(k);
    }
    l.n_orb += n;
  }
  return l;
}

nlohmann::json layout_to_json(const BlockLayout& l) {
  return {{"n_orb", l.n_orb}, {"offset", l.offset}, {"count", l.count}};
}

BlockLayout layout_from_json(const nlohmann::json& j) {
  try {
    BlockLayout l;
    l.offset = j.at("offset").get<std::vector<std::size_t>>();
    l.count = j.at("count").get<std::vector<std::size_t>>();
    if (l.offset.size() != l.count.size()) throw Error(ErrorCode::CorruptFile, "layout arrays");
    for (std::size_t i = 0; i < l.count.size(); ++i) {
      if (l.offset[i] != l.n_orb) throw Error(ErrorCode::CorruptFile, "layout offsets");
      for (std::size_t k = 0; k < l.count[i]; ++k) {
        l.atom.push_back(i);
        l.slot.push_back(k);
      }
      l.n_orb += l.count[i];
    }
    if (l.n_orb != j.at("n_orb").get<std::size_t>()) {
      throw Error(ErrorCode::CorruptFile, "layout size");
    }
    return l;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("layout json: ") + e.what());
  }
}

}  // namespace geoham

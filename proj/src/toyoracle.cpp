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

#include "geoham/toyoracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <zlib.h>

#include "geoham/error.hpp"
#include "geoham/parallel.hpp"
#include "geoham/physics.hpp"

namespace geoham {

namespace {

std::atomic<std::uint64_t> g_embed_calls{0};
std::atomic<std::uint64_t> g_coordinate_reads{0};

constexpr int kDescentSteps = 600;
constexpr double kStep = 0.05;
constexpr double kMaxMove = 0.3;

Coordinates relax(const ExpandedMolecule& mol, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(mol.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = kBondTarget * std::cbrt(static_cast<double>(n));
  Coordinates x(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVector3d d(gauss(rng), gauss(rng), gauss(rng));
    d /= std::max(d.norm(), 1e-12);
    x.row(i) = d * radius * std::cbrt(unit(rng));
  }
  std::vector<std::uint8_t> bonded(static_cast<std::size_t>(n * n), 0);
  for (const auto& [a, b] : mol.bonds) {
    bonded[a * static_cast<std::size_t>(n) + b] = bonded[b * static_cast<std::size_t>(n) + a] = 1;
  }
  Coordinates grad(n, 3);
  for (int step = 0; step < kDescentSteps; ++step) {
    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        Eigen::RowVector3d d = x.row(i) - x.row(j);
        double r = d.norm();
        if (r < 1e-9) {
          d = Eigen::RowVector3d(1e-3 * (i - j), 1e-3, 0.0);
          r = d.norm();
        }
        double coef = 0.0;  // dE/dr
        if (bonded[static_cast<std::size_t>(i * n + j)]) {
          coef = 2.0 * (r - kBondTarget);
        } else if (r < kRepulsionFloor) {
          coef = -2.0 * (kRepulsionFloor - r);
        }
        if (coef == 0.0) continue;
        const Eigen::RowVector3d g = coef * d / r;
        grad.row(i) += g;
        grad.row(j) -= g;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::RowVector3d move = -kStep * grad.row(i);
      const double len = move.norm();
      if (len > kMaxMove) move *= kMaxMove / len;
      x.row(i) += move;
    }
  }
  // center for readability; the energy is translation invariant
  const Eigen::RowVector3d c = x.colwise().mean();
  x.rowwise() -= c;
  return x;
}

double min_separation(const Coordinates& x) {
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) m = std::min(m, (x.row(i) - x.row(j)).norm());
  }
  return m;
}

nlohmann::json upper_to_json(const Matrix& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.rows() * (m.rows() + 1) / 2));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = r; c < m.cols(); ++c) v.push_back(m(r, c));
  }
  return v;
}

Matrix upper_from_json(const nlohmann::json& j, std::size_t n) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != n * (n + 1) / 2) throw Error(ErrorCode::CorruptFile, "triangle length");
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = r; c < m.cols(); ++c) m(r, c) = m(c, r) = v[k++];
  }
  return m;
}

bool has_s_or_p(const std::vector<Element>& el) {
  return std::any_of(el.begin(), el.end(),
                     [](Element e) { return e == Element::S || e == Element::P; });
}

}  // namespace

Coordinates embed_3d(const ExpandedMolecule& mol, std::uint64_t seed) {
  g_embed_calls.fetch_add(1, std::memory_order_relaxed);
  if (mol.size() == 0) throw Error(ErrorCode::EmbedFailure, "no atoms");
  for (int attempt = 0; attempt <= kEmbedReseeds; ++attempt) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt) * 0x9E3779B97F4A7C15ULL;
    Coordinates x = relax(mol, s);
    if (x.allFinite() && (mol.size() < 2 || min_separation(x) >= kMinSeparation)) return x;
  }
  throw Error(ErrorCode::EmbedFailure,
              "minimum separation not reached after " + std::to_string(kEmbedReseeds) + " reseeds");
}

std::uint64_t embed_call_count() { return g_embed_calls.load(); }

int toy_electron_count(const MolGraph& mol) {
  int pairs = static_cast<int>(mol.bonds.size() + mol.total_hydrogens());
  int aromatic = 0;
  for (const Bond& b : mol.bonds) {
    if (b.order == BondOrder::Aromatic) {
      ++aromatic;
    } else {
      pairs += static_cast<int>(b.order) - 1;
    }
  }
  return 2 * (pairs + aromatic / 2);
}

HuckelLabels huckel_labels(std::span<const Element> elements, const Coordinates& coords,
                           const OrbitalBasis& basis) {
  HuckelLabels out;
  out.s = toy_overlap(elements, coords, basis);
  std::vector<double> onsite;
  for (Element e : elements) {
    for (const OrbitalSpec& o : basis.orbitals(e)) onsite.push_back(o.onsite);
  }
  const auto n = out.s.rows();
  out.h.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    out.h(r, r) = onsite[static_cast<std::size_t>(r)];
    for (Eigen::Index c = r + 1; c < n; ++c) {
      out.h(r, c) = out.h(c, r) = kWolfsbergHelmholz * out.s(r, c) * 0.5 *
                                  (onsite[static_cast<std::size_t>(r)] +
                                   onsite[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

std::string_view to_string(SplitMode m) {
  switch (m) {
    case SplitMode::RandomId: return "random-id";
    case SplitMode::SizeOod: return "size-ood";
    case SplitMode::ElementOod: return "element-ood";
  }
  return "?";
}

SplitMode split_mode_from_string(std::string_view s) {
  for (SplitMode m : {SplitMode::RandomId, SplitMode::SizeOod, SplitMode::ElementOod}) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown split mode '" + std::string(s) + "'");
}

const Coordinates& DatasetRecord::coords() const {
  g_coordinate_reads.fetch_add(1, std::memory_order_relaxed);
  return coords_;
}

std::uint64_t coordinate_read_count() { return g_coordinate_reads.load(); }

nlohmann::json DatasetRecord::to_json() const {
  nlohmann::ordered_json j;
  std::vector<std::string> el;
  for (Element e : elements) el.emplace_back(symbol(e));
  std::vector<std::array<double, 3>> xyz;
  for (Eigen::Index i = 0; i < coords_.rows(); ++i) {
    xyz.push_back({coords_(i, 0), coords_(i, 1), coords_(i, 2)});
  }
  j["index"] = index;
  j["smiles"] = smiles;
  j["split"] = split;
  j["elements"] = el;
  j["coords"] = xyz;
  j["n_orb"] = h.rows();
  j["h_upper"] = upper_to_json(h);
  j["s_upper"] = upper_to_json(s);
  j["electrons"] = electrons;
  j["gap_ev"] = gap_ev;
  return nlohmann::json(j);
}

DatasetRecord DatasetRecord::from_json(const nlohmann::json& j) {
  try {
    DatasetRecord r;
    r.index = j.at("index").get<std::size_t>();
    r.smiles = j.at("smiles").get<std::string>();
    r.split = j.at("split").get<std::string>();
    for (const auto& s : j.at("elements")) r.elements.push_back(element_from_symbol(s.get<std::string>()));
    const auto xyz = j.at("coords").get<std::vector<std::array<double, 3>>>();
    if (xyz.size() != r.elements.size()) throw Error(ErrorCode::CorruptFile, "coords length");
    Coordinates c(static_cast<Eigen::Index>(xyz.size()), 3);
    for (std::size_t i = 0; i < xyz.size(); ++i) {
      for (int k = 0; k < 3; ++k) c(static_cast<Eigen::Index>(i), k) = xyz[i][static_cast<std::size_t>(k)];
    }
    r.coords_ = std::move(c);
    const auto n = j.at("n_orb").get<std::size_t>();
    r.h = upper_from_json(j.at("h_upper"), n);
    r.s = upper_from_json(j.at("s_upper"), n);
    r.electrons = j.at("electrons").get<int>();
    r.gap_ev = j.at("gap_ev").get<double>();
    if (layout(r.elements).n_orb != n) throw Error(ErrorCode::CorruptFile, "orbital count");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("dataset record: ") + e.what());
  }
}

DatasetRecord make_record(std::size_t index, const std::string& smiles, std::uint64_t seed) {
  const MolGraph mol = parse(smiles);
  const ExpandedMolecule ex = expand_hydrogens(mol);
  DatasetRecord r;
  r.index = index;
  r.smiles = smiles;
  r.elements = ex.elements;
  r.set_coords(embed_3d(ex, seed ^ (0x51ED270B27A5A5A5ULL * (index + 1))));
  const HuckelLabels lab = huckel_labels(r.elements, r.coords(), OrbitalBasis::toy());
  r.h = lab.h;
  r.s = lab.s;
  r.electrons = toy_electron_count(mol);
  r.gap_ev = solve_gev(r.h, r.s, r.electrons).gap_ev;
  return r;
}

std::vector<std::string> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read corpus " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

std::string corpus_hash(const std::vector<std::string>& corpus) {
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const std::string& s : corpus) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size()));
    crc = crc32(crc, reinterpret_cast<const Bytef*>("\n"), 1);
  }
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << crc;
  return os.str();
}

DatasetSummary gen_dataset(const std::vector<std::string>& corpus, const SplitConfig& split,
                           const std::filesystem::path& out_dir, int jobs) {
  // choose the subset, then keep corpus order
  std::vector<std::size_t> chosen(corpus.size());
  std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  std::mt19937_64 rng(split.seed);
  if (split.max_molecules > 0 && split.max_molecules < chosen.size()) {
    std::shuffle(chosen.begin(), chosen.end(), rng);
    chosen.resize(split.max_molecules);
    std::sort(chosen.begin(), chosen.end());
  }

  std::vector<DatasetRecord> records(chosen.size());
  std::vector<std::string> errors(chosen.size());
  parallel_for(chosen.size(), jobs, [&](std::size_t k) {
    try {
      records[k] = make_record(chosen[k], corpus[chosen[k]], split.seed);
    } catch (const Error& e) {
      errors[k] = e.what();
    }
  });

  DatasetSummary summary;
  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
  std::vector<DatasetRecord*> kept;
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    if (!errors[k].empty()) {
      skipped.push_back({{"index", chosen[k]}, {"smiles", corpus[chosen[k]]}, {"error", errors[k]}});
      ++summary.skipped;
      continue;
    }
    DatasetRecord& r = records[k];
    const std::size_t atoms = r.elements.size();
    switch (split.mode) {
      case SplitMode::RandomId:
        break;  // assigned below
      case SplitMode::SizeOod:
        r.split = atoms < split.size_train_below  ? "train"
                  : atoms > split.size_test_above ? "test"
                                                  : "";
        break;
      case SplitMode::ElementOod:
        r.split = has_s_or_p(r.elements) ? "test" : "train";
        break;
    }
    kept.push_back(&r);
  }
  if (split.mode == SplitMode::RandomId) {
    std::vector<std::size_t> order(kept.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(split.test_fraction * static_cast<double>(kept.size())));
    for (std::size_t k = 0; k < order.size(); ++k) kept[order[k]]->split = k < n_test ? "test" : "train";
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "records.jsonl", std::ios::binary);
  std::size_t unused = 0;
  for (const DatasetRecord* r : kept) {
    if (r->split == "train") {
      ++summary.train;
    } else if (r->split == "test") {
      ++summary.test;
    } else {
      ++unused;
      continue;
    }
    out << r->to_json().dump() << "\n";
  }
  if (!out) throw Error(ErrorCode::Io, "cannot write records");
  if (summary.train == 0 || summary.test == 0) {
    throw Error(ErrorCode::EmptySplit, "train " + std::to_string(summary.train) + ", test " +
                                           std::to_string(summary.test));
  }

  nlohmann::ordered_json manifest;
  manifest["format"] = "geoham-dataset-1";
  manifest["seed"] = split.seed;
  manifest["split"] = std::string(to_string(split.mode));
  manifest["test_fraction"] = split.test_fraction;
  manifest["size_train_below"] = split.size_train_below;
  manifest["size_test_above"] = split.size_test_above;
  manifest["max_molecules"] = split.max_molecules;
  manifest["corpus_size"] = corpus.size();
  manifest["corpus_crc32"] = corpus_hash(corpus);
  manifest["counts"] = {{"train", summary.train}, {"test", summary.test}, {"unused", unused},
                        {"skipped", summary.skipped}};
  manifest["skipped"] = skipped;
  std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
  mf << manifest.dump(2) << "\n";
  if (!mf) throw Error(ErrorCode::Io, "cannot write manifest");
  return summary;
}

std::vector<DatasetRecord> load_records(const std::filesystem::path& dataset_dir) {
  std::ifstream in(dataset_dir / "records.jsonl");
  if (!in) throw Error(ErrorCode::Io, "cannot read " + (dataset_dir / "records.jsonl").string());
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(DatasetRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::CorruptFile, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace geoham

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

// Reference labels standing in for first-principles data: a spring-model 3D
// embedding, extended-Hueckel (H, S) pairs and JSON-Lines datasets with
// in-distribution and out-of-distribution splits.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geoham/basis.hpp"
#include "geoham/geometry.hpp"
#include "geoham/smiles.hpp"

#include "json.hpp"

namespace geoham {

inline constexpr double kBondTarget = 1.5;        // Angstrom
inline constexpr double kRepulsionFloor = 2.2;    // Angstrom
inline constexpr double kMinSeparation = 0.7;     // Angstrom
inline constexpr int kEmbedReseeds = 3;
inline constexpr double kWolfsbergHelmholz = 1.75;

// Deterministic given (molecule, seed). Throws EmbedFailure.
Coordinates embed_3d(const ExpandedMolecule& mol, std::uint64_t seed);
// Number of embed_3d calls made by this process.
std::uint64_t embed_call_count();

// Toy closed-shell electron count: two per sigma bond (X-H included), two per
// extra bond order on localized bonds and two per pair of aromatic bonds.
int toy_electron_count(const MolGraph& mol);

struct HuckelLabels {
  Matrix h;
  Matrix s;
};
HuckelLabels huckel_labels(std::span<const Element> elements, const Coordinates& coords,
                           const OrbitalBasis& basis = OrbitalBasis::toy());

enum class SplitMode { RandomId, SizeOod, ElementOod };
std::string_view to_string(SplitMode m);
SplitMode split_mode_from_string(std::string_view s);  // throws InvalidArgument

struct SplitConfig {
  SplitMode mode = SplitMode::RandomId;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;       // random-id
  std::size_t size_train_below = 20;  // size-ood: train atoms < this
  std::size_t size_test_above = 23;   // size-ood: test atoms > this
  std::size_t max_molecules = 0;      // 0: whole corpus
};

class DatasetRecord {
 public:
  std::size_t index = 0;  // corpus line
  std::string smiles;
  std::vector<Element> elements;
  Matrix h;
  Matrix s;
  int electrons = 0;
  double gap_ev = 0.0;
  std::string split;

  // Each call is counted; see coordinate_read_count().
  const Coordinates& coords() const;
  void set_coords(Coordinates c) { coords_ = std::move(c); }

  nlohmann::json to_json() const;
  static DatasetRecord from_json(const nlohmann::json& j);  // throws CorruptFile

 private:
  Coordinates coords_;
};

std::uint64_t coordinate_read_count();

// Builds one record (split left empty). Throws on parse or oracle errors.
DatasetRecord make_record(std::size_t index, const std::string& smiles, std::uint64_t seed);

struct DatasetSummary {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t skipped = 0;
};

std::vector<std::string> read_corpus(const std::filesystem::path& path);
std::string corpus_hash(const std::vector<std::string>& corpus);

// Writes records.jsonl and manifest.json into `out_dir`. Throws EmptySplit.
DatasetSummary gen_dataset(const std::vector<std::string>& corpus, const SplitConfig& split,
                           const std::filesystem::path& out_dir, int jobs = 1);

std::vector<DatasetRecord> load_records(const std::filesystem::path& dataset_dir);

}  // namespace geoham

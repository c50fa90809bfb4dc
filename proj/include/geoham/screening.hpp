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

// Gap-threshold screening: confusion counts per threshold and wall-clock
// comparison of the SMILES-only, geometry and reference pipelines.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "geoham/training.hpp"
#include "json.hpp"

namespace geoham {

// 0.26 to 0.36 eV in 0.02 eV steps.
std::vector<double> default_thresholds();

struct ScreenRow {
  double threshold = 0.0;  // eV
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  double accuracy = 0.0;
  double recall = 0.0;     // 1 when there are no true positives
  double precision = 0.0;  // 1 when nothing is predicted positive
};

// Positive means gap > threshold, decided separately for predictions and
// truth. Throws LengthMismatch, EmptyThresholds, EmptyBatch.
std::vector<ScreenRow> classify_by_gap(std::span<const double> gaps_pred,
                                       std::span<const double> gaps_true,
                                       std::span<const double> thresholds);

struct PathTiming {
  std::vector<double> samples;  // seconds per 1000 molecules, one per repeat
  double median = 0.0;
  std::uint64_t embed_calls = 0;  // over all repeats
};

struct TimingReport {
  int repeat = 0;
  std::size_t molecules = 0;
  PathTiming smiles;     // tokens -> H -> spectrum with the stored overlap
  PathTiming geometry;   // embed_3d -> fused H -> overlap -> spectrum
  PathTiming reference;  // embed_3d -> oracle (H, S) -> spectrum

  nlohmann::ordered_json to_json() const;
};

// Throws InvalidArgument when repeat < 1 and std::logic_error if the
// SMILES-only path ever reaches embed_3d.
TimingReport bench_pipelines(const Model& model, const std::vector<PreparedMolecule>& data,
                             int repeat, int jobs = 1);

struct ScreenReport {
  std::vector<ScreenRow> rows;
  nlohmann::ordered_json config;
  bool has_timing = false;
  TimingReport timing;

  nlohmann::ordered_json to_json() const;
  void write_csv(const std::filesystem::path& path) const;
};

}  // namespace geoham

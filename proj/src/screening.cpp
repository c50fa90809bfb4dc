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

#include "geoham/screening.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "geoham/error.hpp"
#include "geoham/parallel.hpp"
#include "geoham/physics.hpp"

namespace geoham {

std::vector<double> default_thresholds() { return {0.26, 0.28, 0.30, 0.32, 0.34, 0.36}; }

std::vector<ScreenRow> classify_by_gap(std::span<const double> gaps_pred,
                                       std::span<const double> gaps_true,
                                       std::span<const double> thresholds) {
  if (gaps_pred.size() != gaps_true.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(gaps_pred.size()) + " predicted gaps, " +
                                               std::to_string(gaps_true.size()) + " reference gaps");
  }
  if (thresholds.empty()) throw Error(ErrorCode::EmptyThresholds, "no screening thresholds");
  if (gaps_pred.empty()) throw Error(ErrorCode::EmptyBatch, "no molecules to screen");
  std::vector<ScreenRow> rows;
  for (double th : thresholds) {
    ScreenRow r;
    r.threshold = th;
    for (std::size_t i = 0; i < gaps_pred.size(); ++i) {
      const bool p = gaps_pred[i] > th;
      const bool t = gaps_true[i] > th;
      if (p && t) ++r.tp;
      else if (p) ++r.fp;
      else if (t) ++r.fn;
      else ++r.tn;
    }
    const auto n = static_cast<double>(gaps_pred.size());
    r.accuracy = static_cast<double>(r.tp + r.tn) / n;
    r.recall = r.tp + r.fn == 0 ? 1.0 : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
    r.precision =
        r.tp + r.fp == 0 ? 1.0 : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
    rows.push_back(r);
  }
  return rows;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::ordered_json path_json(const PathTiming& p) {
  return {{"samples_s_per_1000", p.samples},
          {"median_s_per_1000", p.median},
          {"embed_calls", p.embed_calls}};
}

// Runs `fn` over every molecule `repeat` times; returns seconds per 1000.
template <class Fn>
PathTiming time_path(std::size_t n, int repeat, int jobs, Fn&& fn) {
  PathTiming out;
  const std::uint64_t calls = embed_call_count();
  for (int r = 0; r < repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(n, jobs, fn);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    out.samples.push_back(dt.count() * 1000.0 / static_cast<double>(n));
  }
  out.median = median(out.samples);
  out.embed_calls = embed_call_count() - calls;
  return out;
}

}  // namespace

TimingReport bench_pipelines(const Model& model, const std::vector<PreparedMolecule>& data,
                             int repeat, int jobs) {
  if (repeat < 1) throw Error(ErrorCode::InvalidArgument, "repeat must be >= 1");
  if (data.empty()) throw Error(ErrorCode::EmptyBatch, "nothing to benchmark");
  TimingReport t;
  t.repeat = repeat;
  t.molecules = data.size();
  std::vector<double> sink(data.size());

  t.smiles = time_path(data.size(), repeat, jobs, [&](std::size_t i) {
    const DatasetRecord& rec = *data[i].record;
    const auto [h, lay] = predict_from_smiles(model, rec.smiles);
    sink[i] = solve_gev(h, rec.s, rec.electrons).gap_ev;
  });
  if (t.smiles.embed_calls != 0) {
    throw std::logic_error("SMILES-only path called embed_3d");
  }
  t.geometry = time_path(data.size(), repeat, jobs, [&](std::size_t i) {
    const DatasetRecord& rec = *data[i].record;
    PreparedMolecule mol = prepare(rec);
    const ExpandedMolecule ex = expand_hydrogens(parse(mol.tokens));
    const Coordinates x = embed_3d(ex, rec.index);
    const Matrix h = predict_hamiltonian(model, mol, Fusion::Fused, &x);
    sink[i] = solve_gev(h, toy_overlap(ex.elements, x), rec.electrons).gap_ev;
  });
  t.reference = time_path(data.size(), repeat, jobs, [&](std::size_t i) {
    const DatasetRecord& rec = *data[i].record;
    const MolGraph mol = parse(rec.smiles);
    const ExpandedMolecule ex = expand_hydrogens(mol);
    const Coordinates x = embed_3d(ex, rec.index);
    const HuckelLabels labels = huckel_labels(ex.elements, x);
    sink[i] = solve_gev(labels.h, labels.s, toy_electron_count(mol)).gap_ev;
  });
  return t;
}

nlohmann::ordered_json TimingReport::to_json() const {
  return {{"repeat", repeat},
          {"molecules", molecules},
          {"paths",
           {{"smiles", path_json(smiles)},
            {"geometry", path_json(geometry)},
            {"reference", path_json(reference)}}}};
}

nlohmann::ordered_json ScreenReport::to_json() const {
  nlohmann::ordered_json out;
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const ScreenRow& r : rows) {
    table.push_back({{"threshold_ev", r.threshold},
                     {"tp", r.tp},
                     {"fp", r.fp},
                     {"tn", r.tn},
                     {"fn", r.fn},
                     {"accuracy", r.accuracy},
                     {"recall", r.recall},
                     {"precision", r.precision}});
  }
  out["rows"] = std::move(table);
  if (has_timing) out["timing"] = timing.to_json();
  out["config"] = config;
  return out;
}

void ScreenReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "threshold_ev,tp,fp,tn,fn,accuracy,recall,precision\n" << std::setprecision(17);
  for (const ScreenRow& r : rows) {
    out << r.threshold << ',' << r.tp << ',' << r.fp << ',' << r.tn << ',' << r.fn << ','
        << r.accuracy << ',' << r.recall << ',' << r.precision << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace geoham

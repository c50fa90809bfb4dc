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

// Model bundle, optimizer, pretraining and fine-tuning loops, evaluation and
// checkpoint files.

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "geoham/alignment.hpp"
#include "geoham/compensation.hpp"
#include "geoham/encoders.hpp"
#include "geoham/ham_head.hpp"
#include "geoham/physics.hpp"
#include "geoham/toyoracle.hpp"
#include "json.hpp"

namespace geoham {

struct ModelConfig {
  int width = 32;
  int token_layers = 2;
  int geo_rounds = 3;
  double cutoff = 5.0;
  int radial_bases = 16;
  int shears = 4;
  int rank = 16;
  int head_hidden = 32;
  std::uint64_t seed = 1;  // parameter initialisation

  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Every trainable module. Layers hold pointers into `params`, so a model is
// neither copyable nor movable.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }

  ParameterSet params;
  TokenEncoder tok;
  GeomEncoder geo;
  Disentangler dis;
  ParamGenerator gen;
  Aligner align;
  HamHead head;

 private:
  ModelConfig cfg_;
};

enum class Stage { Pretrain, Finetune };
enum class Fusion { TokenOnly, Fused };  // "1d" and "1d+3d"

std::string_view to_string(Stage s);
std::string_view to_string(Fusion f);
std::string_view to_string(ContrastiveForm f);

struct TrainConfig {
  Stage stage = Stage::Pretrain;
  int epochs = 10;
  std::size_t batch = 16;
  double lr = 1e-3;
  double lambda1 = 0.5;
  double lambda2 = 0.8;
  double keep_prob = 0.85;  // per fragment, fine-tuning
  std::uint64_t seed = 0;
  ContrastiveForm form = ContrastiveForm::LogSigmoid;
  Fusion fusion = Fusion::TokenOnly;
  bool compensation = true;  // false: t* = t and no discrepancy term
  int jobs = 1;

  void validate() const;  // throws InvalidArgument
  nlohmann::ordered_json to_json() const;
  // Missing keys keep their defaults; unknown keys throw InvalidArgument.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
  static TrainConfig from_json(const nlohmann::json& j);
};

// Parse products of one record that every pass reuses.
struct PreparedMolecule {
  const DatasetRecord* record = nullptr;
  std::vector<Token> tokens;
  AtomTokenMap map;
  std::vector<Fragment> fragments;
  AtomGroups groups;  // fragments over expanded atoms
  BlockLayout layout;
};

// Throws with the record index in the message; LengthMismatch when the
// SMILES does not reproduce the stored element list.
PreparedMolecule prepare(const DatasetRecord& record);
std::vector<PreparedMolecule> prepare_all(const std::vector<DatasetRecord>& records);

struct TraceRow {
  std::size_t step = 0;
  int epoch = 0;
  double first = 0.0;
  double second = 0.0;
  double total = 0.0;
};

struct LossTrace {
  std::array<std::string, 2> columns;  // names of first and second
  std::vector<TraceRow> rows;

  std::vector<double> epoch_means() const;
  void write_csv(const std::filesystem::path& path) const;
};

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Updates every parameter whose name starts with one of `prefixes`.
  void step(ParameterSet& ps, const std::vector<std::string>& prefixes);
  std::uint64_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

struct TrainResult {
  LossTrace trace;
  std::string rng_state;
  std::uint64_t optimizer_steps = 0;
};

// Alignment pretraining of the encoders, disentangler and generator. Reads
// coordinates.
TrainResult pretrain(Model& model, const std::vector<PreparedMolecule>& data,
                     const TrainConfig& cfg);

// Masked fine-tuning of the head and of the token encoder (1D) or the
// geometry encoder over a frozen token encoder (1D+3D). The 1D path never
// reads coordinates.
TrainResult finetune(Model& model, const std::vector<PreparedMolecule>& data,
                     const TrainConfig& cfg);

// Inference on one molecule; `coords` is required for Fusion::Fused.
Matrix predict_hamiltonian(const Model& model, const PreparedMolecule& mol, Fusion fusion,
                           const Coordinates* coords = nullptr);

// Token path from a bare SMILES string.
std::pair<Matrix, BlockLayout> predict_from_smiles(const Model& model, const std::string& smiles);

struct MoleculeEval {
  std::size_t index = 0;
  BlockMae mae;
  double mae_eps = 0.0;  // Hartree
  double psi = 0.0;
  double gap_pred_ev = 0.0;
  double gap_true_ev = 0.0;
};

struct EvalReport {
  std::size_t count = 0;
  double mae_diag = 0.0;  // means of per-molecule values, Hartree
  double mae_offdiag = 0.0;
  double mae_all = 0.0;
  double mae_eps = 0.0;
  double psi = 0.0;
  double gap_mae_ev = 0.0;
  std::vector<MoleculeEval> molecules;

  nlohmann::ordered_json to_json(bool per_molecule = false) const;
};

// Spectra use the record's overlap matrix and electron count.
EvalReport evaluate(const Model& model, const std::vector<PreparedMolecule>& data, Fusion fusion,
                    int jobs = 1);

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ModelConfig model;
  nlohmann::ordered_json train;  // TrainConfig snapshot, or null
  std::string rng_state;
  std::vector<std::pair<std::string, Matrix>> tensors;
};

// Magic, u32 version, u64 manifest length, manifest JSON, then the tensors as
// one little-endian f64 blob. The manifest lists names, shapes, offsets and
// the blob CRC32.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::ordered_json& train, const std::string& rng_state);
// Throws CorruptFile or VersionMismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Copies tensors into `model`; VersionMismatch names any shape difference.
void apply_checkpoint(const Checkpoint& ck, Model& model);
std::unique_ptr<Model> model_from_checkpoint(const Checkpoint& ck);

}  // namespace geoham

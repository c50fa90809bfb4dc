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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "geoham/error.hpp"
#include "geoham/training.hpp"
#include "support.hpp"

using namespace geoham;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSmiles = {"CCO",  "CC(=O)O", "c1ccccc1", "CCN",     "OCCO",
                                          "CC(C)=O", "C#CC",  "CNC=O",    "CCCl",    "COC",
                                          "CCOC(=O)C", "NCC(=O)O"};

std::vector<DatasetRecord> make_records(std::size_t n, std::uint64_t seed = 3) {
  std::vector<DatasetRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(make_record(i, kSmiles[i % kSmiles.size()], seed));
    out.back().split = "train";
  }
  return out;
}

ModelConfig small_model(int width = 8) {
  ModelConfig m;
  m.width = width;
  m.token_layers = 1;
  m.geo_rounds = 2;
  m.radial_bases = 6;
  m.shears = 2;
  m.rank = 4;
  m.head_hidden = 8;
  m.seed = 11;
  return m;
}

std::vector<Matrix> snapshot(const Model& m) {
  std::vector<Matrix> out;
  for (const Parameter& p : m.params.all()) out.push_back(p.value);
  return out;
}

bool same(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols() || a[i] != b[i]) return false;
  }
  return true;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("geoham_training_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TrainConfig finetune_config() {
  TrainConfig c;
  c.stage = Stage::Finetune;
  c.epochs = 1;
  c.batch = 4;
  return c;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters and losses unchanged") {
  const auto records = make_records(6);
  const auto data = prepare_all(records);
  Model model(small_model());
  const auto before = snapshot(model);

  TrainConfig pre;
  pre.lr = 0.0;
  pre.epochs = 3;
  pre.batch = 16;  // whole set in one batch
  const TrainResult r = pretrain(model, data, pre);
  CHECK(same(before, snapshot(model)));
  REQUIRE(r.trace.rows.size() == 3);
  for (const TraceRow& row : r.trace.rows) {
    CHECK(row.total == doctest::Approx(r.trace.rows[0].total).epsilon(1e-12));
  }

  TrainConfig ft = finetune_config();
  ft.lr = 0.0;
  ft.epochs = 3;
  ft.batch = 16;
  ft.keep_prob = 1.0;
  const TrainResult f = finetune(model, data, ft);
  CHECK(same(before, snapshot(model)));
  for (const TraceRow& row : f.trace.rows) {
    CHECK(row.total == doctest::Approx(f.trace.rows[0].total).epsilon(1e-12));
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto records = make_records(8);
  const auto data = prepare_all(records);
  auto run = [&](int jobs) {
    Model model(small_model());
    TrainConfig pre;
    pre.epochs = 1;
    pre.batch = 3;
    pre.seed = 5;
    const TrainResult a = pretrain(model, data, pre);
    TrainConfig ft = finetune_config();
    ft.seed = 5;
    ft.keep_prob = 0.5;
    ft.jobs = jobs;
    const TrainResult b = finetune(model, data, ft);
    std::vector<double> trace;
    for (const TraceRow& r : a.trace.rows) trace.push_back(r.total);
    for (const TraceRow& r : b.trace.rows) trace.push_back(r.total);
    return std::make_pair(trace, snapshot(model));
  };
  const auto first = run(1);
  const auto second = run(1);
  const auto threaded = run(3);
  CHECK(first.first == second.first);
  CHECK(same(first.second, second.second));
  // Per-molecule gradients are reduced in batch order whatever the thread count.
  CHECK(first.first == threaded.first);
  CHECK(same(first.second, threaded.second));
}

TEST_CASE("without the lambda1 term the V+ branch receives no update") {
  const auto records = make_records(6);
  const auto data = prepare_all(records);
  Model model(small_model());
  auto values = [&](const std::string& prefix) {
    std::vector<Matrix> out;
    for (const Parameter& p : model.params.all()) {
      if (p.name.rfind(prefix, 0) == 0) out.push_back(p.value);
    }
    return out;
  };
  const auto vplus = values("dis.vplus.");
  const auto vminus = values("dis.vminus.");
  REQUIRE(!vplus.empty());
  TrainConfig pre;
  pre.lambda1 = 0.0;
  pre.epochs = 2;
  pre.batch = 3;
  pre.lr = 1e-2;
  pretrain(model, data, pre);
  CHECK(same(vplus, values("dis.vplus.")));
  CHECK_FALSE(same(vminus, values("dis.vminus.")));

  // And with lambda1 > 0 it does move.
  Model other(small_model());
  const auto start = snapshot(other);
  pre.lambda1 = 0.5;
  pretrain(other, data, pre);
  std::size_t moved = 0;
  for (std::size_t i = 0; i < start.size(); ++i) {
    const Parameter& p = other.params.all()[i];
    if (p.name.rfind("dis.vplus.", 0) == 0 && p.value != start[i]) ++moved;
  }
  CHECK(moved > 0);
}

TEST_CASE("fine-tuning mask semantics") {
  const auto records = make_records(6);
  const auto data = prepare_all(records);

  SUBCASE("never masking makes both branches equal") {
    Model model(small_model());
    TrainConfig ft = finetune_config();
    ft.keep_prob = 1.0;
    const TrainResult r = finetune(model, data, ft);
    for (const TraceRow& row : r.trace.rows) {
      CHECK(row.first == row.second);
      CHECK(row.total == doctest::Approx(row.first).epsilon(1e-14));
    }
  }
  SUBCASE("lambda2 = 1 ignores the masked branch") {
    Model a(small_model());
    Model b(small_model());
    TrainConfig ft = finetune_config();
    ft.lambda2 = 1.0;
    ft.keep_prob = 1.0;
    finetune(a, data, ft);
    ft.keep_prob = 0.3;
    const TrainResult rb = finetune(b, data, ft);
    CHECK(same(snapshot(a), snapshot(b)));
    bool differs = false;
    for (const TraceRow& row : rb.trace.rows) differs |= row.first != row.second;
    CHECK(differs);
  }
}

TEST_CASE("the token path never reads coordinates") {
  const auto records = make_records(6);
  const auto data = prepare_all(records);
  Model model(small_model());
  const std::uint64_t before = coordinate_read_count();
  finetune(model, data, finetune_config());
  evaluate(model, data, Fusion::TokenOnly);
  CHECK(coordinate_read_count() == before);

  // The fused path does, and leaves the frozen token encoder alone.
  std::vector<Matrix> tok;
  for (const Parameter& p : model.params.all()) {
    if (p.name.rfind("tok.", 0) == 0) tok.push_back(p.value);
  }
  TrainConfig fused = finetune_config();
  fused.fusion = Fusion::Fused;
  finetune(model, data, fused);
  CHECK(coordinate_read_count() > before);
  std::vector<Matrix> tok_after;
  for (const Parameter& p : model.params.all()) {
    if (p.name.rfind("tok.", 0) == 0) tok_after.push_back(p.value);
  }
  CHECK(same(tok, tok_after));
}

TEST_CASE("end-to-end gradients through the model bundle") {
  const auto records = make_records(3);
  const auto data = prepare_all(records);
  Model model(small_model(6));
  const double pre = testing::parameter_grad_check(model.params, [&](Context& ctx) {
    std::vector<AlignmentSample> batch;
    for (const PreparedMolecule& mol : data) {
      AlignmentSample s;
      s.t = model.tok.encode(ctx, mol.tokens, mol.map);
      s.v = model.geo.encode(ctx, mol.record->elements, mol.record->coords());
      const Disentangled d = disentangle(ctx, model.dis, s.v, s.t);
      s.t_star = compensate(s.t, model.gen(ctx, d.minus));
      s.v_plus = d.plus;
      s.fragments = mol.groups;
      batch.push_back(std::move(s));
    }
    return pretrain_terms(ctx, model.align, batch, 0.5).total;
  }, 1e-5, 3);
  CHECK(pre < 1e-4);

  const PreparedMolecule& mol = data[1];
  const std::vector<std::uint8_t> keep(mol.fragments.size(), 0);
  const auto hidden = mask_tokens(mol.tokens, mol.fragments, keep);
  const double ft = testing::parameter_grad_check(model.params, [&](Context& ctx) {
    const Var full = model.head(ctx, model.tok.encode(ctx, mol.tokens, mol.map), mol.layout);
    const Var masked = model.head(ctx, model.tok.encode(ctx, hidden, mol.map), mol.layout);
    return finetune_loss(ctx.constant(mol.record->h), full, masked, 0.8);
  }, 1e-5, 3);
  CHECK(ft < 1e-4);
}

TEST_CASE("checkpoint round trip") {
  const fs::path dir = scratch("ckpt");
  Model model(small_model());
  const auto records = make_records(4);
  finetune(model, prepare_all(records), finetune_config());
  TrainConfig cfg = finetune_config();
  save_checkpoint(dir / "a.ckpt", model, cfg.to_json(), "state 1 2 3");

  const Checkpoint ck = load_checkpoint(dir / "a.ckpt");
  CHECK(ck.version == kCheckpointVersion);
  CHECK(ck.rng_state == "state 1 2 3");
  CHECK(TrainConfig::from_json(ck.train).to_json() == cfg.to_json());
  const auto loaded = model_from_checkpoint(ck);
  CHECK(same(snapshot(model), snapshot(*loaded)));
  save_checkpoint(dir / "b.ckpt", *loaded, ck.train, ck.rng_state);
  CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));

  SUBCASE("truncation") {
    const std::string bytes = slurp(dir / "a.ckpt");
    for (std::size_t cut : {std::size_t{5}, std::size_t{30}, bytes.size() / 2, bytes.size() - 1}) {
      std::ofstream(dir / "t.ckpt", std::ios::binary) << bytes.substr(0, cut);
      try {
        load_checkpoint(dir / "t.ckpt");
        FAIL("truncated checkpoint loaded");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CorruptFile);
      }
    }
  }
  SUBCASE("flipped blob byte") {
    std::string bytes = slurp(dir / "a.ckpt");
    bytes[bytes.size() - 3] ^= 0x10;
    std::ofstream(dir / "f.ckpt", std::ios::binary) << bytes;
    try {
      load_checkpoint(dir / "f.ckpt");
      FAIL("corrupted checkpoint loaded");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CorruptFile);
    }
  }
  SUBCASE("unknown format version") {
    std::string bytes = slurp(dir / "a.ckpt");
    bytes[8] = 9;
    std::ofstream(dir / "v.ckpt", std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint(dir / "v.ckpt"), Error);
    try {
      load_checkpoint(dir / "v.ckpt");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::VersionMismatch);
    }
  }
  SUBCASE("different width") {
    Model wide(small_model(12));
    try {
      apply_checkpoint(ck, wide);
      FAIL("cross-width load accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::VersionMismatch);
      const std::string what = e.what();
      CHECK(what.find("54x8") != std::string::npos);
      CHECK(what.find("54x12") != std::string::npos);
    }
  }
}

TEST_CASE("train config validation and JSON") {
  TrainConfig c;
  c.lambda2 = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.keep_prob = -0.1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.lambda1 = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);

  const TrainConfig parsed = TrainConfig::from_json(
      nlohmann::json{{"stage", "finetune"}, {"fusion", "1d+3d"}, {"lr", 0.01}, {"loss_form", "literal"}});
  CHECK(parsed.stage == Stage::Finetune);
  CHECK(parsed.fusion == Fusion::Fused);
  CHECK(parsed.lr == 0.01);
  CHECK(parsed.form == ContrastiveForm::Literal);
  CHECK(parsed.batch == 16);
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json{{"learning_rate", 0.1}}), Error);
  CHECK(TrainConfig::from_json(parsed.to_json()).to_json() == parsed.to_json());
}

TEST_CASE("record errors name the record") {
  DatasetRecord bad = make_record(17, "CCO", 1);
  bad.smiles = "CCN";
  try {
    prepare(bad);
    FAIL("mismatched record accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
    CHECK(std::string(e.what()).find("record 17") != std::string::npos);
  }
}

TEST_CASE("pretraining loss falls on a small toy set") {
  // 50 epochs over 200 molecules: epoch means must fall in at least 90% of
  // consecutive pairs.
  const auto corpus = read_corpus(fs::path(GEOHAM_DATA_DIR) / "corpus.smi");
  std::vector<DatasetRecord> records;
  for (std::size_t i = 0; records.size() < 200 && i < corpus.size(); ++i) {
    try {
      records.push_back(make_record(i, corpus[i], 21));
    } catch (const Error&) {
    }
  }
  REQUIRE(records.size() == 200);
  const auto data = prepare_all(records);
  Model model(ModelConfig{});
  TrainConfig pre;
  pre.epochs = 50;
  pre.seed = 2;
  const auto means = pretrain(model, data, pre).trace.epoch_means();
  std::size_t falling = 0;
  for (std::size_t e = 1; e < means.size(); ++e) falling += means[e] < means[e - 1] ? 1 : 0;
  MESSAGE("epoch means " << means.front() << " -> " << means.back() << ", falling " << falling
                         << "/" << means.size() - 1);
  CHECK(static_cast<double>(falling) >= 0.9 * static_cast<double>(means.size() - 1));
}

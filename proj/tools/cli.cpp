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

#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <zlib.h>

#include "CLI11.hpp"
#include "geoham/error.hpp"
#include "geoham/screening.hpp"
#include "geoham/training.hpp"
#include "json.hpp"

namespace geoham::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Raised for bad configuration; maps to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every overridable field. Keys in a JSON config file use the same names
// with underscores.
struct Overrides {
  std::optional<int> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr, lambda1, lambda2, keep_prob;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> loss_form, fusion;
  std::optional<bool> compensation;

  std::optional<int> width, token_layers, geo_rounds, radial_bases, shears, rank, head_hidden;
  std::optional<double> cutoff;
  std::optional<std::uint64_t> model_seed;

  std::optional<std::string> split;
  std::optional<double> test_fraction;
  std::optional<std::size_t> size_train_below, size_test_above, max_molecules;
};

struct Options {
  std::string config;
  Overrides o;
  int jobs = 1;
  std::string out;
  std::string corpus = std::string(GEOHAM_DATA_DIR) + "/corpus.smi";
  std::string data;
  std::string init;
  std::string checkpoint;
  std::string subset = "test";
  std::vector<std::string> smiles;
  std::vector<double> thresholds;
  int repeat = 3;
};

const std::vector<std::string> kTrainKeys = {"epochs",    "batch", "lr",        "lambda1",
                                             "lambda2",   "keep_prob", "seed",  "loss_form",
                                             "fusion",    "compensation"};
const std::vector<std::string> kModelKeys = {"width",        "token_layers", "geo_rounds",
                                             "cutoff",       "radial_bases", "shears",
                                             "rank",         "head_hidden",  "model_seed"};
const std::vector<std::string> kSplitKeys = {"split",           "seed",
                                             "test_fraction",   "size_train_below",
                                             "size_test_above", "max_molecules"};

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

json overrides_json(const Overrides& o) {
  json j = json::object();
  put(j, "epochs", o.epochs);
  put(j, "batch", o.batch);
  put(j, "lr", o.lr);
  put(j, "lambda1", o.lambda1);
  put(j, "lambda2", o.lambda2);
  put(j, "keep_prob", o.keep_prob);
  put(j, "seed", o.seed);
  put(j, "loss_form", o.loss_form);
  put(j, "fusion", o.fusion);
  put(j, "compensation", o.compensation);
  put(j, "width", o.width);
  put(j, "token_layers", o.token_layers);
  put(j, "geo_rounds", o.geo_rounds);
  put(j, "cutoff", o.cutoff);
  put(j, "radial_bases", o.radial_bases);
  put(j, "shears", o.shears);
  put(j, "rank", o.rank);
  put(j, "head_hidden", o.head_hidden);
  put(j, "model_seed", o.model_seed);
  put(j, "split", o.split);
  put(j, "test_fraction", o.test_fraction);
  put(j, "size_train_below", o.size_train_below);
  put(j, "size_test_above", o.size_test_above);
  put(j, "max_molecules", o.max_molecules);
  return j;
}

bool known_key(const std::string& k) {
  for (const auto* keys : {&kTrainKeys, &kModelKeys, &kSplitKeys}) {
    if (std::find(keys->begin(), keys->end(), k) != keys->end()) return true;
  }
  return false;
}

// Config file first, flags on top.
json resolve(const Options& opt) {
  json merged = json::object();
  if (!opt.config.empty()) {
    std::ifstream in(opt.config);
    if (!in) throw UsageError("cannot read config file " + opt.config);
    json file;
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config file " + opt.config + ": " + e.what());
    }
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [k, v] : file.items()) {
      if (!known_key(k)) throw UsageError("unknown config key '" + k + "'");
      merged[k] = v;
    }
  }
  const json flags = overrides_json(opt.o);
  for (const auto& [k, v] : flags.items()) merged[k] = v;
  return merged;
}

json pick(const json& all, const std::vector<std::string>& keys) {
  json out = json::object();
  for (const std::string& k : keys) {
    if (all.contains(k)) out[k] = all[k];
  }
  return out;
}

TrainConfig train_config(const json& all, Stage stage, int jobs) {
  TrainConfig c;
  c.stage = stage;
  try {
    c = TrainConfig::from_json(pick(all, kTrainKeys), c);
    c.jobs = jobs;
    c.validate();
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }
  return c;
}

ModelConfig model_config(const json& all) {
  ModelConfig m;
  try {
    if (all.contains("width")) m.width = all["width"].get<int>();
    if (all.contains("token_layers")) m.token_layers = all["token_layers"].get<int>();
    if (all.contains("geo_rounds")) m.geo_rounds = all["geo_rounds"].get<int>();
    if (all.contains("cutoff")) m.cutoff = all["cutoff"].get<double>();
    if (all.contains("radial_bases")) m.radial_bases = all["radial_bases"].get<int>();
    if (all.contains("shears")) m.shears = all["shears"].get<int>();
    if (all.contains("rank")) m.rank = all["rank"].get<int>();
    if (all.contains("head_hidden")) m.head_hidden = all["head_hidden"].get<int>();
    if (all.contains("model_seed")) m.seed = all["model_seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("model config: ") + e.what());
  }
  return m;
}

SplitConfig split_config(const json& all) {
  SplitConfig s;
  try {
    if (all.contains("split")) s.mode = split_mode_from_string(all["split"].get<std::string>());
    if (all.contains("seed")) s.seed = all["seed"].get<std::uint64_t>();
    if (all.contains("test_fraction")) s.test_fraction = all["test_fraction"].get<double>();
    if (all.contains("size_train_below")) {
      s.size_train_below = all["size_train_below"].get<std::size_t>();
    }
    if (all.contains("size_test_above")) {
      s.size_test_above = all["size_test_above"].get<std::size_t>();
    }
    if (all.contains("max_molecules")) s.max_molecules = all["max_molecules"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("split config: ") + e.what());
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }
  if (!(s.test_fraction > 0.0 && s.test_fraction < 1.0)) {
    throw UsageError("test_fraction must lie in (0, 1)");
  }
  return s;
}

json split_json(const SplitConfig& s) {
  return {{"split", to_string(s.mode)},
          {"seed", s.seed},
          {"test_fraction", s.test_fraction},
          {"size_train_below", s.size_train_below},
          {"size_test_above", s.size_test_above},
          {"max_molecules", s.max_molecules}};
}

std::string file_crc(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  uLong crc = crc32(0L, Z_NULL, 0);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(in.gcount()));
  }
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << crc;
  return os.str();
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + p.string());
}

void prepare_out(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out + ": " + ec.message());
}

// The run manifest: everything needed to repeat the run.
void write_manifest(const Options& opt, const std::string& command, const json& config,
                    const std::vector<fs::path>& inputs) {
  json in = json::object();
  for (const fs::path& p : inputs) in[p.string()] = file_crc(p);
  json paths = json::object();
  auto add = [&](const char* k, const std::string& v) {
    if (!v.empty()) paths[k] = v;
  };
  add("out", opt.out);
  add("data", opt.data);
  add("init", opt.init);
  add("checkpoint", opt.checkpoint);
  if (command == "gen-data") add("corpus", opt.corpus);
  json m = {{"tool", "geoham"},
            {"version", GEOHAM_GIT_DESCRIBE},
            {"command", command},
            {"config", config},
            {"jobs", opt.jobs},
            {"paths", paths},
            {"input_crc32", in}};
  write_json(fs::path(opt.out) / "run.json", m);
}

std::vector<DatasetRecord> load_subset(const std::string& dir, const std::string& subset) {
  if (subset != "train" && subset != "test" && subset != "all") {
    throw UsageError("subset must be train, test or all");
  }
  std::vector<DatasetRecord> all = load_records(dir);
  if (subset == "all") return all;
  std::vector<DatasetRecord> out;
  for (DatasetRecord& r : all) {
    if (r.split == subset) out.push_back(std::move(r));
  }
  if (out.empty()) throw Error(ErrorCode::EmptySplit, "no '" + subset + "' records in " + dir);
  return out;
}

void log_trace(const char* what, const LossTrace& trace) {
  const std::vector<double> means = trace.epoch_means();
  for (std::size_t e = 0; e < means.size(); ++e) {
    std::cerr << what << " epoch " << e + 1 << "/" << means.size() << " loss " << means[e] << '\n';
  }
}

std::unique_ptr<Model> load_model(const std::string& path) {
  return model_from_checkpoint(load_checkpoint(path));
}

Fusion fusion_of(const json& all) {
  if (!all.contains("fusion")) return Fusion::TokenOnly;
  const std::string f = all["fusion"].get<std::string>();
  if (f == "1d") return Fusion::TokenOnly;
  if (f == "1d+3d") return Fusion::Fused;
  throw UsageError("fusion must be 1d or 1d+3d");
}

int cmd_gen_data(const Options& opt) {
  const json all = resolve(opt);
  const SplitConfig split = split_config(all);
  const json config = split_json(split);
  prepare_out(opt.out);
  write_manifest(opt, "gen-data", config, {opt.corpus});
  const DatasetSummary s = gen_dataset(read_corpus(opt.corpus), split, opt.out, opt.jobs);
  std::cout << "train " << s.train << " test " << s.test << " skipped " << s.skipped << '\n';
  return kOk;
}

int cmd_pretrain(const Options& opt) {
  const json all = resolve(opt);
  const TrainConfig cfg = train_config(all, Stage::Pretrain, opt.jobs);
  std::unique_ptr<Model> model =
      opt.init.empty() ? std::make_unique<Model>(model_config(all)) : load_model(opt.init);
  json config = {{"train", cfg.to_json()}, {"model", model->config().to_json()}};
  prepare_out(opt.out);
  std::vector<fs::path> inputs = {fs::path(opt.data) / "records.jsonl"};
  if (!opt.init.empty()) inputs.emplace_back(opt.init);
  write_manifest(opt, "pretrain", config, inputs);

  const auto records = load_subset(opt.data, "train");
  const auto data = prepare_all(records);
  const TrainResult r = pretrain(*model, data, cfg);
  log_trace("pretrain", r.trace);
  r.trace.write_csv(fs::path(opt.out) / "trace.csv");
  save_checkpoint(fs::path(opt.out) / "model.ckpt", *model, cfg.to_json(), r.rng_state);
  return kOk;
}

int cmd_finetune(const Options& opt) {
  const json all = resolve(opt);
  const TrainConfig cfg = train_config(all, Stage::Finetune, opt.jobs);
  std::unique_ptr<Model> model =
      opt.init.empty() ? std::make_unique<Model>(model_config(all)) : load_model(opt.init);
  json config = {{"train", cfg.to_json()}, {"model", model->config().to_json()}};
  prepare_out(opt.out);
  std::vector<fs::path> inputs = {fs::path(opt.data) / "records.jsonl"};
  if (!opt.init.empty()) inputs.emplace_back(opt.init);
  write_manifest(opt, "finetune", config, inputs);

  const auto records = load_subset(opt.data, "train");
  const auto data = prepare_all(records);
  const TrainResult r = finetune(*model, data, cfg);
  log_trace("finetune", r.trace);
  r.trace.write_csv(fs::path(opt.out) / "trace.csv");
  save_checkpoint(fs::path(opt.out) / "model.ckpt", *model, cfg.to_json(), r.rng_state);
  return kOk;
}

int cmd_predict(const Options& opt) {
  if (opt.smiles.empty()) throw UsageError("predict needs at least one --smiles");
  prepare_out(opt.out);
  write_manifest(opt, "predict", {{"smiles", opt.smiles}}, {opt.checkpoint});
  const auto model = load_model(opt.checkpoint);
  json rows = json::array();
  for (std::size_t k = 0; k < opt.smiles.size(); ++k) {
    std::pair<Matrix, BlockLayout> pred;
    try {
      pred = predict_from_smiles(*model, opt.smiles[k]);
    } catch (const Error& e) {
      throw Error(e.code(), "input " + std::to_string(k) + " (" + opt.smiles[k] + "): " + e.detail());
    }
    const std::string name = "pred_" + std::to_string(k) + ".ham";
    write_hamiltonian(fs::path(opt.out) / name, pred.first, pred.second);
    rows.push_back({{"smiles", opt.smiles[k]}, {"n_orb", pred.second.n_orb}, {"file", name}});
  }
  write_json(fs::path(opt.out) / "predictions.json", rows);
  std::cout << "wrote " << rows.size() << " prediction(s)\n";
  return kOk;
}

int cmd_eval(const Options& opt) {
  const json all = resolve(opt);
  const Fusion fusion = fusion_of(all);
  prepare_out(opt.out);
  write_manifest(opt, "eval", {{"fusion", to_string(fusion)}, {"subset", opt.subset}},
                 {opt.checkpoint, fs::path(opt.data) / "records.jsonl"});
  const auto model = load_model(opt.checkpoint);
  const auto records = load_subset(opt.data, opt.subset);
  const EvalReport report = evaluate(*model, prepare_all(records), fusion, opt.jobs);
  write_json(fs::path(opt.out) / "metrics.json", report.to_json(false));
  write_json(fs::path(opt.out) / "molecules.json", report.to_json(true)["molecules"]);
  std::cout << report.to_json(false).dump() << '\n';
  return kOk;
}

int cmd_screen(const Options& opt) {
  const std::vector<double> thresholds =
      opt.thresholds.empty() ? default_thresholds() : opt.thresholds;
  prepare_out(opt.out);
  json config = {{"subset", opt.subset}, {"thresholds_ev", thresholds}, {"gap_source", "1d"}};
  write_manifest(opt, "screen", config, {opt.checkpoint, fs::path(opt.data) / "records.jsonl"});
  const auto model = load_model(opt.checkpoint);
  const auto records = load_subset(opt.data, opt.subset);
  const EvalReport ev = evaluate(*model, prepare_all(records), Fusion::TokenOnly, opt.jobs);
  std::vector<double> pred, truth;
  for (const MoleculeEval& m : ev.molecules) {
    pred.push_back(m.gap_pred_ev);
    truth.push_back(m.gap_true_ev);
  }
  ScreenReport report;
  report.rows = classify_by_gap(pred, truth, thresholds);
  report.config = config;
  write_json(fs::path(opt.out) / "screen.json", report.to_json());
  report.write_csv(fs::path(opt.out) / "screen.csv");
  for (const ScreenRow& r : report.rows) {
    std::cout << std::fixed << std::setprecision(2) << r.threshold << " eV  acc "
              << std::setprecision(3) << r.accuracy << "  recall " << r.recall << "  precision "
              << r.precision << '\n';
  }
  return kOk;
}

int cmd_bench(const Options& opt) {
  if (opt.repeat < 1) throw UsageError("repeat must be >= 1");
  prepare_out(opt.out);
  write_manifest(opt, "bench", {{"subset", opt.subset}, {"repeat", opt.repeat}},
                 {opt.checkpoint, fs::path(opt.data) / "records.jsonl"});
  const auto model = load_model(opt.checkpoint);
  const auto records = load_subset(opt.data, opt.subset);
  const TimingReport t = bench_pipelines(*model, prepare_all(records), opt.repeat, opt.jobs);
  write_json(fs::path(opt.out) / "timing.json", t.to_json());
  std::cout << "s per 1000 molecules: smiles " << t.smiles.median << "  geometry "
            << t.geometry.median << "  reference " << t.reference.median << '\n';
  return kOk;
}

void add_train_flags(CLI::App* c, Overrides& o) {
  c->add_option("--epochs", o.epochs);
  c->add_option("--batch", o.batch);
  c->add_option("--lr", o.lr);
  c->add_option("--lambda1", o.lambda1);
  c->add_option("--lambda2", o.lambda2);
  c->add_option("--keep-prob", o.keep_prob, "probability that a fragment stays unmasked");
  c->add_option("--seed", o.seed);
  c->add_option("--loss-form", o.loss_form, "log-sigmoid or literal");
  c->add_option("--fusion", o.fusion, "1d or 1d+3d");
  c->add_option("--compensation", o.compensation, "true or false");
}

void add_model_flags(CLI::App* c, Overrides& o) {
  c->add_option("--width", o.width);
  c->add_option("--token-layers", o.token_layers);
  c->add_option("--geo-rounds", o.geo_rounds);
  c->add_option("--cutoff", o.cutoff, "Angstrom");
  c->add_option("--radial-bases", o.radial_bases);
  c->add_option("--shears", o.shears);
  c->add_option("--rank", o.rank);
  c->add_option("--head-hidden", o.head_hidden);
  c->add_option("--model-seed", o.model_seed);
}

void add_split_flags(CLI::App* c, Overrides& o) {
  c->add_option("--split", o.split, "random-id, size-ood or element-ood");
  c->add_option("--seed", o.seed);
  c->add_option("--test-fraction", o.test_fraction);
  c->add_option("--size-train-below", o.size_train_below);
  c->add_option("--size-test-above", o.size_test_above);
  c->add_option("--max-molecules", o.max_molecules);
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"geoham: Hamiltonian prediction from SMILES"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GEOHAM_GIT_DESCRIBE);
  Options opt;

  auto common = [&](CLI::App* c, bool needs_out = true) {
    c->add_option("--config", opt.config, "JSON config; flags win")->check(CLI::ExistingFile);
    c->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    auto* out = c->add_option("--out", opt.out, "output directory");
    if (needs_out) out->required();
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a toy dataset from a corpus");
  common(gen);
  gen->add_option("--corpus", opt.corpus, "one SMILES per line")->check(CLI::ExistingFile);
  add_split_flags(gen, opt.o);

  CLI::App* pre = app.add_subcommand("pretrain", "alignment pretraining");
  common(pre);
  pre->add_option("--data", opt.data, "dataset directory")->required();
  pre->add_option("--init", opt.init, "start from this checkpoint");
  add_train_flags(pre, opt.o);
  add_model_flags(pre, opt.o);

  CLI::App* ft = app.add_subcommand("finetune", "masked fine-tuning");
  common(ft);
  ft->add_option("--data", opt.data, "dataset directory")->required();
  ft->add_option("--init", opt.init, "pretrained checkpoint");
  add_train_flags(ft, opt.o);
  add_model_flags(ft, opt.o);

  CLI::App* predict = app.add_subcommand("predict", "predict Hamiltonians for SMILES");
  common(predict);
  predict->add_option("--checkpoint", opt.checkpoint)->required()->check(CLI::ExistingFile);
  predict->add_option("--smiles", opt.smiles, "input molecule (repeatable)")->required();

  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  common(ev);
  ev->add_option("--checkpoint", opt.checkpoint)->required()->check(CLI::ExistingFile);
  ev->add_option("--data", opt.data, "dataset directory")->required();
  ev->add_option("--subset", opt.subset, "train, test or all");
  ev->add_option("--fusion", opt.o.fusion, "1d or 1d+3d");

  CLI::App* screen = app.add_subcommand("screen", "gap threshold screening");
  common(screen);
  screen->add_option("--checkpoint", opt.checkpoint)->required()->check(CLI::ExistingFile);
  screen->add_option("--data", opt.data, "dataset directory")->required();
  screen->add_option("--subset", opt.subset, "train, test or all");
  screen->add_option("--thresholds", opt.thresholds, "eV")->delimiter(',');

  CLI::App* bench = app.add_subcommand("bench", "pipeline wall-clock comparison");
  common(bench);
  bench->add_option("--checkpoint", opt.checkpoint)->required()->check(CLI::ExistingFile);
  bench->add_option("--data", opt.data, "dataset directory")->required();
  bench->add_option("--subset", opt.subset, "train, test or all");
  bench->add_option("--repeat", opt.repeat);

  CLI::App* self = app.add_subcommand("selftest", "run the invariant suite");
  self->add_option("--out", opt.out, "also write a run manifest here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return kOk;
    const auto used = app.get_subcommands();
    std::cerr << (used.empty() ? app.help() : used.front()->help());
    return kUsage;
  }

  try {
    if (*gen) return cmd_gen_data(opt);
    if (*pre) return cmd_pretrain(opt);
    if (*ft) return cmd_finetune(opt);
    if (*predict) return cmd_predict(opt);
    if (*ev) return cmd_eval(opt);
    if (*screen) return cmd_screen(opt);
    if (*bench) return cmd_bench(opt);
    if (*self) {
      if (!opt.out.empty()) {
        prepare_out(opt.out);
        write_manifest(opt, "selftest", json::object(), {});
      }
      return selftest();
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace geoham::cli

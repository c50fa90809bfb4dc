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

#include "geoham/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <zlib.h>

#include "geoham/error.hpp"
#include "geoham/parallel.hpp"

namespace geoham {

namespace {

Error with_record(const Error& e, std::size_t index) {
  return Error(e.code(), "record " + std::to_string(index) + ": " + e.detail());
}

std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << v;
  return os.str();
}

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
}

template <class T>
T get_le(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return static_cast<T>(v);
}

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

bool has_prefix(const std::string& name, const std::vector<std::string>& prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](const std::string& p) { return name.rfind(p, 0) == 0; });
}

// mean(|d| + d^2), the per-branch fine-tuning error.
double branch_error(const Matrix& target, const Matrix& pred) {
  const Matrix d = target - pred;
  return (d.cwiseAbs().array() + d.array().square()).mean();
}

constexpr char kMagic[8] = {'G', 'E', 'O', 'H', 'A', 'M', 'C', 'K'};

}  // namespace

nlohmann::ordered_json ModelConfig::to_json() const {
  return {{"width", width},           {"token_layers", token_layers}, {"geo_rounds", geo_rounds},
          {"cutoff", cutoff},         {"radial_bases", radial_bases}, {"shears", shears},
          {"rank", rank},             {"head_hidden", head_hidden},   {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.width = j.at("width").get<int>();
    c.token_layers = j.at("token_layers").get<int>();
    c.geo_rounds = j.at("geo_rounds").get<int>();
    c.cutoff = j.at("cutoff").get<double>();
    c.radial_bases = j.at("radial_bases").get<int>();
    c.shears = j.at("shears").get<int>();
    c.rank = j.at("rank").get<int>();
    c.head_hidden = j.at("head_hidden").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("model config: ") + e.what());
  }
  return c;
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg.width < 2 || cfg.token_layers < 0 || cfg.geo_rounds < 0 || cfg.radial_bases < 1 ||
      cfg.shears < 0 || cfg.rank < 1 || cfg.head_hidden < 1 || !(cfg.cutoff > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid model config");
  }
  std::mt19937_64 rng(cfg.seed);
  tok = TokenEncoder::create(params, {cfg.width, cfg.token_layers}, rng);
  geo = GeomEncoder::create(params, {cfg.width, cfg.geo_rounds, cfg.cutoff, cfg.radial_bases}, rng);
  dis = Disentangler::create(params, cfg.width, rng);
  gen = ParamGenerator::create(params, {cfg.width, cfg.shears}, rng);
  align = Aligner::create(params, cfg.width, rng);
  head = HamHead::create(params, {cfg.width, cfg.rank, cfg.head_hidden}, rng);
}

std::string_view to_string(Stage s) { return s == Stage::Pretrain ? "pretrain" : "finetune"; }
std::string_view to_string(Fusion f) { return f == Fusion::TokenOnly ? "1d" : "1d+3d"; }
std::string_view to_string(ContrastiveForm f) {
  return f == ContrastiveForm::LogSigmoid ? "log-sigmoid" : "literal";
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch < 1) fail("batch must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr must be finite and >= 0");
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) fail("lambda1 must be >= 0");
  if (!(lambda2 >= 0.0 && lambda2 <= 1.0)) fail("lambda2 must lie in [0, 1]");
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) fail("keep_prob must lie in [0, 1]");
  if (jobs < 1) fail("jobs must be >= 1");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  // jobs is left out: results do not depend on it.
  return {{"stage", to_string(stage)},     {"epochs", epochs},
          {"batch", batch},                {"lr", lr},
          {"lambda1", lambda1},            {"lambda2", lambda2},
          {"keep_prob", keep_prob},        {"seed", seed},
          {"loss_form", to_string(form)},  {"fusion", to_string(fusion)},
          {"compensation", compensation}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "train config must be an object");
  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "stage") {
        const std::string s = val.get<std::string>();
        if (s == "pretrain") c.stage = Stage::Pretrain;
        else if (s == "finetune") c.stage = Stage::Finetune;
        else throw Error(ErrorCode::InvalidArgument, "unknown stage '" + s + "'");
      } else if (key == "epochs") {
        c.epochs = val.get<int>();
      } else if (key == "batch") {
        c.batch = val.get<std::size_t>();
      } else if (key == "lr") {
        c.lr = val.get<double>();
      } else if (key == "lambda1") {
        c.lambda1 = val.get<double>();
      } else if (key == "lambda2") {
        c.lambda2 = val.get<double>();
      } else if (key == "keep_prob") {
        c.keep_prob = val.get<double>();
      } else if (key == "seed") {
        c.seed = val.get<std::uint64_t>();
      } else if (key == "loss_form") {
        const std::string s = val.get<std::string>();
        if (s == "log-sigmoid") c.form = ContrastiveForm::LogSigmoid;
        else if (s == "literal") c.form = ContrastiveForm::Literal;
        else throw Error(ErrorCode::InvalidArgument, "unknown loss_form '" + s + "'");
      } else if (key == "fusion") {
        const std::string s = val.get<std::string>();
        if (s == "1d") c.fusion = Fusion::TokenOnly;
        else if (s == "1d+3d") c.fusion = Fusion::Fused;
        else throw Error(ErrorCode::InvalidArgument, "unknown fusion '" + s + "'");
      } else if (key == "compensation") {
        c.compensation = val.get<bool>();
      } else if (key == "jobs") {
        c.jobs = val.get<int>();
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown train config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("train config: ") + e.what());
  }
  return c;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

PreparedMolecule prepare(const DatasetRecord& record) {
  try {
    PreparedMolecule p;
    p.record = &record;
    p.tokens = tokenize(record.smiles);
    const MolGraph mol = parse(p.tokens);
    const ExpandedMolecule ex = expand_hydrogens(mol);
    if (ex.elements != record.elements) {
      throw Error(ErrorCode::LengthMismatch, "SMILES does not reproduce the stored atoms");
    }
    p.map = atom_token_map(mol, ex);
    p.fragments = fragment(mol);
    p.groups = expand_fragments(p.fragments, ex);
    p.layout = layout(ex.elements);
    if (static_cast<std::size_t>(record.h.rows()) != p.layout.n_orb) {
      throw Error(ErrorCode::DimensionMismatch, "stored Hamiltonian does not match the basis");
    }
    return p;
  } catch (const Error& e) {
    throw with_record(e, record.index);
  }
}

std::vector<PreparedMolecule> prepare_all(const std::vector<DatasetRecord>& records) {
  std::vector<PreparedMolecule> out;
  out.reserve(records.size());
  for (const DatasetRecord& r : records) out.push_back(prepare(r));
  return out;
}

std::vector<double> LossTrace::epoch_means() const {
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  for (const TraceRow& r : rows) {
    const auto e = static_cast<std::size_t>(r.epoch);
    if (e >= sums.size()) {
      sums.resize(e + 1, 0.0);
      counts.resize(e + 1, 0);
    }
    sums[e] += r.total;
    ++counts[e];
  }
  for (std::size_t e = 0; e < sums.size(); ++e) {
    if (counts[e] > 0) sums[e] /= static_cast<double>(counts[e]);
  }
  return sums;
}

void LossTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "step,epoch," << columns[0] << ',' << columns[1] << ",total\n";
  out << std::setprecision(17);
  for (const TraceRow& r : rows) {
    out << r.step << ',' << r.epoch << ',' << r.first << ',' << r.second << ',' << r.total << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

void Adam::step(ParameterSet& ps, const std::vector<std::string>& prefixes) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Parameter& p : ps.all()) {
    if (!has_prefix(p.name, prefixes)) continue;
    if (p.m.size() == 0) {
      p.m = Matrix::Zero(p.value.rows(), p.value.cols());
      p.v = Matrix::Zero(p.value.rows(), p.value.cols());
    }
    if (!p.grad.allFinite()) throw Error(ErrorCode::NonFiniteValue, "gradient of " + p.name);
    p.m = beta1_ * p.m + (1.0 - beta1_) * p.grad;
    p.v = beta2_ * p.v + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr_ * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + eps_);
  }
}

TrainResult pretrain(Model& model, const std::vector<PreparedMolecule>& data,
                     const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyBatch, "no pretraining data");
  const std::vector<std::string> trainable =
      cfg.compensation ? std::vector<std::string>{"tok.", "geo.", "dis.", "gen.", "align."}
                       : std::vector<std::string>{"tok.", "geo.", "align."};
  std::mt19937_64 rng(cfg.seed);
  Adam adam(cfg.lr);
  TrainResult result;
  result.trace.columns = {"discrepancy", "contrastive"};
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      Context ctx(true);
      ctx.freeze_prefix("head.");
      std::vector<AlignmentSample> samples;
      for (std::size_t k = start; k < stop; ++k) {
        const PreparedMolecule& mol = data[order[k]];
        try {
          AlignmentSample s;
          s.t = model.tok.encode(ctx, mol.tokens, mol.map);
          s.v = model.geo.encode(ctx, mol.record->elements, mol.record->coords());
          if (cfg.compensation) {
            const Disentangled d = disentangle(ctx, model.dis, s.v, s.t);
            s.t_star = compensate(s.t, model.gen(ctx, d.minus));
            s.v_plus = d.plus;
          } else {
            s.t_star = s.t;
            s.v_plus = s.v;
          }
          s.fragments = mol.groups;
          samples.push_back(std::move(s));
        } catch (const Error& e) {
          throw with_record(e, mol.record->index);
        }
      }
      const PretrainTerms terms =
          pretrain_terms(ctx, model.align, samples, cfg.lambda1, cfg.form, cfg.compensation);
      if (!std::isfinite(terms.total.scalar())) {
        throw Error(ErrorCode::NonFiniteValue,
                    "pretraining loss in batch starting at record " +
                        std::to_string(data[order[start]].record->index));
      }
      model.params.zero_grad();
      ctx.backward(terms.total);
      adam.step(model.params, trainable);
      result.trace.rows.push_back({result.trace.rows.size(), epoch, terms.discrepancy.scalar(),
                                   terms.contrastive.scalar(), terms.total.scalar()});
    }
  }
  result.rng_state = rng_text(rng);
  result.optimizer_steps = adam.steps();
  return result;
}

namespace {

struct MoleculeStep {
  std::vector<std::pair<Parameter*, Matrix>> grads;
  double full = 0.0;
  double masked = 0.0;
};

Var embed(Context& ctx, const Model& model, const PreparedMolecule& mol,
          std::span<const Token> tokens, Fusion fusion, const Coordinates* coords) {
  const Var t = model.tok.encode(ctx, tokens, mol.map);
  if (fusion == Fusion::TokenOnly) return t;
  if (coords == nullptr) throw Error(ErrorCode::InvalidArgument, "fused path needs coordinates");
  return fuse_modalities(t, model.geo.encode(ctx, mol.record->elements, *coords));
}

}  // namespace

TrainResult finetune(Model& model, const std::vector<PreparedMolecule>& data,
                     const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyBatch, "no fine-tuning data");
  const std::vector<std::string> trainable = cfg.fusion == Fusion::TokenOnly
                                                 ? std::vector<std::string>{"tok.", "head."}
                                                 : std::vector<std::string>{"geo.", "head."};
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution keep(cfg.keep_prob);
  Adam adam(cfg.lr);
  TrainResult result;
  result.trace.columns = {"full", "masked"};
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<std::uint8_t>> masks(data.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      masks[i].resize(data[i].fragments.size());
      for (auto& m : masks[i]) m = keep(rng) ? 1 : 0;
    }
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      const double weight = 1.0 / static_cast<double>(stop - start);
      std::vector<MoleculeStep> steps(stop - start);
      parallel_for(stop - start, cfg.jobs, [&](std::size_t k) {
        const std::size_t i = order[start + k];
        const PreparedMolecule& mol = data[i];
        try {
          Context ctx(true);
          if (cfg.fusion == Fusion::Fused) ctx.freeze_prefix("tok.");
          const Coordinates* coords =
              cfg.fusion == Fusion::Fused ? &mol.record->coords() : nullptr;
          const Var target = ctx.constant(mol.record->h);
          const Var full =
              model.head(ctx, embed(ctx, model, mol, mol.tokens, cfg.fusion, coords), mol.layout);
          Var masked = full;
          const std::vector<std::uint8_t>& m = masks[i];
          if (std::find(m.begin(), m.end(), 0) != m.end()) {
            const std::vector<Token> hidden = mask_tokens(mol.tokens, mol.fragments, m);
            masked = model.head(ctx, embed(ctx, model, mol, hidden, cfg.fusion, coords), mol.layout);
          }
          const Var loss = diff::scale(finetune_loss(target, full, masked, cfg.lambda2), weight);
          if (!std::isfinite(loss.scalar())) {
            throw Error(ErrorCode::NonFiniteValue, "fine-tuning loss");
          }
          steps[k].full = branch_error(mol.record->h, full.value());
          steps[k].masked = branch_error(mol.record->h, masked.value());
          steps[k].grads = ctx.gradients(loss);
        } catch (const Error& e) {
          throw with_record(e, mol.record->index);
        }
      });
      model.params.zero_grad();
      double full = 0.0;
      double masked = 0.0;
      for (const MoleculeStep& s : steps) {
        for (const auto& [p, g] : s.grads) p->grad += g;
        full += s.full * weight;
        masked += s.masked * weight;
      }
      adam.step(model.params, trainable);
      const double total = cfg.lambda2 * full + (1.0 - cfg.lambda2) * masked;
      result.trace.rows.push_back({result.trace.rows.size(), epoch, full, masked, total});
    }
  }
  result.rng_state = rng_text(rng);
  result.optimizer_steps = adam.steps();
  return result;
}

Matrix predict_hamiltonian(const Model& model, const PreparedMolecule& mol, Fusion fusion,
                           const Coordinates* coords) {
  Context ctx(false);
  return model.head(ctx, embed(ctx, model, mol, mol.tokens, fusion, coords), mol.layout).value();
}

std::pair<Matrix, BlockLayout> predict_from_smiles(const Model& model, const std::string& smiles) {
  const std::vector<Token> tokens = tokenize(smiles);
  const MolGraph mol = parse(tokens);
  const ExpandedMolecule ex = expand_hydrogens(mol);
  const AtomTokenMap map = atom_token_map(mol, ex);
  BlockLayout lay = layout(ex.elements);
  Context ctx(false);
  Matrix h = model.head(ctx, model.tok.encode(ctx, tokens, map), lay).value();
  return {std::move(h), std::move(lay)};
}

nlohmann::ordered_json EvalReport::to_json(bool per_molecule) const {
  nlohmann::ordered_json j = {{"count", count},       {"mae_diag", mae_diag},
                              {"mae_offdiag", mae_offdiag}, {"mae_all", mae_all},
                              {"mae_eps", mae_eps},   {"psi", psi},
                              {"gap_mae_ev", gap_mae_ev},   {"units", "hartree; gaps in eV"}};
  if (per_molecule) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const MoleculeEval& m : molecules) {
      rows.push_back({{"index", m.index},
                      {"mae_diag", m.mae.diag},
                      {"mae_offdiag", m.mae.offdiag},
                      {"mae_all", m.mae.all},
                      {"mae_eps", m.mae_eps},
                      {"psi", m.psi},
                      {"gap_pred_ev", m.gap_pred_ev},
                      {"gap_true_ev", m.gap_true_ev}});
    }
    j["molecules"] = std::move(rows);
  }
  return j;
}

EvalReport evaluate(const Model& model, const std::vector<PreparedMolecule>& data, Fusion fusion,
                    int jobs) {
  if (data.empty()) throw Error(ErrorCode::EmptyBatch, "nothing to evaluate");
  EvalReport report;
  report.molecules.resize(data.size());
  parallel_for(data.size(), jobs, [&](std::size_t k) {
    const PreparedMolecule& mol = data[k];
    const DatasetRecord& rec = *mol.record;
    try {
      const Coordinates* coords = fusion == Fusion::Fused ? &rec.coords() : nullptr;
      const Matrix h = predict_hamiltonian(model, mol, fusion, coords);
      const SpectralResult truth = solve_gev(rec.h, rec.s, rec.electrons);
      const SpectralResult pred = solve_gev(h, rec.s, rec.electrons);
      MoleculeEval& m = report.molecules[k];
      m.index = rec.index;
      m.mae = mae_blocks(h, rec.h, mol.layout);
      m.mae_eps = mae_energies(pred.energies, truth.energies, truth.n_occ);
      m.psi = orbital_similarity(pred.coefficients, truth.coefficients, pred.energies,
                                 truth.energies, truth.n_occ);
      m.gap_pred_ev = pred.gap_ev;
      m.gap_true_ev = rec.gap_ev;
    } catch (const Error& e) {
      throw with_record(e, rec.index);
    }
  });
  report.count = data.size();
  const double n = static_cast<double>(data.size());
  for (const MoleculeEval& m : report.molecules) {
    report.mae_diag += m.mae.diag / n;
    report.mae_offdiag += m.mae.offdiag / n;
    report.mae_all += m.mae.all / n;
    report.mae_eps += m.mae_eps / n;
    report.psi += m.psi / n;
    report.gap_mae_ev += std::abs(m.gap_pred_ev - m.gap_true_ev) / n;
  }
  return report;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::ordered_json& train, const std::string& rng_state) {
  std::string blob;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  for (const Parameter& p : model.params.all()) {
    tensors.push_back({{"name", p.name},
                       {"rows", p.value.rows()},
                       {"cols", p.value.cols()},
                       {"offset", blob.size()}});
    // Row-major so the blob reads naturally.
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        std::uint64_t bits = 0;
        const double x = p.value(r, c);
        std::memcpy(&bits, &x, sizeof bits);
        put_le<std::uint64_t>(blob, bits);
      }
    }
  }
  nlohmann::ordered_json manifest = {{"format", "geoham-checkpoint"},
                                     {"version", kCheckpointVersion},
                                     {"model", model.config().to_json()},
                                     {"train", train},
                                     {"rng_state", rng_state},
                                     {"tensors", std::move(tensors)},
                                     {"blob_bytes", blob.size()},
                                     {"blob_crc32", hex32(crc_of(blob))}};
  const std::string text = manifest.dump();
  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  put_le<std::uint32_t>(out, crc_of(text));
  out += text;
  out += blob;

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  auto corrupt = [&](const std::string& why) {
    return Error(ErrorCode::CorruptFile, path.string() + ": " + why);
  };
  constexpr std::size_t kHeader = sizeof kMagic + 4 + 8 + 4;
  if (bytes.size() < kHeader) throw corrupt("truncated header");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw corrupt("bad magic");
  const std::string_view view(bytes);
  const auto version = get_le<std::uint32_t>(view, 8);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, "checkpoint format " + std::to_string(version) +
                                                ", expected " +
                                                std::to_string(kCheckpointVersion));
  }
  const auto text_len = get_le<std::uint64_t>(view, 12);
  const auto text_crc = get_le<std::uint32_t>(view, 20);
  if (text_len > bytes.size() - kHeader) throw corrupt("truncated manifest");
  const std::string_view text = view.substr(kHeader, text_len);
  if (crc_of(text) != text_crc) throw corrupt("manifest checksum mismatch");
  const std::string_view blob = view.substr(kHeader + text_len);

  Checkpoint ck;
  ck.version = version;
  try {
    const nlohmann::ordered_json m = nlohmann::ordered_json::parse(text);
    if (m.at("version").get<std::uint32_t>() != version) throw corrupt("version fields disagree");
    if (m.at("blob_bytes").get<std::size_t>() != blob.size()) throw corrupt("truncated tensor blob");
    if (m.at("blob_crc32").get<std::string>() != hex32(crc_of(blob))) {
      throw corrupt("tensor checksum mismatch");
    }
    ck.model = ModelConfig::from_json(m.at("model"));
    ck.train = m.at("train");
    ck.rng_state = m.at("rng_state").get<std::string>();
    for (const auto& t : m.at("tensors")) {
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      const auto offset = t.at("offset").get<std::size_t>();
      if (rows < 0 || cols < 0 ||
          offset + static_cast<std::size_t>(rows * cols) * 8 > blob.size()) {
        throw corrupt("tensor outside blob");
      }
      Matrix value(rows, cols);
      std::size_t at = offset;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c, at += 8) {
          const auto bits = get_le<std::uint64_t>(blob, at);
          std::memcpy(&value(r, c), &bits, sizeof bits);
        }
      }
      ck.tensors.emplace_back(t.at("name").get<std::string>(), std::move(value));
    }
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(std::string("manifest: ") + e.what());
  }
  return ck;
}

void apply_checkpoint(const Checkpoint& ck, Model& model) {
  auto shape = [](const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
  };
  if (ck.tensors.size() != model.params.all().size()) {
    throw Error(ErrorCode::VersionMismatch,
                "checkpoint has " + std::to_string(ck.tensors.size()) + " tensors, model has " +
                    std::to_string(model.params.all().size()));
  }
  for (const auto& [name, value] : ck.tensors) {
    const Parameter* p = model.params.find(name);
    if (p == nullptr) throw Error(ErrorCode::VersionMismatch, "unknown tensor " + name);
    if (p->value.rows() != value.rows() || p->value.cols() != value.cols()) {
      throw Error(ErrorCode::VersionMismatch, "tensor " + name + ": checkpoint " + shape(value) +
                                                  ", model " + shape(p->value));
    }
  }
  for (const auto& [name, value] : ck.tensors) model.params.at(name).value = value;
}

std::unique_ptr<Model> model_from_checkpoint(const Checkpoint& ck) {
  auto model = std::make_unique<Model>(ck.model);
  apply_checkpoint(ck, *model);
  return model;
}

}  // namespace geoham

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

#include "geoham/ham_head.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "geoham/error.hpp"

namespace geoham {

namespace {

constexpr std::size_t kSlotPairs = kMaxOrbitalsPerAtom * (kMaxOrbitalsPerAtom + 1) / 2;

std::size_t slot_pair(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  // index into the upper triangle of a square slot table
  return a * kMaxOrbitalsPerAtom - a * (a - 1) / 2 + (b - a);
}

template <class T>
void put_le(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get_le(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw Error(ErrorCode::CorruptFile, "truncated matrix");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

HamHead HamHead::create(ParameterSet& ps, const HamHeadConfig& cfg, std::mt19937_64& rng,
                        const std::string& prefix) {
  if (cfg.width <= 0 || cfg.rank <= 0 || cfg.hidden <= 0) {
    throw Error(ErrorCode::InvalidArgument, "head config");
  }
  HamHead h;
  h.cfg_ = cfg;
  for (std::size_t s = 0; s < kMaxOrbitalsPerAtom; ++s) {
    h.q_.push_back(Linear::create(ps, prefix + ".q" + std::to_string(s), cfg.width, cfg.rank, rng));
  }
  h.diag_hidden_ = Linear::create(ps, prefix + ".diag.hidden", cfg.width, cfg.hidden, rng);
  const Eigen::Index d = cfg.width;
  const Eigen::Index hid = cfg.hidden;
  h.pair_sum_ = &ps.add(prefix + ".pair.sum", glorot_init(rng, d, hid));
  h.pair_diff_ = &ps.add(prefix + ".pair.diff", glorot_init(rng, d, hid));
  h.pair_bias_ = &ps.add(prefix + ".pair.b", Matrix::Zero(1, hid));
  for (std::size_t k = 0; k < kSlotPairs; ++k) {
    h.diag_out_.push_back(
        Linear::create(ps, prefix + ".diag.out" + std::to_string(k), cfg.hidden, cfg.rank, rng));
    h.pair_out_.push_back(
        Linear::create(ps, prefix + ".pair.out" + std::to_string(k), cfg.hidden, cfg.rank, rng));
  }
  return h;
}

Var HamHead::operator()(Context& ctx, const Var& emb, const BlockLayout& layout) const {
  const auto n = static_cast<std::size_t>(emb.rows());
  if (n != layout.n_atoms() || emb.cols() != cfg_.width) {
    throw Error(ErrorCode::ShapeMismatch, "head input " + std::to_string(emb.rows()) + "x" +
                                              std::to_string(emb.cols()) + " for " +
                                              std::to_string(layout.n_atoms()) + " atoms");
  }
  std::vector<Var> q;
  for (const Linear& l : q_) q.push_back(diff::tanh(l(ctx, emb)));
  const Var q_all = diff::concat_rows(q);

  std::vector<std::size_t> pi, pj;
  std::vector<std::size_t> pair_index(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      pair_index[i * n + j] = pi.size();
      pi.push_back(i);
      pj.push_back(j);
    }
  }
  const std::size_t n_pairs = pi.size();

  std::vector<Var> c_parts;
  if (n_pairs > 0) {
    const Var ti = diff::gather_rows(emb, pi);
    const Var tj = diff::gather_rows(emb, pj);
    const Var hidden =
        diff::tanh(diff::matmul(ti + tj, ctx(*pair_sum_)) +
                   diff::matmul(diff::square(ti - tj), ctx(*pair_diff_)) + ctx(*pair_bias_));
    for (const Linear& l : pair_out_) c_parts.push_back(l(ctx, hidden));
  }
  const Var diag_hidden = diff::tanh(diag_hidden_(ctx, emb));
  for (const Linear& l : diag_out_) c_parts.push_back(l(ctx, diag_hidden));
  const Var c_all = diff::concat_rows(c_parts);
  const std::size_t diag_base = kSlotPairs * n_pairs;

  std::vector<std::size_t> rows, cols, qa, qb, cr;
  for (std::size_t r = 0; r < layout.n_orb; ++r) {
    for (std::size_t c = r; c < layout.n_orb; ++c) {
      const std::size_t i = layout.atom[r];
      const std::size_t j = layout.atom[c];
      const std::size_t mu = layout.slot[r];
      const std::size_t nu = layout.slot[c];
      rows.push_back(r);
      cols.push_back(c);
      qa.push_back(mu * n + i);
      qb.push_back(nu * n + j);
      const std::size_t combo = slot_pair(mu, nu);
      cr.push_back(i == j ? diag_base + combo * n + i : combo * n_pairs + pair_index[i * n + j]);
    }
  }
  const Var entries = diff::row_sum(diff::gather_rows(q_all, qa) * diff::gather_rows(c_all, cr) *
                                    diff::gather_rows(q_all, qb));
  return sym_from_upper(entries, static_cast<Eigen::Index>(layout.n_orb), std::move(rows),
                        std::move(cols));
}

Var sym_from_upper(const Var& values, Eigen::Index n, std::vector<std::size_t> rows,
                   std::vector<std::size_t> cols) {
  if (values.cols() != 1 || static_cast<std::size_t>(values.rows()) != rows.size() ||
      rows.size() != cols.size()) {
    throw Error(ErrorCode::ShapeMismatch, "sym_from_upper entries");
  }
  Matrix h = Matrix::Zero(n, n);
  const Matrix& v = values.value();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(rows[k]);
    const auto c = static_cast<Eigen::Index>(cols[k]);
    if (r > c || c >= n) throw Error(ErrorCode::IndexOutOfRange, "sym_from_upper index");
    h(r, c) = v(static_cast<Eigen::Index>(k), 0);
    h(c, r) = h(r, c);
  }
  return values.tape()->record(
      std::move(h), {values},
      [values, rows = std::move(rows), cols = std::move(cols)](diff::Tape& tape, const Matrix& g) {
        Matrix gv(values.rows(), 1);
        for (std::size_t k = 0; k < rows.size(); ++k) {
          const auto r = static_cast<Eigen::Index>(rows[k]);
          const auto c = static_cast<Eigen::Index>(cols[k]);
          gv(static_cast<Eigen::Index>(k), 0) = r == c ? g(r, r) : g(r, c) + g(c, r);
        }
        tape.accumulate(values, gv);
      });
}

Var fuse_modalities(const Var& t, const Var& v) {
  if (t.rows() != v.rows() || t.cols() != v.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "fuse_modalities");
  }
  return t + v;
}

Var finetune_loss(const Var& target, const Var& full, const Var& masked, double lambda2) {
  for (const Var* m : {&full, &masked}) {
    if (m->rows() != target.rows() || m->cols() != target.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "finetune_loss");
    }
  }
  if (!(lambda2 >= 0.0 && lambda2 <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda2 must lie in [0, 1]");
  }
  auto term = [&](const Var& pred) {
    const Var d = target - pred;
    return diff::mean(diff::abs(d) + diff::square(d));
  };
  if (lambda2 == 1.0) return term(full);
  return diff::scale(term(full), lambda2) + diff::scale(term(masked), 1.0 - lambda2);
}

std::string encode_upper(const Matrix& h) {
  if (h.rows() != h.cols()) throw Error(ErrorCode::ShapeMismatch, "matrix must be square");
  std::string out;
  const auto n = static_cast<std::uint64_t>(h.rows());
  out.reserve(8 + 8 * n * (n + 1) / 2);
  put_le<std::uint64_t>(out, n);
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    for (Eigen::Index c = r; c < h.cols(); ++c) put_le<double>(out, h(r, c));
  }
  return out;
}

Matrix decode_upper(std::string_view bytes) {
  std::size_t pos = 0;
  const auto n = get_le<std::uint64_t>(bytes, pos);
  if (bytes.size() != 8 + 8 * n * (n + 1) / 2) {
    throw Error(ErrorCode::CorruptFile, "matrix byte count does not match dimension");
  }
  const auto dim = static_cast<Eigen::Index>(n);
  Matrix h(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = r; c < dim; ++c) {
      h(r, c) = h(c, r) = get_le<double>(bytes, pos);
    }
  }
  return h;
}

void write_hamiltonian(const std::filesystem::path& path, const Matrix& h,
                       const BlockLayout& layout) {
  if (static_cast<std::size_t>(h.rows()) != layout.n_orb) {
    throw Error(ErrorCode::DimensionMismatch, "matrix and layout sizes differ");
  }
  std::ofstream bin(path, std::ios::binary);
  const std::string bytes = encode_upper(h);
  bin.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  std::ofstream side(path.string() + ".json");
  side << layout_to_json(layout).dump() << "\n";
  if (!bin || !side) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

std::pair<Matrix, BlockLayout> read_hamiltonian(const std::filesystem::path& path) {
  std::ifstream bin(path, std::ios::binary);
  std::ifstream side(path.string() + ".json");
  if (!bin || !side) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << bin.rdbuf();
  Matrix h = decode_upper(buf.str());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(side);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("layout sidecar: ") + e.what());
  }
  BlockLayout l = layout_from_json(j);
  if (l.n_orb != static_cast<std::size_t>(h.rows())) {
    throw Error(ErrorCode::CorruptFile, "layout sidecar does not match matrix");
  }
  return {std::move(h), std::move(l)};
}

}  // namespace geoham

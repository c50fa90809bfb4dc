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

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "doctest.h"
#include "geoham/error.hpp"
#include "geoham/ham_head.hpp"
#include "support.hpp"

using namespace geoham;
using geoham::testing::random_matrix;

namespace {

std::vector<Element> expanded_elements(std::string_view smiles) {
  return expand_hydrogens(parse(smiles)).elements;
}

Matrix predict(const HamHead& head, const Matrix& emb, const BlockLayout& l) {
  Context ctx(false);
  return head(ctx, ctx.constant(emb), l).value();
}

Eigen::RowVectorXd row_of(const Matrix& m, std::size_t i) {
  return m.row(static_cast<Eigen::Index>(i));
}

// Loop-by-loop evaluation of the head formula.
Matrix head_reference(ParameterSet& ps, const Matrix& t, const BlockLayout& l) {
  auto lin = [&](const std::string& name, const Eigen::RowVectorXd& x) -> Eigen::RowVectorXd {
    return x * ps.at(name + ".w").value + ps.at(name + ".b").value;
  };
  auto tanh = [](Eigen::RowVectorXd x) -> Eigen::RowVectorXd { return x.array().tanh().matrix(); };
  auto combo = [](std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    return a == 0 ? b : 2;  // {0,0} {0,1} {1,1}
  };
  Matrix h(static_cast<Eigen::Index>(l.n_orb), static_cast<Eigen::Index>(l.n_orb));
  for (std::size_t r = 0; r < l.n_orb; ++r) {
    for (std::size_t c = 0; c < l.n_orb; ++c) {
      const std::size_t i = std::min(l.atom[r], l.atom[c]);
      const std::size_t j = std::max(l.atom[r], l.atom[c]);
      const std::size_t mu = l.atom[r] <= l.atom[c] ? l.slot[r] : l.slot[c];
      const std::size_t nu = l.atom[r] <= l.atom[c] ? l.slot[c] : l.slot[r];
      const Eigen::RowVectorXd ti = row_of(t, i);
      const Eigen::RowVectorXd tj = row_of(t, j);
      const Eigen::RowVectorXd qa = tanh(lin("head.q" + std::to_string(mu), ti));
      const Eigen::RowVectorXd qb = tanh(lin("head.q" + std::to_string(nu), tj));
      Eigen::RowVectorXd coef;
      const std::string k = std::to_string(combo(mu, nu));
      if (i == j) {
        coef = lin("head.diag.out" + k, tanh(lin("head.diag.hidden", ti)));
      } else {
        const Eigen::RowVectorXd sq = (ti - tj).array().square().matrix();
        const Eigen::RowVectorXd hid = tanh((ti + tj) * ps.at("head.pair.sum").value +
                                            sq * ps.at("head.pair.diff").value +
                                            ps.at("head.pair.b").value);
        coef = lin("head.pair.out" + k, hid);
      }
      double acc = 0.0;
      for (Eigen::Index m = 0; m < qa.size(); ++m) acc += qa(m) * coef(m) * qb(m);
      h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = acc;
    }
  }
  return h;
}

}  // namespace

TEST_CASE("orbital layouts") {
  const BlockLayout h2 = layout(expanded_elements("[H][H]"));
  CHECK(h2.n_orb == 2);
  const BlockLayout water = layout(expanded_elements("O"));
  CHECK(water.n_orb == 4);
  CHECK(water.offset == std::vector<std::size_t>{0, 2, 3});

  const auto cco = expanded_elements("CCO");
  std::size_t heavy = 0, hydrogens = 0;
  for (Element e : cco) (e == Element::H ? hydrogens : heavy) += 1;
  CHECK(heavy == 3);
  CHECK(hydrogens == 6);
  const BlockLayout l = layout(cco);
  CHECK(l.n_orb == 2 * heavy + hydrogens);
  CHECK(std::accumulate(l.count.begin(), l.count.end(), std::size_t{0}) == l.n_orb);
  for (std::size_t i = 1; i < l.n_atoms(); ++i) CHECK(l.offset[i] == l.offset[i - 1] + l.count[i - 1]);

  CHECK(layout_from_json(layout_to_json(l)) == l);
  nlohmann::json broken = layout_to_json(l);
  broken["n_orb"] = 3;
  CHECK_THROWS_AS(layout_from_json(broken), Error);

  for (std::size_t e = 0; e < kElementCount; ++e) {
    for (const OrbitalSpec& o : OrbitalBasis::toy().orbitals(static_cast<Element>(e))) {
      CHECK(o.exponent > 0.0);
      CHECK(o.onsite < 0.0);
    }
  }
  CHECK(OrbitalBasis::toy().orbitals(Element::H)[0].onsite == -0.5);
}

TEST_CASE("predicted Hamiltonian symmetry, zero case and reference formula") {
  ParameterSet ps;
  std::mt19937_64 rng(31);
  const HamHead head = HamHead::create(ps, {8, 5, 7}, rng);
  for (const char* s : {"O", "CCO", "c1ccsc1Cl", "[H][H]", "[C]"}) {
    const BlockLayout l = layout(expanded_elements(s));
    const Matrix t = random_matrix(rng, static_cast<Eigen::Index>(l.n_atoms()), 8, -2, 2);
    const Matrix h = predict(head, t, l);
    CHECK(h.rows() == static_cast<Eigen::Index>(l.n_orb));
    CHECK((h.array() == h.transpose().array()).all());
    CHECK((h - head_reference(ps, t, l)).cwiseAbs().maxCoeff() < 1e-12);
  }

  ParameterSet zero;
  const HamHead zh = HamHead::create(zero, {8, 5, 7}, rng);
  for (Parameter& p : zero.all()) {
    if (p.name.ends_with(".b")) p.value.setZero();
  }
  const BlockLayout l = layout(expanded_elements("CCO"));
  CHECK((predict(zh, Matrix::Zero(static_cast<Eigen::Index>(l.n_atoms()), 8), l).array() == 0.0).all());

  Context ctx(false);
  CHECK_THROWS_AS(head(ctx, ctx.constant(Matrix::Zero(2, 8)), l), Error);
}

TEST_CASE("relabeling atoms permutes orbital blocks") {
  ParameterSet ps;
  std::mt19937_64 rng(32);
  const HamHead head = HamHead::create(ps, {8, 5, 7}, rng);
  const std::vector<Element> el = expanded_elements("OCC(=O)NCl");
  const auto n = el.size();
  const Matrix t = random_matrix(rng, static_cast<Eigen::Index>(n), 8, -2, 2);
  const BlockLayout l = layout(el);
  const Matrix h = predict(head, t, l);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Element> el2(n);
    Matrix t2(static_cast<Eigen::Index>(n), 8);
    for (std::size_t i = 0; i < n; ++i) {
      el2[i] = el[perm[i]];
      t2.row(static_cast<Eigen::Index>(i)) = t.row(static_cast<Eigen::Index>(perm[i]));
    }
    const BlockLayout l2 = layout(el2);
    // orbital permutation: new orbital (i, s) is old orbital (perm[i], s)
    Matrix p = Matrix::Zero(static_cast<Eigen::Index>(l.n_orb), static_cast<Eigen::Index>(l.n_orb));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < l2.count[i]; ++s) {
        p(static_cast<Eigen::Index>(l.offset[perm[i]] + s), static_cast<Eigen::Index>(l2.offset[i] + s)) = 1.0;
      }
    }
    const Matrix h2 = predict(head, t2, l2);
    CHECK((h2 - p.transpose() * h * p).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fusing modalities") {
  std::mt19937_64 rng(33);
  const Matrix t = random_matrix(rng, 4, 6);
  const Matrix v = random_matrix(rng, 4, 6);
  diff::Tape tape;
  CHECK((fuse_modalities(tape.constant(t), tape.constant(Matrix::Zero(4, 6))).value().array() == t.array()).all());
  CHECK((fuse_modalities(tape.constant(Matrix::Zero(4, 6)), tape.constant(v)).value().array() == v.array()).all());
  const Matrix f = fuse_modalities(tape.constant(t), tape.constant(v)).value();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 6; ++j) CHECK(f(i, j) == t(i, j) + v(i, j));
  }
  CHECK_THROWS_AS(fuse_modalities(tape.constant(t), tape.constant(Matrix::Zero(3, 6))), Error);
}

TEST_CASE("fine-tuning loss") {
  std::mt19937_64 rng(34);
  const Matrix target = random_matrix(rng, 4, 4, -2, 2);
  const Matrix full = random_matrix(rng, 4, 4, -2, 2);
  const Matrix masked = random_matrix(rng, 4, 4, -2, 2);
  diff::Tape tape;
  auto c = [&](const Matrix& m) { return tape.constant(m); };
  CHECK(finetune_loss(c(target), c(target), c(target), 0.8).scalar() == 0.0);
  CHECK(finetune_loss(c(target), c(full), c(masked), 1.0).scalar() ==
        finetune_loss(c(target), c(full), c(full * 3.0), 1.0).scalar());

  double a = 0.0, b = 0.0;
  for (Eigen::Index k = 0; k < 16; ++k) {
    const double d1 = target(k) - full(k);
    const double d2 = target(k) - masked(k);
    a += std::abs(d1) + d1 * d1;
    b += std::abs(d2) + d2 * d2;
  }
  const double want = 0.8 / 16 * a + 0.2 / 16 * b;
  CHECK(finetune_loss(c(target), c(full), c(masked), 0.8).scalar() ==
        doctest::Approx(want).epsilon(1e-14));
  CHECK(finetune_loss(c(target), c(full), c(masked), 0.3).scalar() > 0.0);
  CHECK_THROWS_AS(finetune_loss(c(target), c(full.topRows(3)), c(masked), 0.8), Error);
  CHECK_THROWS_AS(finetune_loss(c(target), c(full), c(masked), 1.5), Error);
}

TEST_CASE("head plus fine-tuning loss gradient") {
  ParameterSet ps;
  std::mt19937_64 rng(35);
  const HamHead head = HamHead::create(ps, {6, 4, 5}, rng);
  const BlockLayout l = layout(expanded_elements("CO"));
  const auto n = static_cast<Eigen::Index>(l.n_atoms());
  const Matrix t_full = random_matrix(rng, n, 6);
  const Matrix t_mask = random_matrix(rng, n, 6);
  const auto m = static_cast<Eigen::Index>(l.n_orb);
  Matrix target = random_matrix(rng, m, m);
  target = (target + target.transpose()).eval();
  const double err = geoham::testing::parameter_grad_check(ps, [&](Context& ctx) {
    return finetune_loss(ctx.constant(target), head(ctx, ctx.constant(t_full), l),
                         head(ctx, ctx.constant(t_mask), l), 0.8);
  });
  CHECK(err < 1e-4);


  // embeddings as trainable leaves
  ParameterSet with_emb;
  std::mt19937_64 rng2(37);
  const HamHead head2 = HamHead::create(with_emb, {6, 4, 5}, rng2);
  Parameter& emb = with_emb.add("emb", random_matrix(rng2, n, 6));
  const double err_emb = geoham::testing::parameter_grad_check(
      with_emb,
      [&](Context& ctx) {
        return finetune_loss(ctx.constant(target), head2(ctx, ctx(emb), l),
                             ctx.constant(Matrix::Zero(m, m)), 0.6);
      },
      1e-5, 12);
  CHECK(err_emb < 1e-4);
}

TEST_CASE("matrix serialization round trip") {
  std::mt19937_64 rng(36);
  Matrix h = random_matrix(rng, 7, 7);
  h = (h + h.transpose()).eval();
  const std::string bytes = encode_upper(h);
  CHECK(bytes.size() == 8 + 8 * 28);
  CHECK(static_cast<unsigned char>(bytes[0]) == 7);
  CHECK((decode_upper(bytes).array() == h.array()).all());
  CHECK_THROWS_AS(decode_upper(std::string_view(bytes).substr(0, bytes.size() - 1)), Error);

  const auto dir = std::filesystem::temp_directory_path() / "geoham_ham_io";
  std::filesystem::create_directories(dir);
  const BlockLayout l = layout(expanded_elements("CO"));
  Matrix g = random_matrix(rng, static_cast<Eigen::Index>(l.n_orb), static_cast<Eigen::Index>(l.n_orb));
  g = (g + g.transpose()).eval();
  write_hamiltonian(dir / "h.bin", g, l);
  const auto [back, lb] = read_hamiltonian(dir / "h.bin");
  CHECK((back.array() == g.array()).all());
  CHECK(lb == l);
  std::filesystem::remove_all(dir);
}

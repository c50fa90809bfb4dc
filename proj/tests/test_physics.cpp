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
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "geoham/error.hpp"
#include "geoham/physics.hpp"
#include "support.hpp"

using namespace geoham;
using geoham::testing::random_matrix;
using geoham::testing::random_rotation;

namespace {

Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix a = random_matrix(rng, n, n);
  return 0.5 * (a + a.transpose());
}

Matrix random_spd(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix a = random_matrix(rng, n, n);
  return a * a.transpose() / static_cast<double>(n) + 0.5 * Matrix::Identity(n, n);
}

double inf_norm(const Matrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("jacobi on analytic cases") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 1, 2;
  const EigenPairs e = jacobi_eigh(d);
  CHECK(e.values(0) == 1.0);
  CHECK(e.values(1) == 2.0);
  CHECK(e.values(2) == 3.0);
  CHECK(e.vectors(1, 0) == 1.0);
  CHECK(e.vectors(2, 1) == 1.0);
  CHECK(e.vectors(0, 2) == 1.0);

  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  const EigenPairs ex = jacobi_eigh(x);
  CHECK(ex.values(0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(ex.values(1) == doctest::Approx(1.0).epsilon(1e-15));

  Matrix bad = x;
  bad(0, 1) = 1.0 + 1e-9;
  CHECK(code_of([&] { jacobi_eigh(bad); }) == ErrorCode::NotSymmetric);
  CHECK(code_of([&] { jacobi_eigh(Matrix::Zero(2, 3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("jacobi residual, orthogonality and agreement with QR iteration") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = trial < 10 ? 50 : 1 + trial;
    const Matrix a = random_symmetric(rng, n);
    const EigenPairs e = jacobi_eigh(a);
    const Matrix& v = e.vectors;
    CHECK(inf_norm(a * v - v * e.values.asDiagonal()) < 1e-10 * inf_norm(a));
    CHECK((v.transpose() * v - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index k = 1; k < n; ++k) CHECK(e.values(k - 1) <= e.values(k));
    // Eigen's tridiagonal implicit-shift QR serves as the second algorithm.
    const Eigen::SelfAdjointEigenSolver<Matrix> qr(a);
    const double spread = std::max(1.0, qr.eigenvalues().cwiseAbs().maxCoeff());
    CHECK((e.values - qr.eigenvalues()).cwiseAbs().maxCoeff() < 1e-9 * spread);
  }
}

TEST_CASE("inverse square root of the overlap") {
  CHECK((lowdin_inv_sqrt(Matrix::Identity(5, 5)).array() == Matrix::Identity(5, 5).array()).all());
  const Matrix four = 4.0 * Matrix::Identity(3, 3);
  CHECK((lowdin_inv_sqrt(four) - 0.5 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);

  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + trial;
    const Matrix s = random_spd(rng, n);
    const Matrix x = lowdin_inv_sqrt(s);
    CHECK((x * s * x - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((x - x.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((x * s - s * x).cwiseAbs().maxCoeff() < 1e-8);
  }
  Matrix singular = Matrix::Ones(3, 3);
  CHECK(code_of([&] { lowdin_inv_sqrt(singular); }) == ErrorCode::NotPositiveDefinite);
}

TEST_CASE("generalized eigenproblem") {
  std::mt19937_64 rng(43);
  {
    const Matrix h = random_symmetric(rng, 6);
    const SpectralResult r = solve_gev(h, Matrix::Identity(6, 6), 4);
    const Eigen::SelfAdjointEigenSolver<Matrix> ref(h);
    CHECK((r.energies - ref.eigenvalues()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.n_occ == 2);
    CHECK(r.homo == 1);
    CHECK(r.lumo == 2);
    CHECK(r.gap_ev == (r.energies(2) - r.energies(1)) * 27.2114);
  }
  {
    const Matrix s = random_spd(rng, 7);
    const SpectralResult r = solve_gev(s, s, 2);
    CHECK((r.energies.array() - 1.0).abs().maxCoeff() < 1e-10);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 40;
    const Matrix h = random_symmetric(rng, n);
    const Matrix s = random_spd(rng, n);
    const SpectralResult r = solve_gev(h, s, 2);
    const Matrix& c = r.coefficients;
    CHECK((h * c - s * c * r.energies.asDiagonal()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((c.transpose() * s * c - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
  }
  const Matrix h = random_symmetric(rng, 4);
  const Matrix s = random_spd(rng, 4);
  CHECK(code_of([&] { solve_gev(h, s, 3); }) == ErrorCode::OddElectronCount);
  CHECK(code_of([&] { solve_gev(h, random_spd(rng, 5), 2); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { solve_gev(h, s, 8); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("toy overlap") {
  const std::vector<Element> h = {Element::H};
  CHECK((toy_overlap(h, Coordinates::Zero(1, 3)).array() == Matrix::Ones(1, 1).array()).all());

  const std::vector<Element> h2 = {Element::H, Element::H};
  Coordinates x = Coordinates::Zero(2, 3);
  x(1, 0) = 1e-6;
  CHECK(toy_overlap(h2, x)(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
  x(1, 0) = 30.0;
  CHECK(toy_overlap(h2, x)(0, 1) < 1e-100);
  CHECK(gaussian_overlap(0.3, 0.3, 0.0) == 1.0);
  CHECK(gaussian_overlap(0.35, 0.25, 0.0) ==
        doctest::Approx(std::pow(2 * std::sqrt(0.35 * 0.25) / 0.6, 1.5)).epsilon(1e-15));

  // two heavy atoms: expand the orthogonalized second orbitals by hand
  {
    const std::vector<Element> co = {Element::C, Element::O};
    Coordinates c2 = Coordinates::Zero(2, 3);
    c2(1, 2) = 1.3;
    const double r = 1.3 / 0.529177210903;
    const double cs = 0.35, cp = 0.25, os = 0.45, op = 0.35;
    const double sc = gaussian_overlap(cs, cp, 0), so = gaussian_overlap(os, op, 0);
    auto g = [&](double a, double b) { return gaussian_overlap(a, b, r); };
    // p' = (g_p - sigma g_s) / sqrt(1 - sigma^2)
    const double nc = std::sqrt(1 - sc * sc), no = std::sqrt(1 - so * so);
    const double s_s = g(cs, os);
    const double s_p = (g(cs, op) - so * g(cs, os)) / no;
    const double p_s = (g(cp, os) - sc * g(cs, os)) / nc;
    const double p_p =
        (g(cp, op) - so * g(cp, os) - sc * g(cs, op) + sc * so * g(cs, os)) / (nc * no);
    const Matrix s = toy_overlap(co, c2);
    CHECK(s(0, 1) == 0.0);
    CHECK(s(2, 3) == 0.0);
    CHECK(s(0, 2) == doctest::Approx(s_s).epsilon(1e-13));
    CHECK(s(0, 3) == doctest::Approx(s_p).epsilon(1e-13));
    CHECK(s(1, 2) == doctest::Approx(p_s).epsilon(1e-13));
    CHECK(s(1, 3) == doctest::Approx(p_p).epsilon(1e-13));
  }

  std::mt19937_64 rng(44);
  const std::vector<Element> el = {Element::C, Element::O, Element::N, Element::H, Element::S};
  for (int trial = 0; trial < 20; ++trial) {
    Coordinates c = random_matrix(rng, 5, 3, -2.5, 2.5);
    const Matrix s = toy_overlap(el, c);
    CHECK(s.rows() == 9);
    CHECK((s.diagonal().array() == 1.0).all());
    CHECK((s.array() == s.transpose().array()).all());
    CHECK(jacobi_eigh(s).values(0) > 0.0);
    CHECK(Eigen::LLT<Matrix>(s).info() == Eigen::Success);

    const Eigen::Matrix3d rot = random_rotation(rng);
    const Coordinates moved = (c * rot.transpose()).rowwise() + Eigen::RowVector3d(3, -1, 7);
    CHECK((toy_overlap(el, moved) - s).cwiseAbs().maxCoeff() < 1e-12);
  }
  Coordinates bad = Coordinates::Zero(5, 3);
  bad(2, 1) = INFINITY;
  CHECK(code_of([&] { toy_overlap(el, bad); }) == ErrorCode::NonFiniteCoordinate);
}

TEST_CASE("orbital similarity") {
  std::mt19937_64 rng(45);
  const Matrix q = Eigen::HouseholderQR<Matrix>(random_matrix(rng, 6, 6)).householderQ();
  const Matrix q2 = Eigen::HouseholderQR<Matrix>(random_matrix(rng, 6, 6)).householderQ();
  Vector e(6);
  e << -3, -2, -1, 0.5, 1, 2;
  CHECK(orbital_similarity(q, q, e, e, 3) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(orbital_similarity(-q, q, e, e, 3) == doctest::Approx(1.0).epsilon(1e-15));

  const double base = orbital_similarity(q, q2, e, e, 4);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix flipped = q;
    Matrix flipped2 = q2;
    for (int k = 0; k < 6; ++k) {
      if (rng() % 2) flipped.col(k) *= -1.0;
      if (rng() % 2) flipped2.col(k) *= -1.0;
    }
    CHECK(orbital_similarity(flipped, flipped2, e, e, 4) == base);
  }

  // energies listed out of order: pairing follows rank, not column index
  Vector shuffled(6);
  shuffled << 2, -3, 1, -1, 0.5, -2;  // ranks: col1, col5, col3, col4, col2, col0
  const int rank_cols[] = {1, 5, 3, 4, 2, 0};
  double want = 0.0;
  for (int k = 0; k < 3; ++k) {
    want += std::abs(q.col(rank_cols[k]).dot(q2.col(k))) /
            (q.col(rank_cols[k]).norm() * q2.col(k).norm());
  }
  CHECK(orbital_similarity(q, q2, shuffled, e, 3) == doctest::Approx(want / 3.0).epsilon(1e-14));
  CHECK(code_of([&] { orbital_similarity(q, q2.leftCols(5), e, e, 2); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("block and energy errors on hand fixtures") {
  // two atoms: a heavy atom (2 orbitals) then hydrogen (1)
  const std::vector<Element> el = {Element::C, Element::H};
  const BlockLayout l = layout(el);
  Matrix truth(3, 3);
  truth << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  CHECK(mae_blocks(truth, truth, l).all == 0.0);

  Matrix pred = truth;
  pred(0, 0) += 0.5;
  pred(0, 1) -= 0.5;
  pred(1, 0) -= 0.5;
  pred(1, 1) += 0.5;
  pred(2, 2) -= 0.5;
  BlockMae m = mae_blocks(pred, truth, l);
  CHECK(m.diag == 0.5);
  CHECK(m.offdiag == 0.0);
  CHECK(m.diag_count == 5);
  CHECK(m.offdiag_count == 4);

  pred = truth;
  pred(0, 2) = pred(2, 0) = 3.25;   // +0.25 twice
  pred(1, 2) = pred(2, 1) = 4.0;    // -1 twice
  pred(1, 1) = 4.75;                // +0.75 once
  m = mae_blocks(pred, truth, l);
  CHECK(m.offdiag == (0.25 * 2 + 1.0 * 2) / 4.0);
  CHECK(m.diag == 0.75 / 5.0);
  CHECK(m.all == (0.5 + 2.0 + 0.75) / 9.0);
  CHECK(code_of([&] { mae_blocks(pred.topLeftCorner(2, 2), truth, l); }) ==
        ErrorCode::DimensionMismatch);

  Vector a(5), b(5);
  a << -2.0, -1.5, -0.25, 0.5, 1.0;
  b << -2.5, -1.0, -0.5, 3.0, 4.0;
  CHECK(mae_energies(a, a, 3) == 0.0);
  CHECK(mae_energies((a.array() + 0.125).matrix(), a, 3) == 0.125);
  CHECK(mae_energies(a, b, 3) == (0.5 + 0.5 + 0.25) / 3.0);
}

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

// Quick invariant checks run by `geoham selftest`.

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>

#include "cli.hpp"
#include "geoham/error.hpp"
#include "geoham/screening.hpp"
#include "geoham/training.hpp"

namespace geoham::cli {

namespace {

Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = u(rng);
  return 0.5 * (a + a.transpose());
}

bool check_eigensolver() {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 40; ++trial) {
    const Matrix a = random_symmetric(rng, 1 + trial % 20);
    const EigenPairs e = jacobi_eigh(a);
    const double scale = std::max(1.0, a.cwiseAbs().rowwise().sum().maxCoeff());
    const Matrix resid = a * e.vectors - e.vectors * e.values.asDiagonal();
    const Matrix ortho = e.vectors.transpose() * e.vectors - Matrix::Identity(a.rows(), a.cols());
    if (resid.cwiseAbs().maxCoeff() > 1e-10 * scale || ortho.cwiseAbs().maxCoeff() > 1e-10) {
      return false;
    }
  }
  return true;
}

bool check_generalized() {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 10;
    const Matrix h = random_symmetric(rng, n);
    const Matrix b = random_symmetric(rng, n);
    const Matrix s = b * b.transpose() + Matrix::Identity(n, n);
    const SpectralResult r = solve_gev(h, s, 2);
    const Matrix resid = h * r.coefficients - s * r.coefficients * r.energies.asDiagonal();
    const Matrix ortho =
        r.coefficients.transpose() * s * r.coefficients - Matrix::Identity(n, n);
    if (resid.cwiseAbs().maxCoeff() > 1e-8 || ortho.cwiseAbs().maxCoeff() > 1e-8) return false;
  }
  return true;
}

bool check_rotation() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int d : {2, 5, 16, 64}) {
    Matrix angles(1, d - 1);
    for (Eigen::Index i = 0; i < angles.size(); ++i) angles(i) = u(rng);
    const Matrix r = build_rotation(angles);
    if ((r.transpose() * r - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10) return false;
  }
  Matrix t(3, 8);
  for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = u(rng);
  return compensate(t, neutral_affine(8, 2)) == t;
}

bool check_head_symmetry() {
  ModelConfig mc;
  mc.width = 8;
  const Model model(mc);
  for (const char* s : {"CCO", "c1ccccc1N", "OC(=O)CCl"}) {
    const Matrix h = predict_from_smiles(model, s).first;
    if (h != h.transpose()) return false;
  }
  return true;
}

bool check_geometry_invariance() {
  ModelConfig mc;
  mc.width = 8;
  const Model model(mc);
  const DatasetRecord rec = make_record(0, "OCC(N)C=O", 5);
  const Coordinates& x = rec.coords();
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(0.7, Eigen::Vector3d(1.0, 2.0, -0.5).normalized()).toRotationMatrix();
  Coordinates y = x * rot.transpose();
  y.rowwise() += Eigen::RowVector3d(1.5, -2.0, 0.25);
  Context a(false);
  Context b(false);
  const Matrix va = model.geo.encode(a, rec.elements, x).value();
  const Matrix vb = model.geo.encode(b, rec.elements, y).value();
  const HuckelLabels la = huckel_labels(rec.elements, x);
  const HuckelLabels lb = huckel_labels(rec.elements, y);
  return (va - vb).cwiseAbs().maxCoeff() < 1e-10 && (la.h - lb.h).cwiseAbs().maxCoeff() < 1e-10;
}

bool check_screening() {
  const std::vector<double> pred = {0.20, 0.27, 0.31, 0.35, 0.40, 0.29};
  const std::vector<double> truth = {0.25, 0.30, 0.27, 0.37, 0.33, 0.24};
  const std::vector<double> th = {0.30};
  const ScreenRow r = classify_by_gap(pred, truth, th)[0];
  return r.tp == 2 && r.fp == 1 && r.tn == 3 && r.fn == 0;
}

bool check_gradients() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix x(3, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
  const std::vector<diff::ScalarFunction> fns = {
      [](diff::Tape&, const Var& v) { return diff::sum(diff::tanh(v)); },
      [](diff::Tape&, const Var& v) { return diff::sum(diff::row_softmax(v) * v); },
      [](diff::Tape&, const Var& v) { return diff::mean(diff::normalize_rows(v)); },
      [](diff::Tape&, const Var& v) {
        return diff::sum(diff::matmul(v, diff::transpose(v)));
      },
  };
  for (const auto& f : fns) {
    if (diff::grad_check(f, x) >= 1e-4) return false;
  }
  return true;
}

bool check_checkpoint() {
  ModelConfig mc;
  mc.width = 8;
  const Model model(mc);
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "geoham_selftest.ckpt";
  save_checkpoint(path, model, nullptr, "");
  const auto loaded = model_from_checkpoint(load_checkpoint(path));
  std::filesystem::remove(path);
  for (std::size_t i = 0; i < model.params.all().size(); ++i) {
    if (model.params.all()[i].value != loaded->params.all()[i].value) return false;
  }
  return true;
}

}  // namespace

int selftest() {
  const std::pair<const char*, std::function<bool()>> checks[] = {
      {"jacobi eigensolver residual and orthogonality", check_eigensolver},
      {"generalized eigenproblem", check_generalized},
      {"Givens rotation and neutral affine map", check_rotation},
      {"predicted Hamiltonian symmetry", check_head_symmetry},
      {"rigid-motion invariance", check_geometry_invariance},
      {"screening confusion counts", check_screening},
      {"gradient checks", check_gradients},
      {"checkpoint round trip", check_checkpoint},
  };
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      std::cerr << name << ": " << e.what() << '\n';
    }
    std::cout << (ok ? "ok    " : "FAIL  ") << name << '\n';
    failed += ok ? 0 : 1;
  }
  return failed == 0 ? kOk : kFailure;
}

}  // namespace geoham::cli

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

// Overlap model, dense symmetric eigensolvers and the evaluation metrics.

#include <span>

#include <Eigen/Dense>

#include "geoham/basis.hpp"
#include "geoham/geometry.hpp"

namespace geoham {

using Vector = Eigen::VectorXd;

// Overlap of normalized s-type Gaussians with exponents a, b (bohr^-2) whose
// centers are r_bohr apart.
double gaussian_overlap(double a, double b, double r_bohr);

// Gram matrix of the basis functions placed on `coords` (Angstrom). The
// first orbital of an atom is its normalized Gaussian; the second is the
// atom's other Gaussian orthogonalized against the first, so same-atom
// off-diagonal entries are zero.
Matrix toy_overlap(std::span<const Element> elements, const Coordinates& coords,
                   const OrbitalBasis& basis = OrbitalBasis::toy());

struct EigenPairs {
  Vector values;   // ascending
  Matrix vectors;  // columns
  int sweeps = 0;
};

inline constexpr int kMaxJacobiSweeps = 100;
inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kOverlapRidge = 1e-10;

// Cyclic Jacobi with threshold sweeps. Throws NotSymmetric, NoConvergence.
EigenPairs jacobi_eigh(const Matrix& a);

// S^{-1/2}; throws NotPositiveDefinite when an eigenvalue is <= kOverlapRidge.
Matrix lowdin_inv_sqrt(const Matrix& s);

struct SpectralResult {
  Vector energies;  // ascending, Hartree
  Matrix coefficients;
  int n_occ = 0;
  int homo = 0;
  int lumo = 0;
  double homo_energy = 0.0;
  double lumo_energy = 0.0;
  double gap_ev = 0.0;
};

// H C = S C diag(eps) through X = S^{-1/2}. Throws OddElectronCount,
// DimensionMismatch, InvalidArgument (no LUMO) and numeric errors.
SpectralResult solve_gev(const Matrix& h, const Matrix& s, int electrons);

// Mean |cosine| between occupied orbitals paired by energy rank.
double orbital_similarity(const Matrix& c_pred, const Matrix& c_true, const Vector& e_pred,
                          const Vector& e_true, int n_occ);

struct BlockMae {
  double diag = 0.0;
  double offdiag = 0.0;
  double all = 0.0;
  std::size_t diag_count = 0;
  std::size_t offdiag_count = 0;
};
BlockMae mae_blocks(const Matrix& pred, const Matrix& truth, const BlockLayout& layout);

// Mean |difference| over the n_occ lowest energies of each spectrum.
double mae_energies(const Vector& e_pred, const Vector& e_true, int n_occ);

}  // namespace geoham

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

#include "geoham/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "geoham/error.hpp"

namespace geoham {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " is not square");
  }
}

std::vector<Eigen::Index> ascending_order(const Vector& v) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  return idx;
}

}  // namespace

double gaussian_overlap(double a, double b, double r_bohr) {
  const double pref = std::pow(2.0 * std::sqrt(a * b) / (a + b), 1.5);
  return pref * std::exp(-a * b / (a + b) * r_bohr * r_bohr);
}

Matrix toy_overlap(std::span<const Element> elements, const Coordinates& coords,
                   const OrbitalBasis& basis) {
  if (coords.rows() != static_cast<Eigen::Index>(elements.size())) {
    throw Error(ErrorCode::DimensionMismatch, "coordinates and elements differ in length");
  }
  if (!coords.allFinite()) throw Error(ErrorCode::NonFiniteCoordinate, "overlap coordinates");
  const BlockLayout l = layout(elements, basis);
  const auto n = static_cast<Eigen::Index>(l.n_orb);
  std::vector<double> exponent;
  for (Element e : elements) {
    for (const OrbitalSpec& o : basis.orbitals(e)) exponent.push_back(o.exponent);
  }
  // Overlaps of the raw Gaussians.
  Matrix g = Matrix::Identity(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = r + 1; c < n; ++c) {
      const auto ar = static_cast<Eigen::Index>(l.atom[static_cast<std::size_t>(r)]);
      const auto ac = static_cast<Eigen::Index>(l.atom[static_cast<std::size_t>(c)]);
      const double dist = ar == ac ? 0.0 : (coords.row(ar) - coords.row(ac)).norm() * kBohrPerAngstrom;
      g(r, c) = g(c, r) = gaussian_overlap(exponent[static_cast<std::size_t>(r)],
                                           exponent[static_cast<std::size_t>(c)], dist);
    }
  }
  // Second orbital of an atom: its Gaussian minus the projection on the
  // first, renormalized. S = T G T^T with block-diagonal T.
  Matrix t = Matrix::Identity(n, n);
  for (std::size_t a = 0; a < l.n_atoms(); ++a) {
    if (l.count[a] < 2) continue;
    const auto o = static_cast<Eigen::Index>(l.offset[a]);
    const double sigma = g(o, o + 1);
    const double norm = std::sqrt(1.0 - sigma * sigma);
    t(o + 1, o) = -sigma / norm;
    t(o + 1, o + 1) = 1.0 / norm;
  }
  Matrix s = t * g * t.transpose();
  for (Eigen::Index r = 0; r < n; ++r) {
    s(r, r) = 1.0;
    for (Eigen::Index c = r + 1; c < n; ++c) {
      if (l.same_atom(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) s(r, c) = 0.0;
      s(c, r) = s(r, c);
    }
  }
  return s;
}

EigenPairs jacobi_eigh(const Matrix& input) {
  require_square(input, "eigen input");
  const Eigen::Index n = input.rows();
  if (!input.allFinite()) throw Error(ErrorCode::NonFiniteValue, "eigen input");
  const double scale = std::max(1.0, input.cwiseAbs().rowwise().sum().maxCoeff());
  const double asym = (input - input.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * scale) {
    throw Error(ErrorCode::NotSymmetric, "max asymmetry " + std::to_string(asym));
  }
  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(n, n);
  EigenPairs out;

  for (int sweep = 0;; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += std::abs(a(p, q));
    }
    if (off == 0.0) {
      out.sweeps = sweep;
      break;
    }
    if (sweep == kMaxJacobiSweeps) {
      throw Error(ErrorCode::NoConvergence,
                  "jacobi did not converge in " + std::to_string(kMaxJacobiSweeps) + " sweeps");
    }
    // Early sweeps skip small elements; later ones flush negligible ones.
    const double threshold = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        if (std::abs(apq) <= threshold || apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  const Vector diag = a.diagonal();
  const auto order = ascending_order(diag);
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = diag(order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

Matrix lowdin_inv_sqrt(const Matrix& s) {
  const EigenPairs e = jacobi_eigh(s);
  if (e.values.size() == 0) return Matrix(0, 0);
  if (e.values(0) <= kOverlapRidge) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "overlap eigenvalue " + std::to_string(e.values(0)));
  }
  const Vector inv_sqrt = e.values.array().rsqrt();
  const Matrix x = e.vectors * inv_sqrt.asDiagonal() * e.vectors.transpose();
  return 0.5 * (x + x.transpose());
}

SpectralResult solve_gev(const Matrix& h, const Matrix& s, int electrons) {
  require_square(h, "H");
  require_square(s, "S");
  if (h.rows() != s.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "H is " + std::to_string(h.rows()) + ", S is " +
                                                  std::to_string(s.rows()));
  }
  if (electrons % 2 != 0) {
    throw Error(ErrorCode::OddElectronCount, std::to_string(electrons) + " electrons");
  }
  const int n_occ = electrons / 2;
  if (n_occ < 1 || n_occ >= h.rows()) {
    throw Error(ErrorCode::InvalidArgument, std::to_string(n_occ) + " occupied orbitals for " +
                                                std::to_string(h.rows()) + " basis functions");
  }
  const double scale = std::max(1.0, h.cwiseAbs().rowwise().sum().maxCoeff());
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw Error(ErrorCode::NotSymmetric, "H");
  }
  const Matrix x = lowdin_inv_sqrt(s);
  Matrix hp = x * h * x;
  hp = 0.5 * (hp + hp.transpose());
  const EigenPairs e = jacobi_eigh(hp);

  SpectralResult r;
  r.energies = e.values;
  r.coefficients = x * e.vectors;
  r.n_occ = n_occ;
  r.homo = n_occ - 1;
  r.lumo = n_occ;
  r.homo_energy = r.energies(r.homo);
  r.lumo_energy = r.energies(r.lumo);
  r.gap_ev = (r.lumo_energy - r.homo_energy) * kHartreeToEv;
  return r;
}

double orbital_similarity(const Matrix& c_pred, const Matrix& c_true, const Vector& e_pred,
                          const Vector& e_true, int n_occ) {
  if (c_pred.rows() != c_true.rows() || c_pred.cols() != c_true.cols() ||
      e_pred.size() != c_pred.cols() || e_true.size() != c_true.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "orbital sets differ in shape");
  }
  if (n_occ < 1 || n_occ > c_pred.cols()) {
    throw Error(ErrorCode::InvalidArgument, "occupied count out of range");
  }
  const auto op = ascending_order(e_pred);
  const auto ot = ascending_order(e_true);
  double acc = 0.0;
  for (int k = 0; k < n_occ; ++k) {
    const auto a = c_pred.col(op[static_cast<std::size_t>(k)]);
    const auto b = c_true.col(ot[static_cast<std::size_t>(k)]);
    const double denom = a.norm() * b.norm();
    if (denom == 0.0) throw Error(ErrorCode::ZeroNormRow, "zero orbital coefficients");
    acc += std::abs(a.dot(b)) / denom;
  }
  return acc / n_occ;
}

BlockMae mae_blocks(const Matrix& pred, const Matrix& truth, const BlockLayout& layout) {
  const auto n = static_cast<Eigen::Index>(layout.n_orb);
  if (pred.rows() != n || pred.cols() != n || truth.rows() != n || truth.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "matrices do not match layout of " +
                                                  std::to_string(n) + " orbitals");
  }
  BlockMae m;
  double sd = 0.0;
  double so = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double e = std::abs(pred(r, c) - truth(r, c));
      if (layout.same_atom(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) {
        sd += e;
        ++m.diag_count;
      } else {
        so += e;
        ++m.offdiag_count;
      }
    }
  }
  m.diag = m.diag_count ? sd / static_cast<double>(m.diag_count) : 0.0;
  m.offdiag = m.offdiag_count ? so / static_cast<double>(m.offdiag_count) : 0.0;
  m.all = n ? (sd + so) / static_cast<double>(n * n) : 0.0;
  return m;
}

double mae_energies(const Vector& e_pred, const Vector& e_true, int n_occ) {
  if (e_pred.size() != e_true.size()) {
    throw Error(ErrorCode::DimensionMismatch, "spectra differ in length");
  }
  if (n_occ < 1 || n_occ > e_pred.size()) {
    throw Error(ErrorCode::InvalidArgument, "occupied count out of range");
  }
  const auto op = ascending_order(e_pred);
  const auto ot = ascending_order(e_true);
  double acc = 0.0;
  for (int k = 0; k < n_occ; ++k) {
    acc += std::abs(e_pred(op[static_cast<std::size_t>(k)]) - e_true(ot[static_cast<std::size_t>(k)]));
  }
  return acc / n_occ;
}

}  // namespace geoham

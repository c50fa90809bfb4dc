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

#include "geoham/compensation.hpp"

#include <cmath>

#include "geoham/error.hpp"

namespace geoham {

namespace {

// Offset making softplus(raw + offset) == 1 at raw == 0.
const double kScaleOffset = std::log(std::exp(1.0) - 1.0);
constexpr double kHeadGain = 0.05;

void check_same_shape(const Var& a, const Var& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()));
  }
}

void apply_givens_right(Matrix& m, Eigen::Index i, double c, double s) {
  // m <- m * G where G is the identity except G(i,i)=c, G(i,i+1)=-s,
  // G(i+1,i)=s, G(i+1,i+1)=c.
  const Eigen::VectorXd ci = m.col(i);
  const Eigen::VectorXd cj = m.col(i + 1);
  m.col(i) = c * ci + s * cj;
  m.col(i + 1) = -s * ci + c * cj;
}

void apply_givens_left(Matrix& m, Eigen::Index i, double c, double s) {
  // m <- G * m
  const Eigen::RowVectorXd ri = m.row(i);
  const Eigen::RowVectorXd rj = m.row(i + 1);
  m.row(i) = c * ri - s * rj;
  m.row(i + 1) = s * ri + c * rj;
}

void apply_givens_left_transposed(Matrix& m, Eigen::Index i, double c, double s) {
  const Eigen::RowVectorXd ri = m.row(i);
  const Eigen::RowVectorXd rj = m.row(i + 1);
  m.row(i) = c * ri + s * rj;
  m.row(i + 1) = -s * ri + c * rj;
}

}  // namespace

Disentangler Disentangler::create(ParameterSet& ps, int width, std::mt19937_64& rng,
                                  const std::string& prefix) {
  Disentangler d;
  d.u = Mlp::create(ps, prefix + ".u", width, width, width, rng);
  d.t = Mlp::create(ps, prefix + ".t", width, width, width, rng);
  d.v_plus = Mlp::create(ps, prefix + ".vplus", width, width, width, rng);
  d.v_minus = Mlp::create(ps, prefix + ".vminus", width, width, width, rng);
  return d;
}

Var attention_matrix(Context& ctx, const Disentangler& p, const Var& v, const Var& t) {
  check_same_shape(v, t, "attention_matrix");
  const Var u = diff::normalize_rows(p.u(ctx, v));
  const Var k = diff::normalize_rows(p.t(ctx, t));
  return diff::row_softmax(diff::matmul(u, diff::transpose(k)));
}

Disentangled disentangle(Context& ctx, const Disentangler& p, const Var& v, const Var& t) {
  Disentangled out;
  out.beta = attention_matrix(ctx, p, v, t);
  const Eigen::Index n = v.rows();
  const Var complement = ctx.constant(Matrix::Identity(n, n)) - out.beta;
  out.plus = diff::matmul(out.beta, p.v_plus(ctx, v));
  out.minus = diff::matmul(complement, p.v_minus(ctx, v));
  return out;
}

AffineParams neutral_affine(int width, int shears) {
  AffineParams p;
  p.angles = Matrix::Zero(1, width - 1);
  p.scales = Matrix::Ones(1, width);
  p.p = Matrix::Zero(shears, width);
  p.w = Matrix::Zero(shears, width);
  p.b = Matrix::Zero(1, width);
  p.a = Matrix::Zero(1, width);
  p.omega = Matrix::Ones(1, width);
  p.phi = Matrix::Zero(1, width);
  return p;
}

Matrix build_rotation(const Matrix& angles) {
  const Eigen::Index d = angles.size() + 1;
  Matrix r = Matrix::Identity(d, d);
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    apply_givens_right(r, i, std::cos(angles(i)), std::sin(angles(i)));
  }
  return r;
}

Matrix build_affine(const AffineParams& p) {
  const Eigen::Index d = p.scales.size();
  const Matrix shear = Matrix::Identity(d, d) + p.p.transpose() * p.w;
  const Matrix rs = build_rotation(p.angles) * p.scales.row(0).asDiagonal();
  return rs * shear;
}

Matrix compensate(const Matrix& t, const AffineParams& p) {
  const Matrix a = build_affine(p);
  Matrix out = t * a.transpose();
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      out(i, j) += p.b(j) + p.a(j) * std::sin(p.omega(j) * t(i, j) + p.phi(j));
    }
  }
  return out;
}

Var givens_rotation(const Var& angles) {
  if (angles.rows() != 1) throw Error(ErrorCode::ShapeMismatch, "angles must be one row");
  const Matrix theta = angles.value();
  const Eigen::Index d = theta.cols() + 1;
  return angles.tape()->record(
      build_rotation(theta), {angles}, [angles, theta, d](diff::Tape& tape, const Matrix& g) {
        const Eigen::Index planes = d - 1;
        // suffix[k] = G_k G_{k+1} ... G_{planes-1}; suffix[planes] = I
        std::vector<Matrix> suffix(static_cast<std::size_t>(planes + 1));
        suffix[static_cast<std::size_t>(planes)] = Matrix::Identity(d, d);
        for (Eigen::Index k = planes - 1; k >= 0; --k) {
          Matrix m = suffix[static_cast<std::size_t>(k + 1)];
          apply_givens_left(m, k, std::cos(theta(k)), std::sin(theta(k)));
          suffix[static_cast<std::size_t>(k)] = std::move(m);
        }
        Matrix left = g;  // prefix^T * g
        Matrix grad(1, planes);
        for (Eigen::Index k = 0; k < planes; ++k) {
          const double c = std::cos(theta(k));
          const double s = std::sin(theta(k));
          const Matrix& next = suffix[static_cast<std::size_t>(k + 1)];
          const double m00 = left.row(k).dot(next.row(k));
          const double m01 = left.row(k).dot(next.row(k + 1));
          const double m10 = left.row(k + 1).dot(next.row(k));
          const double m11 = left.row(k + 1).dot(next.row(k + 1));
          grad(k) = -s * m00 - c * m01 + c * m10 - s * m11;
          apply_givens_left_transposed(left, k, c, s);
        }
        tape.accumulate(angles, grad);
      });
}

Var affine_matrix(const AffineVars& p) {
  diff::Tape& tape = *p.scales.tape();
  const Eigen::Index d = p.scales.cols();
  const Var shear =
      tape.constant(Matrix::Identity(d, d)) + diff::matmul(diff::transpose(p.p), p.w);
  const Var rs = diff::mul(givens_rotation(p.angles), p.scales);
  return diff::matmul(rs, shear);
}

Var compensate(const Var& t, const AffineVars& p) {
  const Var a = affine_matrix(p);
  const Var linear = diff::matmul(t, diff::transpose(a));
  const Var wave = diff::mul(p.a, diff::sin(diff::add(diff::mul(t, p.omega), p.phi)));
  return linear + p.b + wave;
}

ParamGenerator ParamGenerator::create(ParameterSet& ps, const GeneratorConfig& cfg,
                                      std::mt19937_64& rng, const std::string& prefix) {
  if (cfg.width < 2 || cfg.shears < 0) {
    throw Error(ErrorCode::InvalidArgument, "generator width/shears");
  }
  ParamGenerator g;
  g.cfg_ = cfg;
  const int d = cfg.width;
  auto head = [&](const std::string& name, int out, double bias) {
    Linear l = Linear::create(ps, prefix + "." + name, d, out, rng, kHeadGain);
    l.bias->value.setConstant(bias);
    return l;
  };
  g.hidden_ = Linear::create(ps, prefix + ".hidden", d, d, rng);
  g.angles_ = head("angles", d - 1, 0.0);
  g.scales_ = head("scales", d, 0.0);
  g.b_ = head("shift", d, 0.0);
  g.a_ = head("amplitude", d, 0.01);
  g.omega_ = head("frequency", d, 1.0);
  g.phi_ = head("phase", d, 0.0);
  for (int k = 0; k < cfg.shears; ++k) {
    Linear p = head("shear_p" + std::to_string(k), d, 0.0);
    p.bias->value = uniform_init(rng, 1, d, 0.1);
    g.p_.push_back(p);
    g.w_.push_back(head("shear_w" + std::to_string(k), d, 0.0));
  }
  return g;
}

AffineVars ParamGenerator::operator()(Context& ctx, const Var& v_minus) const {
  const Var h = diff::tanh(hidden_(ctx, diff::mean_rows(v_minus)));
  AffineVars out;
  out.angles = angles_(ctx, h);
  out.scales = diff::softplus(diff::shift(scales_(ctx, h), kScaleOffset));
  out.b = b_(ctx, h);
  out.a = a_(ctx, h);
  out.omega = omega_(ctx, h);
  out.phi = phi_(ctx, h);
  std::vector<Var> ps, ws;
  for (std::size_t k = 0; k < p_.size(); ++k) {
    ps.push_back(p_[k](ctx, h));
    ws.push_back(w_[k](ctx, h));
  }
  if (ps.empty()) {
    out.p = ctx.constant(Matrix::Zero(1, cfg_.width));
    out.w = ctx.constant(Matrix::Zero(1, cfg_.width));
  } else {
    out.p = diff::concat_rows(ps);
    out.w = diff::concat_rows(ws);
  }
  return out;
}

Var discrepancy_loss(const Var& v, const Var& t_star, const Var& t, const Var& v_plus,
                     double lambda1) {
  check_same_shape(v, t_star, "discrepancy_loss");
  check_same_shape(t, v_plus, "discrepancy_loss");
  check_same_shape(v, t, "discrepancy_loss");
  if (!(lambda1 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda1 must be >= 0");
  const Var first = diff::mean(diff::smooth_l1(v, t_star));
  if (lambda1 == 0.0) return first;
  return first + diff::scale(diff::mean(diff::smooth_l1(t, v_plus)), lambda1);
}

}  // namespace geoham

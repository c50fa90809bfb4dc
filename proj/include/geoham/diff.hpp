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

// Tape-based reverse-mode differentiation over dense double matrices.
//
// Every value is a rows x cols matrix; vectors are 1 x d rows and scalars are
// 1 x 1. Binary elementwise ops broadcast a dimension of extent 1. The tape is
// append-only and its append order is a valid topological order, so backward
// is a single reverse sweep.

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace geoham::diff {

using Matrix = Eigen::MatrixXd;

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;  // empty until backward reaches this node
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Receives the gradient flowing into the node and pushes contributions to
  // its parents through accumulate().
  using Backward = std::function<void(Tape&, const Matrix&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value);
  // Records a derived node. The backward closure is dropped when no parent
  // requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> parents, Backward backward);
  Var record(Matrix value, std::span<const Var> parents, Backward backward);

  void accumulate(const Var& v, const Matrix& g);
  void backward(const Var& root);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::deque<Node> nodes_;
};

// Elementwise with broadcasting of unit dimensions.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var scale(const Var& a, double s);
Var shift(const Var& a, double s);  // a + s
Var neg(const Var& a);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var square(const Var& a);
Var abs(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);  // log(1 + e^a), overflow safe

Var row_softmax(const Var& a);

Var sum(const Var& a);        // 1 x 1
Var mean(const Var& a);       // 1 x 1
Var mean_rows(const Var& a);  // 1 x cols, average over rows
Var row_sum(const Var& a);    // rows x 1

// rows x 1 cosine between matching rows; throws ZeroNormRow.
Var cosine_rows(const Var& a, const Var& b);
// Rows scaled to unit norm; throws ZeroNormRow.
Var normalize_rows(const Var& a);

// Elementwise smooth L1 (Huber with transition at 1).
Var smooth_l1(const Var& a, const Var& b);

Var gather_rows(const Var& a, std::span<const std::size_t> rows);
Var concat_rows(std::span<const Var> parts);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }

inline constexpr double kSmoothL1Delta = 1.0;

using ScalarFunction = std::function<Var(Tape&, const Var&)>;

// Max over coordinates of |analytic - central difference| /
// max(1, |central difference|). eps must lie in [1e-7, 1e-3].
double grad_check(const ScalarFunction& f, const Matrix& x, double eps = 1e-5);

}  // namespace geoham::diff

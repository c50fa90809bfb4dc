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

#include "geoham/diff.hpp"

#include <algorithm>
#include <cmath>

#include "geoham/error.hpp"

namespace geoham::diff {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Eigen::Index broadcast_dim(Eigen::Index a, Eigen::Index b) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  return -1;
}

void broadcast_shape(const Matrix& a, const Matrix& b, const char* op, Eigen::Index& rows,
                     Eigen::Index& cols) {
  rows = broadcast_dim(a.rows(), b.rows());
  cols = broadcast_dim(a.cols(), b.cols());
  if (rows < 0 || cols < 0) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(op) + " of " + shape_str(a) + " and " + shape_str(b));
  }
}

Matrix expand(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

Matrix reduce_to(const Matrix& g, Eigen::Index rows, Eigen::Index cols) {
  Matrix r = g;
  if (r.rows() != rows) r = r.colwise().sum().eval();
  if (r.cols() != cols) r = r.rowwise().sum().eval();
  return r;
}

Tape& same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape() || a.tape() == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "operands live on different tapes");
  }
  return *a.tape();
}

template <class F, class D>
Var unary(const Var& a, F forward, D derivative_from_xy) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Matrix y = x.unaryExpr(forward);
  return t.record(std::move(y), {a}, [a, derivative_from_xy](Tape& tape, const Matrix& g) {
    const Matrix& x = a.value();
    Matrix d(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) d(i) = derivative_from_xy(x(i));
    tape.accumulate(a, g.cwiseProduct(d));
  });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Eigen::VectorXd row_norms(const Matrix& a, const char* op) {
  Eigen::VectorXd n = a.rowwise().norm();
  for (Eigen::Index i = 0; i < n.size(); ++i) {
    if (n(i) == 0.0) {
      throw Error(ErrorCode::ZeroNormRow, std::string(op) + ": row " + std::to_string(i));
    }
  }
  return n;
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw Error(ErrorCode::ShapeMismatch, "scalar() on " + shape_str(v));
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), true, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw Error(ErrorCode::InvalidArgument, "parent from another tape");
    needs = needs || requires_grad(p.id());
  }
  nodes_.push_back(Node{std::move(value), Matrix(), needs, needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(const Var& v, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                "gradient " + shape_str(g) + " for value " + shape_str(n.value));
  }
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(const Var& root) {
  if (root.tape() != this) throw Error(ErrorCode::InvalidArgument, "root from another tape");
  if (root.value().size() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "backward needs a scalar root, got " +
                                              shape_str(root.value()));
  }
  if (!requires_grad(root.id())) return;
  accumulate(root, Matrix::Ones(1, 1));
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) n.backward(*this, n.grad);
  }
}

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  Eigen::Index r, c;
  broadcast_shape(a.value(), b.value(), "add", r, c);
  Matrix y = expand(a.value(), r, c) + expand(b.value(), r, c);
  return t.record(std::move(y), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a, reduce_to(g, a.rows(), a.cols()));
    tape.accumulate(b, reduce_to(g, b.rows(), b.cols()));
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  Eigen::Index r, c;
  broadcast_shape(a.value(), b.value(), "sub", r, c);
  Matrix y = expand(a.value(), r, c) - expand(b.value(), r, c);
  return t.record(std::move(y), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a, reduce_to(g, a.rows(), a.cols()));
    tape.accumulate(b, reduce_to(-g, b.rows(), b.cols()));
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  Eigen::Index r, c;
  broadcast_shape(a.value(), b.value(), "mul", r, c);
  Matrix y = expand(a.value(), r, c).cwiseProduct(expand(b.value(), r, c));
  return t.record(std::move(y), {a, b}, [a, b, r, c](Tape& tape, const Matrix& g) {
    if (a.requires_grad()) {
      tape.accumulate(a, reduce_to(g.cwiseProduct(expand(b.value(), r, c)), a.rows(), a.cols()));
    }
    if (b.requires_grad()) {
      tape.accumulate(b, reduce_to(g.cwiseProduct(expand(a.value(), r, c)), b.rows(), b.cols()));
    }
  });
}

Var div(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  Eigen::Index r, c;
  broadcast_shape(a.value(), b.value(), "div", r, c);
  Matrix y = expand(a.value(), r, c).cwiseQuotient(expand(b.value(), r, c));
  return t.record(std::move(y), {a, b}, [a, b, r, c](Tape& tape, const Matrix& g) {
    const Matrix bb = expand(b.value(), r, c);
    if (a.requires_grad()) tape.accumulate(a, reduce_to(g.cwiseQuotient(bb), a.rows(), a.cols()));
    if (b.requires_grad()) {
      const Matrix aa = expand(a.value(), r, c);
      Matrix gb = -g.cwiseProduct(aa).cwiseQuotient(bb.cwiseProduct(bb));
      tape.accumulate(b, reduce_to(gb, b.rows(), b.cols()));
    }
  });
}

Var scale(const Var& a, double s) {
  return a.tape()->record(a.value() * s, {a},
                          [a, s](Tape& tape, const Matrix& g) { tape.accumulate(a, g * s); });
}

Var shift(const Var& a, double s) {
  Matrix y = a.value().array() + s;
  return a.tape()->record(std::move(y), {a},
                          [a](Tape& tape, const Matrix& g) { tape.accumulate(a, g); });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::ShapeMismatch,
                "matmul of " + shape_str(a.value()) + " and " + shape_str(b.value()));
  }
  Matrix y = a.value() * b.value();
  return t.record(std::move(y), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (a.requires_grad()) tape.accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) tape.accumulate(b, a.value().transpose() * g);
  });
}

Var transpose(const Var& a) {
  return a.tape()->record(a.value().transpose(), {a}, [a](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g.transpose());
  });
}

Var square(const Var& a) {
  return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var abs(const Var& a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var exp(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log(const Var& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var sin(const Var& a) {
  return unary(a, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
}

Var cos(const Var& a) {
  return unary(a, [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double x) {
        const double y = std::tanh(x);
        return 1.0 - y * y;
      });
}

Var sigmoid(const Var& a) {
  return unary(a, stable_sigmoid, [](double x) {
    const double y = stable_sigmoid(x);
    return y * (1.0 - y);
  });
}

Var softplus(const Var& a) { return unary(a, stable_softplus, stable_sigmoid); }

Var row_softmax(const Var& a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - m).exp().matrix();
    y.row(i) /= y.row(i).sum();
  }
  Matrix yv = y;
  return a.tape()->record(std::move(y), {a}, [a, yv](Tape& tape, const Matrix& g) {
    const Eigen::VectorXd dot = g.cwiseProduct(yv).rowwise().sum();
    tape.accumulate(a, yv.cwiseProduct(g - dot.replicate(1, g.cols())));
  });
}

Var sum(const Var& a) {
  Matrix y(1, 1);
  y(0, 0) = a.value().sum();
  return a.tape()->record(std::move(y), {a}, [a](Tape& tape, const Matrix& g) {
    tape.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw Error(ErrorCode::ShapeMismatch, "mean of an empty matrix");
  Matrix y(1, 1);
  y(0, 0) = a.value().sum() / n;
  return a.tape()->record(std::move(y), {a}, [a, n](Tape& tape, const Matrix& g) {
    tape.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / n));
  });
}

Var mean_rows(const Var& a) {
  const double n = static_cast<double>(a.rows());
  if (n == 0) throw Error(ErrorCode::ShapeMismatch, "mean_rows of an empty matrix");
  Matrix y = a.value().colwise().sum() / n;
  return a.tape()->record(std::move(y), {a}, [a, n](Tape& tape, const Matrix& g) {
    tape.accumulate(a, (g / n).replicate(a.rows(), 1));
  });
}

Var row_sum(const Var& a) {
  Matrix y = a.value().rowwise().sum();
  return a.tape()->record(std::move(y), {a}, [a](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g.replicate(1, a.cols()));
  });
}

Var cosine_rows(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                "cosine_rows of " + shape_str(a.value()) + " and " + shape_str(b.value()));
  }
  const Eigen::VectorXd na = row_norms(a.value(), "cosine_rows");
  const Eigen::VectorXd nb = row_norms(b.value(), "cosine_rows");
  Matrix y(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    y(i, 0) = a.value().row(i).dot(b.value().row(i)) / (na(i) * nb(i));
  }
  Matrix cosv = y;
  return t.record(std::move(y), {a, b}, [a, b, na, nb, cosv](Tape& tape, const Matrix& g) {
    const Matrix& A = a.value();
    const Matrix& B = b.value();
    Matrix ga(A.rows(), A.cols()), gb(B.rows(), B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const double c = cosv(i, 0);
      ga.row(i) = g(i, 0) * (B.row(i) / (na(i) * nb(i)) - c * A.row(i) / (na(i) * na(i)));
      gb.row(i) = g(i, 0) * (A.row(i) / (na(i) * nb(i)) - c * B.row(i) / (nb(i) * nb(i)));
    }
    tape.accumulate(a, ga);
    tape.accumulate(b, gb);
  });
}

Var normalize_rows(const Var& a) {
  const Eigen::VectorXd n = row_norms(a.value(), "normalize_rows");
  Matrix y = n.cwiseInverse().asDiagonal() * a.value();
  Matrix yv = y;
  return a.tape()->record(std::move(y), {a}, [a, n, yv](Tape& tape, const Matrix& g) {
    const Eigen::VectorXd dot = g.cwiseProduct(yv).rowwise().sum();
    Matrix ga = n.cwiseInverse().asDiagonal() * (g - dot.asDiagonal() * yv);
    tape.accumulate(a, ga);
  });
}

Var smooth_l1(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                "smooth_l1 of " + shape_str(a.value()) + " and " + shape_str(b.value()));
  }
  const Matrix d = a.value() - b.value();
  Matrix y = d.unaryExpr([](double x) {
    const double ax = std::abs(x);
    return ax < kSmoothL1Delta ? 0.5 * x * x / kSmoothL1Delta : ax - 0.5 * kSmoothL1Delta;
  });
  return t.record(std::move(y), {a, b}, [a, b, d](Tape& tape, const Matrix& g) {
    const Matrix slope = d.unaryExpr([](double x) {
      if (std::abs(x) < kSmoothL1Delta) return x / kSmoothL1Delta;
      return x > 0 ? 1.0 : -1.0;
    });
    const Matrix gd = g.cwiseProduct(slope);
    tape.accumulate(a, gd);
    tape.accumulate(b, -gd);
  });
}

Var gather_rows(const Var& a, std::span<const std::size_t> rows) {
  const Matrix& x = a.value();
  Matrix y(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= static_cast<std::size_t>(x.rows())) {
      throw Error(ErrorCode::IndexOutOfRange, "gather row " + std::to_string(rows[k]) + " of " +
                                                  std::to_string(x.rows()));
    }
    y.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(rows[k]));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return a.tape()->record(std::move(y), {a}, [a, idx](Tape& tape, const Matrix& g) {
    Matrix ga = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      ga.row(static_cast<Eigen::Index>(idx[k])) += g.row(static_cast<Eigen::Index>(k));
    }
    tape.accumulate(a, ga);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "concat_rows of nothing");
  Tape& t = *parts[0].tape();
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  for (const Var& p : parts) {
    if (p.cols() != cols) {
      throw Error(ErrorCode::ShapeMismatch, "concat_rows column mismatch " +
                                                std::to_string(p.cols()) + " vs " +
                                                std::to_string(cols));
    }
    rows += p.rows();
  }
  Matrix y(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    y.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return t.record(std::move(y), parts, [ps](Tape& tape, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : ps) {
      tape.accumulate(p, g.middleRows(off, p.rows()));
      off += p.rows();
    }
  });
}

double grad_check(const ScalarFunction& f, const Matrix& x, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw Error(ErrorCode::InvalidArgument, "grad_check eps must lie in [1e-7, 1e-3]");
  }
  Tape tape;
  const Var xv = tape.variable(x);
  const Var y = f(tape, xv);
  if (!std::isfinite(y.scalar())) throw Error(ErrorCode::NonFiniteValue, "f(x) is not finite");
  tape.backward(y);
  const Matrix analytic = xv.grad().size() ? xv.grad() : Matrix::Zero(x.rows(), x.cols());

  auto eval = [&](const Matrix& p) {
    Tape t;
    const double v = f(t, t.constant(p)).scalar();
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "perturbed f is not finite");
    return v;
  };
  double worst = 0.0;
  Matrix p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p(i) = x(i) + eps;
    const double up = eval(p);
    p(i) = x(i) - eps;
    const double down = eval(p);
    p(i) = x(i);
    const double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic(i) - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

}  // namespace geoham::diff

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

#include "geoham/nn.hpp"

#include <cmath>

#include "geoham/error.hpp"

namespace geoham {

Parameter& ParameterSet::add(std::string name, Matrix init) {
  if (find(name)) throw Error(ErrorCode::InvalidArgument, "duplicate parameter " + name);
  Parameter p;
  p.name = std::move(name);
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.m = Matrix::Zero(init.rows(), init.cols());
  p.v = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (Parameter& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const Parameter& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Parameter& ParameterSet::at(std::string_view name) {
  Parameter* p = find(name);
  if (!p) throw Error(ErrorCode::InvalidArgument, "no parameter " + std::string(name));
  return *p;
}

void ParameterSet::zero_grad() {
  for (Parameter& p : params_) p.grad.setZero();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool Context::is_frozen(const Parameter& p) const {
  for (const std::string& prefix : frozen_) {
    if (p.name.rfind(prefix, 0) == 0) return true;
  }
  return false;
}

Var Context::operator()(Parameter& p) {
  auto it = index_.find(&p);
  if (it != index_.end()) return bound_[it->second].second;
  const Var v = training_ && !is_frozen(p) ? tape_.variable(p.value) : tape_.constant(p.value);
  index_.emplace(&p, bound_.size());
  bound_.emplace_back(&p, v);
  return v;
}

void Context::bind(Parameter& p, Var v) {
  auto it = index_.find(&p);
  if (it != index_.end()) {
    bound_[it->second].second = v;
    return;
  }
  index_.emplace(&p, bound_.size());
  bound_.emplace_back(&p, v);
}

void Context::backward(const Var& loss) {
  tape_.backward(loss);
  for (auto& [param, var] : bound_) {
    if (var.requires_grad() && var.grad().size() != 0) param->grad += var.grad();
  }
}

std::vector<std::pair<Parameter*, Matrix>> Context::gradients(const Var& loss) {
  tape_.backward(loss);
  std::vector<std::pair<Parameter*, Matrix>> out;
  for (auto& [param, var] : bound_) {
    if (var.requires_grad() && var.grad().size() != 0) out.emplace_back(param, var.grad());
  }
  return out;
}

Matrix uniform_init(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  }
  return m;
}

Matrix glorot_init(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double gain) {
  return uniform_init(rng, rows, cols, gain * std::sqrt(6.0 / static_cast<double>(rows + cols)));
}

Linear Linear::create(ParameterSet& ps, const std::string& name, Eigen::Index in,
                      Eigen::Index out, std::mt19937_64& rng, double gain) {
  Linear l;
  l.weight = &ps.add(name + ".w", glorot_init(rng, in, out, gain));
  l.bias = &ps.add(name + ".b", Matrix::Zero(1, out));
  return l;
}

Var Linear::operator()(Context& ctx, const Var& x) const {
  return diff::add(diff::matmul(x, ctx(*weight)), ctx(*bias));
}

Mlp Mlp::create(ParameterSet& ps, const std::string& name, Eigen::Index in, Eigen::Index width,
                Eigen::Index out, std::mt19937_64& rng) {
  Mlp m;
  m.hidden = Linear::create(ps, name + ".0", in, width, rng);
  m.output = Linear::create(ps, name + ".1", width, out, rng);
  return m;
}

Var Mlp::operator()(Context& ctx, const Var& x) const {
  return output(ctx, diff::tanh(hidden(ctx, x)));
}

}  // namespace geoham

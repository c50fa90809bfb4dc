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

// Named parameters, per-pass binding onto a tape, and the small dense layers
// shared by the encoders and heads.

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geoham/diff.hpp"

namespace geoham {

using diff::Matrix;
using diff::Var;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  // Adam moments.
  Matrix m;
  Matrix v;
};

class ParameterSet {
 public:
  Parameter& add(std::string name, Matrix init);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }

  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::deque<Parameter> params_;
};

// One forward/backward pass. Parameters are bound lazily to tape leaves the
// first time a layer asks for them; frozen parameters become constants.
class Context {
 public:
  explicit Context(bool training = true) : training_(training) {}
  Context(const Context&) = delete;
  Context& operator=(const Context&) = delete;

  diff::Tape& tape() { return tape_; }
  Var constant(Matrix m) { return tape_.constant(std::move(m)); }

  Var operator()(Parameter& p);
  // Routes `p` through an existing tape node instead of a fresh leaf.
  void bind(Parameter& p, Var v);
  void freeze_prefix(std::string prefix) { frozen_.push_back(std::move(prefix)); }
  bool is_frozen(const Parameter& p) const;
  bool training() const { return training_; }

  // Runs backward and adds leaf gradients into Parameter::grad in bind order.
  void backward(const Var& loss);
  // Runs backward and returns the leaf gradients instead of adding them.
  std::vector<std::pair<Parameter*, Matrix>> gradients(const Var& loss);

 private:
  diff::Tape tape_;
  bool training_;
  std::vector<std::pair<Parameter*, Var>> bound_;
  std::unordered_map<const Parameter*, std::size_t> index_;
  std::vector<std::string> frozen_;
};

Matrix uniform_init(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double bound);
// Glorot-uniform bound scaled by `gain`.
Matrix glorot_init(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                   double gain = 1.0);

struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  static Linear create(ParameterSet& ps, const std::string& name, Eigen::Index in,
                       Eigen::Index out, std::mt19937_64& rng, double gain = 1.0);
  Var operator()(Context& ctx, const Var& x) const;
};

// Two-layer tanh perceptron.
struct Mlp {
  Linear hidden;
  Linear output;

  static Mlp create(ParameterSet& ps, const std::string& name, Eigen::Index in,
                    Eigen::Index width, Eigen::Index out, std::mt19937_64& rng);
  Var operator()(Context& ctx, const Var& x) const;
};

}  // namespace geoham

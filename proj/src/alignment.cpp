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

#include "geoham/alignment.hpp"

#include <cmath>

#include "geoham/compensation.hpp"
#include "geoham/error.hpp"

namespace geoham {

Aligner Aligner::create(ParameterSet& ps, int width, std::mt19937_64& rng,
                        const std::string& prefix) {
  Aligner a;
  a.wq = &ps.add(prefix + ".wq", glorot_init(rng, width, width));
  a.wk = &ps.add(prefix + ".wk", glorot_init(rng, width, width));
  a.wv = &ps.add(prefix + ".wv", glorot_init(rng, width, width));
  a.log_tau = &ps.add(prefix + ".log_tau", Matrix::Constant(1, 1, std::log(kInitialTemperature)));
  return a;
}

std::vector<Var> segment_embeddings(const Var& emb, const AtomGroups& fragments) {
  std::vector<Var> out;
  out.reserve(fragments.size());
  for (const auto& atoms : fragments) {
    if (atoms.empty()) throw Error(ErrorCode::IndexOutOfRange, "empty fragment");
    out.push_back(diff::gather_rows(emb, atoms));
  }
  return out;
}

Var contextual_pool(Context& ctx, const Aligner& p, const Var& t_frag, const Var& v_frag) {
  if (t_frag.cols() != v_frag.cols() || t_frag.cols() != p.wq->value.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "contextual_pool width");
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(t_frag.cols()));
  const Var q = diff::matmul(t_frag, ctx(*p.wq));
  const Var k = diff::matmul(v_frag, ctx(*p.wk));
  const Var att = diff::row_softmax(diff::scale(diff::matmul(q, diff::transpose(k)), inv_sqrt_d));
  return diff::mean_rows(diff::matmul(att, diff::matmul(v_frag, ctx(*p.wv))));
}

Var contrastive_loss(const Var& v, const Var& t, const Var& tau, ContrastiveForm form) {
  if (v.rows() == 0 || t.rows() == 0) throw Error(ErrorCode::EmptyBatch, "no fragment pairs");
  if (v.rows() != t.rows() || v.cols() != t.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "contrastive pairs");
  }
  if (tau.rows() != 1 || tau.cols() != 1) throw Error(ErrorCode::ShapeMismatch, "tau");
  const Eigen::Index n = v.rows();
  const Var cos = diff::matmul(diff::normalize_rows(v), diff::transpose(diff::normalize_rows(t)));
  const Matrix labels = 2.0 * Matrix::Identity(n, n) - Matrix::Ones(n, n);
  const Var z = diff::div(diff::mul(cos, v.tape()->constant(labels)), tau);
  if (form == ContrastiveForm::LogSigmoid) return diff::mean(diff::softplus(diff::neg(z)));
  return diff::neg(diff::mean(diff::sigmoid(diff::neg(z))));
}

PretrainTerms pretrain_terms(Context& ctx, const Aligner& p, std::span<const AlignmentSample> batch,
                             double lambda1, ContrastiveForm form, bool compensated) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "empty pretraining batch");
  std::vector<Var> discrepancy;
  std::vector<Var> v_vecs;
  std::vector<Var> t_vecs;
  for (const AlignmentSample& s : batch) {
    if (compensated) discrepancy.push_back(discrepancy_loss(s.v, s.t_star, s.t, s.v_plus, lambda1));
    const std::vector<Var> vs = segment_embeddings(s.v, s.fragments);
    const std::vector<Var> ts = segment_embeddings(s.t_star, s.fragments);
    for (std::size_t f = 0; f < vs.size(); ++f) {
      v_vecs.push_back(diff::mean_rows(vs[f]));
      t_vecs.push_back(contextual_pool(ctx, p, ts[f], vs[f]));
    }
  }
  const Var tau = diff::exp(ctx(*p.log_tau));
  PretrainTerms out;
  out.contrastive =
      contrastive_loss(diff::concat_rows(v_vecs), diff::concat_rows(t_vecs), tau, form);
  if (compensated) {
    out.discrepancy = diff::mean(diff::concat_rows(discrepancy));
    out.total = out.discrepancy + out.contrastive;
  } else {
    out.discrepancy = ctx.constant(Matrix::Zero(1, 1));
    out.total = out.contrastive;
  }
  return out;
}

Var pretrain_loss(Context& ctx, const Aligner& p, std::span<const AlignmentSample> batch,
                  double lambda1, ContrastiveForm form) {
  return pretrain_terms(ctx, p, batch, lambda1, form).total;
}

}  // namespace geoham

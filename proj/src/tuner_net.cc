/*
 * Licensed to the Apache Software Foundation (ASF) under one
 * or more contributor license agreements.  See the NOTICE file
 * distributed with this work for additional information
 * regarding copyright ownership.  The ASF licenses this file
 * to you under the Apache License, Version 2.0 (the
 * "License"); you may not use this file except in compliance
 * with the License.  You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing,
 * software distributed under the License is distributed on an
 * "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, either express or implied.  See the License for the
 * specific language governing permissions and limitations
 * under the License.
 */

#include "tuner_net.h"

#include <algorithm>
#include <limits>

#include "object_reader.h"

namespace tensortune {
namespace detail {

Json TunerArch::ToJson() const {
  Json j;
  j["layers"] = layers;
  j["hidden"] = hidden;
  j["heads"] = heads;
  j["attention_dim"] = attention_dim;
  j["unroll_steps"] = unroll_steps;
  j["head_hidden"] = head_hidden;
  return j;
}

TunerArch TunerArch::FromJson(const Json& j) {
  ObjectReader r(j, "tuner arch", false);
  TunerArch a;
  a.layers = static_cast<int>(r.Int("layers"));
  a.hidden = static_cast<int>(r.Int("hidden"));
  a.heads = static_cast<int>(r.Int("heads"));
  a.attention_dim = static_cast<int>(r.Int("attention_dim"));
  a.unroll_steps = static_cast<int>(r.Int("unroll_steps"));
  a.head_hidden = static_cast<int>(r.Int("head_hidden"));
  r.Finish();
  return a;
}

TunerNet::TunerNet(const TunerArch& arch, uint64_t seed) : arch_(arch) {
  if (arch.layers < 1 || arch.hidden < 1 || arch.heads < 1 || arch.attention_dim < 1 ||
      arch.unroll_steps < 1 || arch.head_hidden < 1) {
    throw DataError("tuner: layer, head and width counts must be positive");
  }
  const int h = arch.hidden, d_out = OutWidth(), d = arch.attention_dim;
  ParamLayout layout;
  layout.BeginGroup("recurrent");
  lstm_.resize(arch.layers);
  for (int l = 0; l < arch.layers; ++l) {
    for (int dir = 0; dir < 2; ++dir) {
      LstmOffsets p;
      p.in = l == 0 ? kStepWidth : d_out;
      p.w = layout.Add(static_cast<size_t>(p.in + h) * 4 * h);
      p.b = layout.Add(4 * h);
      lstm_[l].push_back(p);
    }
  }
  layout.EndGroup();
  layout.BeginGroup("attention");
  for (int a = 0; a < arch.heads; ++a) {
    AttnOffsets p;
    p.u = layout.Add(d_out);
    p.wq = layout.Add(static_cast<size_t>(d_out) * d);
    p.wk = layout.Add(static_cast<size_t>(d_out) * d);
    attn_.push_back(p);
  }
  layout.EndGroup();
  layout.BeginGroup("head");
  w1_ = layout.Add(static_cast<size_t>(HeadInput()) * arch.head_hidden);
  b1_ = layout.Add(arch.head_hidden);
  w2_ = layout.Add(arch.head_hidden);
  b2_ = layout.Add(1);
  layout.EndGroup();
  groups_ = layout.groups();
  params.assign(layout.total(), 0.0);

  Rng rng(SplitMix64(seed ^ 0x7e7e));
  const double lstm_limit = 1.0 / std::sqrt(static_cast<double>(h));
  for (const auto& layer : lstm_) {
    for (const auto& p : layer) {
      FillUniform(&rng, lstm_limit, &params[p.w], static_cast<size_t>(p.in + h) * 4 * h);
      FillUniform(&rng, lstm_limit, &params[p.b], 4 * h);
      for (int j = 0; j < h; ++j) params[p.b + h + j] += 1.0;  // forget gate bias
    }
  }
  const double attn_limit = 1.0 / std::sqrt(static_cast<double>(d_out));
  for (const auto& p : attn_) {
    FillUniform(&rng, 0.1, &params[p.u], d_out);
    FillUniform(&rng, attn_limit, &params[p.wq], static_cast<size_t>(d_out) * d);
    FillUniform(&rng, attn_limit, &params[p.wk], static_cast<size_t>(d_out) * d);
  }
  FillUniform(&rng, 1.0 / std::sqrt(static_cast<double>(HeadInput())), &params[w1_],
              static_cast<size_t>(HeadInput()) * arch.head_hidden);
  FillUniform(&rng, 1.0 / std::sqrt(static_cast<double>(arch.head_hidden)), &params[w2_],
              arch.head_hidden);
  context_norm.offset.assign(kContextLength, 0.0);
  context_norm.scale.assign(kContextLength, 1.0);
}

const ParamGroup& TunerNet::group(const std::string& name) const {
  for (const auto& g : groups_) {
    if (g.name == name) return g;
  }
  throw Error("tuner: unknown parameter group " + name);
}

void TunerNet::LstmForward(const LstmOffsets& p, const double* in, int steps, bool reverse,
                           DirCache* dc, double* out, int out_stride) const {
  const int h = arch_.hidden, g4 = 4 * h;
  dc->gates.assign(static_cast<size_t>(steps) * g4, 0.0);
  dc->c.assign(static_cast<size_t>(steps) * h, 0.0);
  dc->tc.assign(static_cast<size_t>(steps) * h, 0.0);
  std::vector<double> z(g4), h_prev(h, 0.0), c_prev(h, 0.0);
  const double* w_in = &params[p.w];
  const double* w_rec = w_in + static_cast<size_t>(p.in) * g4;
  for (int k = 0; k < steps; ++k) {
    const int t = reverse ? steps - 1 - k : k;
    std::copy(params.begin() + p.b, params.begin() + p.b + g4, z.begin());
    MatVecAdd(w_in, in + static_cast<size_t>(t) * p.in, p.in, g4, z.data());
    MatVecAdd(w_rec, h_prev.data(), h, g4, z.data());
    double* gates = &dc->gates[static_cast<size_t>(t) * g4];
    double* c = &dc->c[static_cast<size_t>(t) * h];
    double* tc = &dc->tc[static_cast<size_t>(t) * h];
    for (int j = 0; j < h; ++j) {
      const double i = Sigmoid(z[j]), f = Sigmoid(z[h + j]), g = std::tanh(z[2 * h + j]),
                   o = Sigmoid(z[3 * h + j]);
      gates[j] = i;
      gates[h + j] = f;
      gates[2 * h + j] = g;
      gates[3 * h + j] = o;
      c[j] = f * c_prev[j] + i * g;
      tc[j] = std::tanh(c[j]);
      h_prev[j] = o * tc[j];
      c_prev[j] = c[j];
      out[static_cast<size_t>(t) * out_stride + j] = h_prev[j];
    }
  }
}

void TunerNet::LstmBackward(const LstmOffsets& p, const double* in, const DirCache& dc, int steps,
                            bool reverse, const double* dout, int dout_stride, double* grad,
                            double* din) const {
  // Hidden outputs are recovered from the cache: h_t = o_t * tanh(c_t).
  const int h = arch_.hidden, g4 = 4 * h;
  const double* w_in = &params[p.w];
  const double* w_rec = w_in + static_cast<size_t>(p.in) * g4;
  double* gw_in = grad + p.w;
  double* gw_rec = gw_in + static_cast<size_t>(p.in) * g4;
  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), dz(g4), h_prev(h);
  for (int k = steps - 1; k >= 0; --k) {
    const int t = reverse ? steps - 1 - k : k;
    const bool has_prev = k > 0;
    const int tp = reverse ? t + 1 : t - 1;
    const double* gates = &dc.gates[static_cast<size_t>(t) * g4];
    const double* tc = &dc.tc[static_cast<size_t>(t) * h];
    for (int j = 0; j < h; ++j) {
      const double i = gates[j], f = gates[h + j], g = gates[2 * h + j], o = gates[3 * h + j];
      const double dh = dout[static_cast<size_t>(t) * dout_stride + j] + dh_next[j];
      const double dcell = dc_next[j] + dh * o * (1.0 - tc[j] * tc[j]);
      const double c_prev = has_prev ? dc.c[static_cast<size_t>(tp) * h + j] : 0.0;
      dz[j] = dcell * g * i * (1.0 - i);
      dz[h + j] = dcell * c_prev * f * (1.0 - f);
      dz[2 * h + j] = dcell * i * (1.0 - g * g);
      dz[3 * h + j] = dh * tc[j] * o * (1.0 - o);
      dc_next[j] = dcell * f;
    }
    Axpy(1.0, dz.data(), grad + p.b, g4);
    MatVecBackward(w_in, in + static_cast<size_t>(t) * p.in, dz.data(), p.in, g4, gw_in,
                   din == nullptr ? nullptr : din + static_cast<size_t>(t) * p.in);
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    if (has_prev) {
      const double* pg = &dc.gates[static_cast<size_t>(tp) * g4];
      const double* ptc = &dc.tc[static_cast<size_t>(tp) * h];
      for (int j = 0; j < h; ++j) h_prev[j] = pg[3 * h + j] * ptc[j];
      MatVecBackward(w_rec, h_prev.data(), dz.data(), h, g4, gw_rec, dh_next.data());
    }
  }
}

void TunerNet::AttendForward(const AttnOffsets& p, const double* hs, int steps, HeadCache* hc) const {
  const int dd = OutWidth(), d = arch_.attention_dim, r_steps = arch_.unroll_steps;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d));
  hc->keys.assign(static_cast<size_t>(steps) * d, 0.0);
  for (int t = 0; t < steps; ++t) {
    MatVecAdd(&params[p.wk], hs + static_cast<size_t>(t) * dd, dd, d, &hc->keys[static_cast<size_t>(t) * d]);
  }
  hc->query.assign(static_cast<size_t>(r_steps) * d, 0.0);
  hc->alpha.assign(static_cast<size_t>(r_steps) * steps, 0.0);
  hc->state.assign(static_cast<size_t>(r_steps + 1) * dd, 0.0);
  std::copy(params.begin() + p.u, params.begin() + p.u + dd, hc->state.begin());
  for (int r = 0; r < r_steps; ++r) {
    double* q = &hc->query[static_cast<size_t>(r) * d];
    MatVecAdd(&params[p.wq], &hc->state[static_cast<size_t>(r) * dd], dd, d, q);
    double* alpha = &hc->alpha[static_cast<size_t>(r) * steps];
    double max_e = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < steps; ++t) {
      alpha[t] = Dot(q, &hc->keys[static_cast<size_t>(t) * d], d) * inv_sqrt;
      max_e = std::max(max_e, alpha[t]);
    }
    double total = 0;
    for (int t = 0; t < steps; ++t) {
      alpha[t] = std::exp(alpha[t] - max_e);
      total += alpha[t];
    }
    double* next = &hc->state[static_cast<size_t>(r + 1) * dd];
    for (int t = 0; t < steps; ++t) {
      alpha[t] /= total;
      Axpy(alpha[t], hs + static_cast<size_t>(t) * dd, next, dd);
    }
  }
}

void TunerNet::AttendBackward(const AttnOffsets& p, const double* hs, int steps, const HeadCache& hc,
                              const double* dstate, double* grad, double* dh) const {
  const int dd = OutWidth(), d = arch_.attention_dim, r_steps = arch_.unroll_steps;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> ds(dstate, dstate + dd), ds_prev(dd), dk(static_cast<size_t>(steps) * d, 0.0),
      dalpha(steps), dq(d);
  for (int r = r_steps - 1; r >= 0; --r) {
    const double* alpha = &hc.alpha[static_cast<size_t>(r) * steps];
    const double* q = &hc.query[static_cast<size_t>(r) * d];
    double weighted = 0;
    for (int t = 0; t < steps; ++t) {
      const double* h_t = hs + static_cast<size_t>(t) * dd;
      dalpha[t] = Dot(ds.data(), h_t, dd);
      Axpy(alpha[t], ds.data(), dh + static_cast<size_t>(t) * dd, dd);
      weighted += alpha[t] * dalpha[t];
    }
    std::fill(dq.begin(), dq.end(), 0.0);
    for (int t = 0; t < steps; ++t) {
      const double de = alpha[t] * (dalpha[t] - weighted) * inv_sqrt;
      Axpy(de, &hc.keys[static_cast<size_t>(t) * d], dq.data(), d);
      Axpy(de, q, &dk[static_cast<size_t>(t) * d], d);
    }
    std::fill(ds_prev.begin(), ds_prev.end(), 0.0);
    MatVecBackward(&params[p.wq], &hc.state[static_cast<size_t>(r) * dd], dq.data(), dd, d,
                   grad + p.wq, ds_prev.data());
    ds.swap(ds_prev);
  }
  Axpy(1.0, ds.data(), grad + p.u, dd);
  for (int t = 0; t < steps; ++t) {
    MatVecBackward(&params[p.wk], hs + static_cast<size_t>(t) * dd, &dk[static_cast<size_t>(t) * d],
                   dd, d, grad + p.wk, dh + static_cast<size_t>(t) * dd);
  }
}

double TunerNet::Forward(const StepSequence& in, Cache* cache) const {
  const int steps = static_cast<int>(in.steps.size());
  if (steps == 0) throw DataError("tuner: empty step sequence");
  const int dd = OutWidth(), h = arch_.hidden;
  cache->steps = steps;
  cache->layers.resize(arch_.layers);
  auto& first = cache->layers[0].in;
  first.resize(static_cast<size_t>(steps) * kStepWidth);
  for (int t = 0; t < steps; ++t) {
    for (int j = 0; j < kStepWidth; ++j) first[static_cast<size_t>(t) * kStepWidth + j] = in.steps[t][j] * kStepScale[j];
  }
  for (int l = 0; l < arch_.layers; ++l) {
    std::vector<double>& out = l + 1 < arch_.layers ? cache->layers[l + 1].in : cache->out;
    out.assign(static_cast<size_t>(steps) * dd, 0.0);
    for (int dir = 0; dir < 2; ++dir) {
      LstmForward(lstm_[l][dir], cache->layers[l].in.data(), steps, dir == 1,
                  &cache->layers[l].dir[dir], out.data() + dir * h, dd);
    }
  }
  cache->heads.resize(arch_.heads);
  cache->z.assign(HeadInput(), 0.0);
  for (int a = 0; a < arch_.heads; ++a) {
    AttendForward(attn_[a], cache->out.data(), steps, &cache->heads[a]);
    const double* final_state = &cache->heads[a].state[static_cast<size_t>(arch_.unroll_steps) * dd];
    std::copy(final_state, final_state + dd, cache->z.begin() + static_cast<size_t>(a) * dd);
  }
  context_norm.Apply(in.context.data(), cache->z.data() + static_cast<size_t>(arch_.heads) * dd);
  cache->a1.assign(params.begin() + b1_, params.begin() + b1_ + arch_.head_hidden);
  MatVecAdd(&params[w1_], cache->z.data(), HeadInput(), arch_.head_hidden, cache->a1.data());
  for (double& v : cache->a1) v = std::tanh(v);
  cache->y = Sigmoid(params[b2_] + Dot(&params[w2_], cache->a1.data(), arch_.head_hidden));
  return cache->y;
}

void TunerNet::Backward(const Cache& cache, double dy, double* grad) const {
  const int steps = cache.steps, dd = OutWidth(), h = arch_.hidden, hh = arch_.head_hidden;
  const double d_logit = dy * cache.y * (1.0 - cache.y);
  Axpy(d_logit, cache.a1.data(), grad + w2_, hh);
  grad[b2_] += d_logit;
  std::vector<double> da1(hh);
  for (int j = 0; j < hh; ++j) da1[j] = d_logit * params[w2_ + j] * (1.0 - cache.a1[j] * cache.a1[j]);
  Axpy(1.0, da1.data(), grad + b1_, hh);
  std::vector<double> dz(HeadInput(), 0.0);
  MatVecBackward(&params[w1_], cache.z.data(), da1.data(), HeadInput(), hh, grad + w1_, dz.data());

  std::vector<double> dout(static_cast<size_t>(steps) * dd, 0.0);
  for (int a = 0; a < arch_.heads; ++a) {
    AttendBackward(attn_[a], cache.out.data(), steps, cache.heads[a],
                   dz.data() + static_cast<size_t>(a) * dd, grad, dout.data());
  }
  for (int l = arch_.layers - 1; l >= 0; --l) {
    const LayerCache& lc = cache.layers[l];
    std::vector<double> din;
    if (l > 0) din.assign(lc.in.size(), 0.0);
    for (int dir = 0; dir < 2; ++dir) {
      LstmBackward(lstm_[l][dir], lc.in.data(), lc.dir[dir], steps, dir == 1, dout.data() + dir * h,
                   dd, grad, l > 0 ? din.data() : nullptr);
    }
    dout.swap(din);
  }
}

}  // namespace detail
}  // namespace tensortune

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

#include "mlp_net.h"

namespace tensortune {
namespace detail {

MlpNet::MlpNet(int hidden, uint64_t seed) : hidden_(hidden) {
  const int in = kFlatLength;
  ParamLayout layout;
  layout.BeginGroup("hidden");
  w1_ = layout.Add(static_cast<size_t>(in) * hidden);
  b1_ = layout.Add(hidden);
  w2_ = layout.Add(static_cast<size_t>(hidden) * hidden);
  b2_ = layout.Add(hidden);
  layout.EndGroup();
  layout.BeginGroup("output");
  w3_ = layout.Add(hidden);
  b3_ = layout.Add(1);
  layout.EndGroup();
  groups_ = layout.groups();
  params.assign(layout.total(), 0.0);

  Rng rng(SplitMix64(seed ^ 0x3171));
  FillUniform(&rng, std::sqrt(6.0 / (in + hidden)), &params[w1_], static_cast<size_t>(in) * hidden);
  FillUniform(&rng, std::sqrt(6.0 / (2.0 * hidden)), &params[w2_],
              static_cast<size_t>(hidden) * hidden);
  FillUniform(&rng, std::sqrt(6.0 / (hidden + 1.0)), &params[w3_], hidden);
  norm.offset.assign(in, 0.0);
  norm.scale.assign(in, 1.0);
}

double MlpNet::Forward(const FlatFeatures& in, Cache* cache) const {
  const int h = hidden_;
  cache->x.resize(kFlatLength);
  norm.Apply(in.values.data(), cache->x.data());
  cache->a1.assign(params.begin() + b1_, params.begin() + b1_ + h);
  MatVecAdd(&params[w1_], cache->x.data(), kFlatLength, h, cache->a1.data());
  for (double& v : cache->a1) v = std::tanh(v);
  cache->a2.assign(params.begin() + b2_, params.begin() + b2_ + h);
  MatVecAdd(&params[w2_], cache->a1.data(), h, h, cache->a2.data());
  for (double& v : cache->a2) v = std::tanh(v);
  return params[b3_] + Dot(&params[w3_], cache->a2.data(), h);
}

void MlpNet::Backward(const Cache& cache, double dy, double* grad) const {
  const int h = hidden_;
  std::vector<double> d2(h), d1(h, 0.0);
  Axpy(dy, cache.a2.data(), grad + w3_, h);
  grad[b3_] += dy;
  for (int j = 0; j < h; ++j) d2[j] = dy * params[w3_ + j] * (1.0 - cache.a2[j] * cache.a2[j]);
  Axpy(1.0, d2.data(), grad + b2_, h);
  MatVecBackward(&params[w2_], cache.a1.data(), d2.data(), h, h, grad + w2_, d1.data());
  for (int j = 0; j < h; ++j) d1[j] *= 1.0 - cache.a1[j] * cache.a1[j];
  Axpy(1.0, d1.data(), grad + b1_, h);
  MatVecBackward(&params[w1_], cache.x.data(), d1.data(), kFlatLength, h, grad + w1_, nullptr);
}

}  // namespace detail
}  // namespace tensortune

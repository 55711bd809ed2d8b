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

/*!
 * \file mlp_net.h
 * \brief 47 -> H -> H -> 1 tanh network over flat features.
 */
#ifndef TENSORTUNE_SRC_MLP_NET_H_
#define TENSORTUNE_SRC_MLP_NET_H_

#include <vector>

#include "nn.h"
#include "tensortune/featurize.h"

namespace tensortune {
namespace detail {

class MlpNet {
 public:
  using Input = FlatFeatures;
  struct Cache {
    std::vector<double> x, a1, a2;
  };

  MlpNet(int hidden, uint64_t seed);

  int hidden() const { return hidden_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }

  double Forward(const FlatFeatures& in, Cache* cache) const;
  /*! \brief Accumulates d(output)/d(params) * dy into grad. */
  void Backward(const Cache& cache, double dy, double* grad) const;

  std::vector<double> params;
  Normalizer norm;

 private:
  int hidden_;
  size_t w1_, b1_, w2_, b2_, w3_, b3_;
  std::vector<ParamGroup> groups_;
};

}  // namespace detail
}  // namespace tensortune

#endif  // TENSORTUNE_SRC_MLP_NET_H_

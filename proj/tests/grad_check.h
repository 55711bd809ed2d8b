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
 * \file grad_check.h
 * \brief Central-difference gradient checks for the network backward passes.
 */
#ifndef TENSORTUNE_TESTS_GRAD_CHECK_H_
#define TENSORTUNE_TESTS_GRAD_CHECK_H_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mlp_net.h"
#include "tensortune/common.h"
#include "tuner_net.h"

namespace tensortune {
namespace testing_util {

struct GradCheckResult {
  double max_rel_error = 0;
  size_t checked = 0;
  size_t worst_index = 0;
};

/*!
 * \brief Compares the analytic gradient of the scalar output with central
 *  differences at the listed parameter indices. Relative error is
 *  |a - n| / max(|a| + |n|, floor).
 */
template <typename Net>
GradCheckResult CheckGradients(Net net, const typename Net::Input& in, const std::vector<size_t>& indices,
                               double eps = 1e-6, double floor = 1e-6) {
  typename Net::Cache cache;
  net.Forward(in, &cache);
  std::vector<double> grad(net.params.size(), 0.0);
  net.Backward(cache, 1.0, grad.data());
  GradCheckResult res;
  for (size_t i : indices) {
    const double saved = net.params[i];
    net.params[i] = saved + eps;
    const double up = net.Forward(in, &cache);
    net.params[i] = saved - eps;
    const double down = net.Forward(in, &cache);
    net.params[i] = saved;
    const double numeric = (up - down) / (2 * eps);
    const double err = std::abs(grad[i] - numeric) / std::max(std::abs(grad[i]) + std::abs(numeric), floor);
    if (err > res.max_rel_error) {
      res.max_rel_error = err;
      res.worst_index = i;
    }
    ++res.checked;
  }
  return res;
}

/*! \brief Up to `per_group` seeded indices from each parameter group. */
inline std::vector<size_t> SampleIndices(const std::vector<detail::ParamGroup>& groups, size_t per_group,
                                         uint64_t seed) {
  Rng rng(seed);
  std::vector<size_t> out;
  for (const auto& g : groups) {
    const size_t n = g.end - g.begin;
    if (n <= per_group) {
      for (size_t i = g.begin; i < g.end; ++i) out.push_back(i);
    } else {
      for (size_t k = 0; k < per_group; ++k) out.push_back(g.begin + rng.UniformInt(n));
    }
  }
  return out;
}

inline FlatFeatures RandomFlat(Rng* rng) {
  FlatFeatures f;
  for (double& v : f.values) v = rng->Normal();
  return f;
}

inline StepSequence RandomSequence(Rng* rng, int steps) {
  StepSequence s;
  for (int t = 0; t < steps; ++t) {
    StepVector v{};
    v[rng->UniformInt(4)] = 1.0;
    v[4] = static_cast<double>(rng->UniformInt(6));
    v[5] = static_cast<double>(rng->UniformInt(3));
    s.steps.push_back(v);
  }
  for (double& v : s.context) v = rng->Normal();
  return s;
}

}  // namespace testing_util
}  // namespace tensortune

#endif  // TENSORTUNE_TESTS_GRAD_CHECK_H_

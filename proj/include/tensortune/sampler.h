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
 * \file tensortune/sampler.h
 * \brief Hardware-aware dataset pruning: invalid/low-performer removal and
 *  FLOPs-occurrence weighted task sampling.
 */
#ifndef TENSORTUNE_SAMPLER_H_
#define TENSORTUNE_SAMPLER_H_

#include <cstdint>
#include <map>
#include <string>

#include "tensortune/dataset.h"
#include "tensortune/serialization.h"

namespace tensortune {

struct SamplerConfig {
  double target_fraction = 0.57;
  double low_perf_quantile = 0.1;
  int64_t min_records_per_task = 8;
  uint64_t seed = 0;

  Json ToJson() const;
  static SamplerConfig FromJson(const Json& j);
};

/*!
 * \brief Drops error records, then per task the records whose throughput is
 *  strictly below the task's low_perf_quantile value (element floor(q*n) of the
 *  ascending throughputs), then tasks left with fewer than min_records_per_task.
 */
Dataset FilterInvalid(const Dataset& ds, const SamplerConfig& cfg);

/*!
 * \brief weight(t) = flops(t) * occurrence(op(t)), normalized to sum to 1.
 *  occurrence(op) counts the dataset's tasks with that operator.
 */
std::map<std::string, double> TaskWeights(const Dataset& ds);

struct PruneReport {
  SamplerConfig config;
  int64_t records_before = 0;
  int64_t records_after_filter = 0;
  int64_t records_after = 0;
  int64_t tasks_before = 0;
  int64_t tasks_after = 0;
  double realized_fraction = 0;
  bool achievable = true;
  std::map<OpKind, std::pair<int64_t, int64_t>> per_op_records;  // before, after

  Json ToJson() const;
  std::string ToText() const;
};

struct PruneResult {
  Dataset dataset;
  PruneReport report;
};

/*!
 * \brief FilterInvalid followed by weighted sampling of whole tasks without
 *  replacement until the kept record count first reaches
 *  target_fraction * (input record count). When filtering alone already falls
 *  short of that, every filtered task is kept and the report says so.
 */
PruneResult PruneDataset(const Dataset& ds, const SamplerConfig& cfg);

}  // namespace tensortune

#endif  // TENSORTUNE_SAMPLER_H_

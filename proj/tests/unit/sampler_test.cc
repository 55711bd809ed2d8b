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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "tensortune/oracle.h"
#include "tensortune/sampler.h"
#include "test_util.h"

namespace tensortune {
namespace {

using testing_util::Cpu;
using testing_util::Elementwise;
using testing_util::Matmul;
using testing_util::Plain;
using testing_util::Record;

std::set<std::string> RecordIds(const Dataset& ds) {
  std::set<std::string> ids;
  for (const auto& r : ds.records()) ids.insert(r.record_id);
  return ids;
}

Dataset Synthetic(uint64_t seed, int tasks = 40, int per_task = 25, double error_fraction = 0.02) {
  OracleConfig cfg = OracleConfig::Default();
  cfg.seed = seed;
  cfg.error_fraction = error_fraction;
  return GenDataset(tasks, per_task, cfg);
}

TEST(FilterInvalid, OnlyErrorsRemovedAtQuantileZero) {
  // 100 records, 5 flagged.
  Dataset base = testing_util::LadderDataset(10, 10);
  std::vector<MeasurementRecord> recs = base.records();
  for (int i : {3, 17, 42, 66, 99}) {
    recs[i].error_flag = true;
    recs[i].mean_cost.reset();
    recs[i].measured_flops = 0;
  }
  Dataset ds(base.hardware(), base.tasks(), recs);
  SamplerConfig cfg;
  cfg.low_perf_quantile = 0.0;
  cfg.min_records_per_task = 1;
  EXPECT_EQ(FilterInvalid(ds, cfg).records().size(), 95u);
}

TEST(FilterInvalid, SlowestOfTenRemovedAtQuantileTenPercent) {
  Dataset ds = testing_util::LadderDataset(1, 10);
  SamplerConfig cfg;
  cfg.low_perf_quantile = 0.1;
  cfg.min_records_per_task = 1;
  Dataset out = FilterInvalid(ds, cfg);
  ASSERT_EQ(out.records().size(), 9u);
  // Costs ascend with the index, so the slowest is the last record.
  EXPECT_EQ(out.FindRecord("r000-009"), nullptr);
}

TEST(FilterInvalid, SparseTaskDropped) {
  Dataset ds = testing_util::LadderDataset(2, 3);
  SamplerConfig cfg;
  cfg.low_perf_quantile = 0.0;
  cfg.min_records_per_task = 8;
  Dataset out = FilterInvalid(ds, cfg);
  EXPECT_TRUE(out.records().empty());
  EXPECT_TRUE(out.tasks().empty());
}

TEST(TaskWeights, Examples) {
  Task a{"a", Elementwise("ka", {100}), "platinum-8272", ""};
  Task b{"b", Elementwise("kb", {300}), "platinum-8272", ""};
  Dataset single({Cpu()}, {a}, {});
  EXPECT_DOUBLE_EQ(TaskWeights(single).at("a"), 1.0);
  Dataset pair({Cpu()}, {a, b}, {});
  auto w = TaskWeights(pair);
  EXPECT_DOUBLE_EQ(w.at("a"), 0.25);
  EXPECT_DOUBLE_EQ(w.at("b"), 0.75);

  // Three relu tasks and one tanh task with equal flop counts.
  std::vector<Task> tasks;
  for (int i = 0; i < 3; ++i) {
    tasks.push_back({"r" + std::to_string(i), Elementwise("kr" + std::to_string(i), {40, i + 1}, OpKind::kRelu),
                     "platinum-8272", ""});
  }
  Dataset mixed({Cpu()},
                {Task{"r", Elementwise("kr", {40}, OpKind::kRelu), "platinum-8272", ""},
                 Task{"r2", Elementwise("kr2", {8, 5}, OpKind::kRelu), "platinum-8272", ""},
                 Task{"r3", Elementwise("kr3", {5, 8}, OpKind::kRelu), "platinum-8272", ""},
                 Task{"m", Elementwise("km", {40}, OpKind::kElementwiseAdd), "platinum-8272", ""}},
                {});
  auto wm = TaskWeights(mixed);
  EXPECT_NEAR(wm.at("r") / wm.at("m"), 3.0, 1e-12);
  EXPECT_THROW(TaskWeights(Dataset()), Error);
}

TEST(TaskWeights, SumToOne) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    double sum = 0;
    for (const auto& [id, w] : TaskWeights(Synthetic(seed))) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Prune, FullFractionIsIdentity) {
  Dataset ds = Synthetic(1, 10, 20, 0.0);
  SamplerConfig cfg;
  cfg.target_fraction = 1.0;
  cfg.low_perf_quantile = 0.0;
  PruneResult r = PruneDataset(ds, cfg);
  EXPECT_TRUE(r.dataset == ds);
  EXPECT_DOUBLE_EQ(r.report.realized_fraction, 1.0);
}

TEST(Prune, RealizedFractionWithinThresholdBound) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Dataset ds = Synthetic(seed, 40, 25);
    ASSERT_EQ(ds.records().size(), 1000u);
    for (double fraction : {0.57, 0.53}) {
      SamplerConfig cfg;
      cfg.target_fraction = fraction;
      cfg.seed = seed;
      PruneResult r = PruneDataset(ds, cfg);
      const double realized = static_cast<double>(r.dataset.records().size()) / 1000.0;
      EXPECT_DOUBLE_EQ(realized, r.report.realized_fraction);
      EXPECT_TRUE(r.report.achievable);
      EXPECT_GE(realized, fraction);
      EXPECT_LE(realized, fraction + 25.0 / 1000.0);
    }
  }
}

TEST(Prune, DeterministicAndSubset) {
  Dataset ds = Synthetic(3);
  SamplerConfig cfg;
  cfg.seed = 77;
  PruneResult a = PruneDataset(ds, cfg), b = PruneDataset(ds, cfg);
  EXPECT_EQ(RecordIds(a.dataset), RecordIds(b.dataset));
  std::set<std::string> all = RecordIds(ds);
  for (const auto& id : RecordIds(a.dataset)) EXPECT_TRUE(all.count(id));
  cfg.seed = 78;
  EXPECT_NE(RecordIds(PruneDataset(ds, cfg).dataset), RecordIds(a.dataset));
}

TEST(Prune, UnachievableFractionReported) {
  Dataset ds = Synthetic(4, 20, 20, 0.3);
  SamplerConfig cfg;
  cfg.target_fraction = 0.95;
  PruneResult r = PruneDataset(ds, cfg);
  EXPECT_FALSE(r.report.achievable);
  EXPECT_EQ(r.dataset.records().size(), static_cast<size_t>(r.report.records_after_filter));
  EXPECT_NE(r.report.ToText().find("unachievable"), std::string::npos);
}

TEST(Prune, HeavyTasksPreferentiallyKept) {
  int passing = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Dataset ds = Synthetic(100 + seed, 40, 25);
    SamplerConfig cfg;
    cfg.seed = seed;
    PruneResult r = PruneDataset(ds, cfg);
    auto weights = TaskWeights(ds);
    double mass = 0;
    for (const auto& t : r.dataset.tasks()) mass += weights.at(t.task_id);
    passing += mass >= 0.5 * r.report.realized_fraction;
  }
  EXPECT_GE(passing, 19);
}

TEST(SamplerConfig, RangeChecked) {
  Json j = SamplerConfig{}.ToJson();
  j["target_fraction"] = 0.0;
  EXPECT_THROW(SamplerConfig::FromJson(j), DataError);
  j = SamplerConfig{}.ToJson();
  j["low_perf_quantile"] = 1.0;
  EXPECT_THROW(SamplerConfig::FromJson(j), DataError);
}

}  // namespace
}  // namespace tensortune

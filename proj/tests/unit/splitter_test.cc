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

#include <cmath>
#include <map>
#include <set>

#include "tensortune/oracle.h"
#include "tensortune/splitter.h"
#include "test_util.h"

namespace tensortune {
namespace {

void ExpectPartition(const Dataset& ds, const SplitAssignment& s) {
  std::set<std::string> all;
  for (const auto& r : ds.records()) all.insert(r.record_id);
  for (const auto& id : s.train_ids) EXPECT_FALSE(s.test_ids.count(id)) << id;
  std::set<std::string> both = s.train_ids;
  both.insert(s.test_ids.begin(), s.test_ids.end());
  EXPECT_EQ(both, all);
}

std::map<std::string, std::set<int>> SidesBy(const Dataset& ds, const SplitAssignment& s, bool by_target) {
  std::map<std::string, std::set<int>> sides;
  for (const auto& r : ds.records()) {
    const Task* t = ds.FindTask(r.task_id);
    sides[by_target ? t->target : t->task_id].insert(s.IsTest(r.record_id) ? 1 : 0);
  }
  return sides;
}

Dataset RandomDataset(uint64_t seed) {
  Rng rng(seed);
  OracleConfig cfg = OracleConfig::Default();
  cfg.seed = seed;
  cfg.hardware = {*FindBuiltinHardware("platinum-8272"), *FindBuiltinHardware("t4"),
                  *FindBuiltinHardware("graviton2")};
  return GenDataset(3 + static_cast<int64_t>(rng.UniformInt(10)), 2 + static_cast<int64_t>(rng.UniformInt(8)),
                    cfg);
}

TEST(Split, ByTaskTenTasks) {
  Dataset ds = testing_util::LadderDataset(10, 4);
  SplitAssignment s = Split(ds, SplitStrategy::kByTask, 0.2, 1);
  auto sides = SidesBy(ds, s, false);
  int test_tasks = 0;
  for (const auto& [task, set] : sides) {
    EXPECT_EQ(set.size(), 1u);
    test_tasks += set.count(1);
  }
  EXPECT_EQ(test_tasks, 2);
}

TEST(Split, WithinTaskEveryTaskOnBothSides) {
  Dataset ds = testing_util::LadderDataset(6, 3);
  SplitAssignment s = Split(ds, SplitStrategy::kWithinTask, 0.2, 5);
  for (const auto& [task, set] : SidesBy(ds, s, false)) EXPECT_EQ(set.size(), 2u) << task;
  // round(0.2 * 3) = 1 test record per task.
  EXPECT_EQ(s.test_ids.size(), 6u);
}

TEST(Split, WithinTaskRounding) {
  Dataset ds = testing_util::LadderDataset(3, 10);
  SplitAssignment s = Split(ds, SplitStrategy::kWithinTask, 0.25, 2);
  EXPECT_EQ(s.test_ids.size(), 3u * static_cast<size_t>(std::lround(2.5)));
}

TEST(Split, ByTargetTwoTargetsHalf) {
  OracleConfig cfg = OracleConfig::Default();
  Dataset ds = GenDataset(6, 5, cfg);
  SplitAssignment s = Split(ds, SplitStrategy::kByTarget, 0.5, 9);
  std::map<std::string, std::set<std::string>> by_target;
  for (const auto& r : ds.records()) by_target[ds.FindTask(r.task_id)->target].insert(r.record_id);
  ASSERT_EQ(by_target.size(), 2u);
  auto a = by_target.begin()->second, b = by_target.rbegin()->second;
  EXPECT_TRUE((s.test_ids == a && s.train_ids == b) || (s.test_ids == b && s.train_ids == a));
}

TEST(Split, PreconditionsEnforced) {
  Dataset one_target = testing_util::LadderDataset(4, 3);
  EXPECT_THROW(Split(one_target, SplitStrategy::kByTarget, 0.2, 0), DataError);
  EXPECT_THROW(Split(testing_util::LadderDataset(1, 3), SplitStrategy::kByTask, 0.2, 0), DataError);
  EXPECT_THROW(Split(Dataset(), SplitStrategy::kWithinTask, 0.2, 0), DataError);
  EXPECT_THROW(Split(one_target, SplitStrategy::kWithinTask, 1.0, 0), DataError);
}

TEST(Split, PartitionPropertiesOnRandomDatasets) {
  for (uint64_t d = 0; d < 100; ++d) {
    Dataset ds = RandomDataset(d);
    for (uint64_t seed = 0; seed < 5; ++seed) {
      for (auto strategy : {SplitStrategy::kWithinTask, SplitStrategy::kByTask, SplitStrategy::kByTarget}) {
        SplitAssignment s = Split(ds, strategy, 0.2, seed);
        ExpectPartition(ds, s);
        if (strategy == SplitStrategy::kByTask) {
          for (const auto& [id, set] : SidesBy(ds, s, false)) ASSERT_EQ(set.size(), 1u);
        }
        if (strategy == SplitStrategy::kByTarget) {
          for (const auto& [id, set] : SidesBy(ds, s, true)) ASSERT_EQ(set.size(), 1u);
        }
        EXPECT_TRUE(Split(ds, strategy, 0.2, seed) == s);
      }
    }
  }
}

TEST(Split, SeedSensitivity) {
  Dataset ds = testing_util::LadderDataset(8, 2);
  std::set<std::set<std::string>> distinct;
  for (uint64_t seed = 0; seed < 10; ++seed) distinct.insert(Split(ds, SplitStrategy::kByTask, 0.2, seed).test_ids);
  EXPECT_GT(distinct.size(), 1u);
}

TEST(Split, JsonRoundTrip) {
  Dataset ds = testing_util::LadderDataset(5, 4);
  SplitAssignment s = Split(ds, SplitStrategy::kWithinTask, 0.3, 4);
  EXPECT_TRUE(SplitAssignment::FromJson(s.ToJson()) == s);
}

}  // namespace
}  // namespace tensortune

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

#include "tensortune/featurize.h"
#include "tensortune/oracle.h"
#include "test_util.h"

namespace tensortune {
namespace {

using testing_util::Cpu;
using testing_util::Elementwise;
using testing_util::Plain;
using testing_util::Record;

Dataset Golden() { return LoadDataset(std::string(TENSORTUNE_FIXTURE_DIR) + "/golden_features.ds"); }

std::array<double, kFlatLength> Sparse(const std::map<int, double>& slots) {
  std::array<double, kFlatLength> v{};
  for (auto [i, x] : slots) v[i] = x;
  return v;
}

// Expected vectors written out slot by slot from the layout table.
std::map<std::string, std::array<double, kFlatLength>> GoldenVectors() {
  const std::map<int, double> cpu_hw = {{29, 6.0}, {34, 4.0}, {35, 6.0}, {37, 0.0},
                                        {38, 1.0}, {43, 1.0}, {44, 1.0}, {46, 1.0}};
  std::map<int, double> mm = {{9, 1.0},  {10, 6.0}, {11, 7.0}, {16, 19.0}, {17, 3.0},
                              {18, 4.0}, {25, 1.0}, {26, 3.0}};
  mm.insert(cpu_hw.begin(), cpu_hw.end());
  std::map<int, double> relu = {{3, 1.0},  {10, 0.0}, {11, 3.0}, {12, 3.0}, {13, 6.0}, {16, 12.0},
                                {17, 1.0}, {18, 2.0}, {19, 4.0}, {25, 0.0}, {26, 4.0}};
  relu.insert(cpu_hw.begin(), cpu_hw.end());
  std::map<int, double> conv = {
      {7, 1.0},  {10, 0.0}, {11, std::log2(14.0)}, {12, std::log2(14.0)}, {13, 5.0},
      {16, std::log2(2.0 * 14 * 14 * 32 * 3 * 3 * 16)},
      {17, 1.0}, {18, 1.0}, {19, 3.0}, {25, 2.0}, {26, 2.0}, {27, 4.0}, {28, 3.0},
      {29, 6.0}, {30, std::log2(2147483647.0)}, {31, std::log2(49152.0)}, {32, 10.0}, {33, 3.0},
      {35, 4.0}, {36, 5.0}, {37, 1.0},
      {38, 1.0}, {39, 1.0}, {40, 1.0}, {41, 1.0}, {42, 1.0}, {44, 1.0}, {45, 1.0}, {46, 1.0}};
  return {{"g-r0", Sparse(mm)}, {"g-r1", Sparse(conv)}, {"g-r2", Sparse(relu)}};
}

TEST(EncodeFlat, GoldenVectorsBitForBit) {
  Dataset ds = Golden();
  auto golden = GoldenVectors();
  for (const auto& rec : ds.records()) {
    FlatFeatures f = EncodeFlat(rec, ds);
    EXPECT_EQ(f.layout_version, kFlatLayoutVersion);
    const auto& want = golden.at(rec.record_id);
    for (int i = 0; i < kFlatLength; ++i) EXPECT_EQ(f.values[i], want[i]) << rec.record_id << " slot " << i;
    EXPECT_EQ(EncodeFlat(rec, ds), f);  // deterministic
  }
}

TEST(EncodeFlat, UnrollDifferenceIsOneSlot) {
  Kernel k = Elementwise("k", {32, 32});
  ScheduleConfig a = Plain(2), b = Plain(2);
  b.unroll_factor = 4;
  FlatFeatures fa = EncodeFlat(k, a, Cpu()), fb = EncodeFlat(k, b, Cpu());
  int diff = 0;
  for (int i = 0; i < kFlatLength; ++i) {
    if (fa.values[i] != fb.values[i]) {
      ++diff;
      EXPECT_EQ(i, kUnrollSlot);
      EXPECT_DOUBLE_EQ(fb.values[i] - fa.values[i], 2.0);
    }
  }
  EXPECT_EQ(diff, 1);
}

TEST(EncodeFlat, CpuRecordMasksGpuSlots) {
  FlatFeatures f = EncodeFlat(Elementwise("k", {8}), Plain(1), Cpu());
  for (int slot : {kSlotMaxLocalMemoryPerBlock, kSlotMaxSharedMemoryPerBlock, kSlotMaxThreadsPerBlock,
                   kSlotMaxVthreadExtent, kSlotWarpSize}) {
    EXPECT_EQ(f.values[kHwValueOffset + slot], 0.0);
    EXPECT_EQ(f.values[kHwMaskOffset + slot], 0.0);
  }
  EXPECT_EQ(f.values[kThreadsXSlot], 0.0);
  EXPECT_EQ(f.values[kThreadsYSlot], 0.0);
}

TEST(EncodeSequence, StepCountAndOrder) {
  Kernel k = Elementwise("k", {16, 16});
  ScheduleConfig s;
  s.tile_factors = {{2, 4}, {4, 2}};
  s.unroll_factor = 2;
  s.vectorize_width = 4;
  StepSequence seq = EncodeSequence(k, s, Cpu());
  ASSERT_EQ(seq.steps.size(), 6u);
  const int kinds[] = {0, 0, 0, 0, 1, 2};
  const double axes[] = {0, 0, 1, 1, 0, 0};
  for (size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(seq.steps[i][kinds[i]], 1.0) << i;
    EXPECT_EQ(seq.steps[i][5], axes[i]) << i;
  }
  for (const auto& st : seq.steps) EXPECT_NE(st[static_cast<int>(StepKind::kBind)], 1.0);
}

TEST(EncodeSequence, ContextIsKernelAndHardwareSlice) {
  Dataset ds = Golden();
  for (const auto& rec : ds.records()) {
    EXPECT_EQ(EncodeSequence(rec, ds).context, ContextOf(EncodeFlat(rec, ds)));
  }
}

TEST(EncodeSequence, DecodeRecoversKnobs) {
  OracleConfig cfg = OracleConfig::Default();
  cfg.seed = 21;
  Dataset ds = GenDataset(20, 8, cfg);
  for (const auto& rec : ds.records()) {
    StepSequence seq = EncodeSequence(rec, ds);
    ASSERT_GE(seq.steps.size(), 1u);
    ASSERT_LE(seq.steps.size(), static_cast<size_t>(kMaxSequenceLength));
    DecodedKnobs d = DecodeSteps(seq);
    // Axes without factors are not emitted; compare the non-empty ones.
    std::vector<std::vector<int64_t>> want = rec.schedule.tile_factors;
    d.tile_factors.resize(want.size());
    EXPECT_EQ(d.tile_factors, want);
    EXPECT_EQ(d.unroll_factor, rec.schedule.unroll_factor);
    EXPECT_EQ(d.vectorize_width, rec.schedule.vectorize_width);
    if (rec.schedule.thread_binding) {
      EXPECT_EQ(d.bind, (std::vector<int64_t>{rec.schedule.thread_binding->threads_x,
                                              rec.schedule.thread_binding->threads_y}));
    } else {
      EXPECT_TRUE(d.bind.empty());
    }
  }
}

TEST(Label, Examples) {
  Task t{"t0", Elementwise("k0", {8, 8}), "platinum-8272", ""};
  Task solo{"t1", Elementwise("k1", {4, 8}), "platinum-8272", ""};
  Dataset ds({Cpu()}, {t, solo},
             {Record("fast", "t0", Plain(2), 1e-3), Record("slow", "t0", Plain(2), 2e-3),
              Record("err", "t0", Plain(2), std::nullopt), Record("only", "t1", Plain(2), 5e-3)});
  EXPECT_EQ(Label(*ds.FindRecord("fast"), ds), 1.0);
  EXPECT_EQ(Label(*ds.FindRecord("slow"), ds), 0.5);
  EXPECT_EQ(Label(*ds.FindRecord("only"), ds), 1.0);
  EXPECT_THROW(Label(*ds.FindRecord("err"), ds), DataError);
}

TEST(Label, RangeArgminAndThroughputOrder) {
  OracleConfig cfg = OracleConfig::Default();
  cfg.seed = 8;
  Dataset ds = GenDataset(15, 12, cfg);
  for (const auto& task : ds.tasks()) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i : ds.RecordsOfTask(task.task_id)) {
      if (ds.records()[i].valid()) best = std::min(best, *ds.records()[i].mean_cost);
    }
    for (size_t i : ds.RecordsOfTask(task.task_id)) {
      const auto& a = ds.records()[i];
      if (!a.valid()) continue;
      double la = Label(a, ds);
      EXPECT_GT(la, 0.0);
      EXPECT_LE(la, 1.0);
      EXPECT_EQ(la == 1.0, *a.mean_cost == best);
      for (size_t j : ds.RecordsOfTask(task.task_id)) {
        const auto& b = ds.records()[j];
        if (!b.valid()) continue;
        EXPECT_EQ(la > Label(b, ds), a.Throughput() > b.Throughput());
      }
    }
  }
}

}  // namespace
}  // namespace tensortune

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

#include "tensortune/common.h"
#include "tensortune/oracle.h"
#include "tensortune/workload.h"
#include "test_util.h"

namespace tensortune {
namespace {

using testing_util::Cpu;
using testing_util::Elementwise;
using testing_util::Gpu;
using testing_util::Matmul;
using testing_util::Plain;
using testing_util::Record;

Kernel Conv(int64_t n, int64_t h, int64_t w, int64_t cin, int64_t kh, int64_t cout, int64_t stride,
            int64_t pad, OpKind op = OpKind::kConv2d) {
  Kernel k;
  k.kernel_id = "conv";
  k.op = op;
  k.input_shapes = {{n, h, w, cin}, {kh, kh, cin, cout}};
  const int64_t ho = (h + 2 * pad - kh) / stride + 1, wo = (w + 2 * pad - kh) / stride + 1;
  k.output_shape = {n, ho, wo, cout};
  k.attributes = {{"stride", stride}, {"padding", pad}};
  return k;
}

// Independent counter: one multiply and one add per MAC.
int64_t BruteForceMatmulFlops(int64_t m, int64_t kk, int64_t n) {
  int64_t flops = 0;
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j)
      for (int64_t p = 0; p < kk; ++p) flops += 2;
  return flops;
}

TEST(FlopCount, ElementwiseAddIsProductOfDims) {
  EXPECT_EQ(FlopCount(Elementwise("k", {4, 256, 1024})), 4 * 256 * 1024);
}

TEST(FlopCount, MatmulMatchesBruteForce) {
  EXPECT_EQ(FlopCount(Matmul("k", 2, 3, 4)), 48);
  for (auto [m, kk, n] : {std::tuple{5, 7, 3}, {16, 1, 9}, {1, 1, 1}}) {
    EXPECT_EQ(FlopCount(Matmul("k", m, kk, n)), BruteForceMatmulFlops(m, kk, n));
  }
}

TEST(FlopCount, ReluOnSingleElement) { EXPECT_EQ(FlopCount(Elementwise("k", {1}, OpKind::kRelu)), 1); }

TEST(FlopCount, PerElementConstants) {
  EXPECT_EQ(FlopCount(Elementwise("k", {10}, OpKind::kTanh)), 40);
  EXPECT_EQ(FlopCount(Elementwise("k", {10}, OpKind::kFastTanh)), 40);
  EXPECT_EQ(FlopCount(Elementwise("k", {10}, OpKind::kSoftmaxNorm)), 50);
  EXPECT_EQ(FlopCount(Elementwise("k", {10}, OpKind::kElementwiseDivide)), 10);
}

TEST(FlopCount, ConvMatchesLoopNestCount) {
  Kernel k = Conv(1, 8, 8, 3, 3, 4, 1, 1);
  // Loop nest over output pixels, output channels and the receptive field.
  int64_t brute = 0;
  for (int64_t p = 0; p < 8 * 8; ++p)
    for (int64_t co = 0; co < 4; ++co)
      for (int64_t r = 0; r < 3 * 3 * 3; ++r) brute += 2;
  EXPECT_EQ(FlopCount(k), brute);
  EXPECT_EQ(FlopCount(Conv(1, 8, 8, 3, 3, 4, 1, 1, OpKind::kConv2dWinograd)), brute / 2);
}

TEST(FlopCount, OverflowIsExplicit) {
  Kernel k = Elementwise("k", {1 << 21, 1 << 21, 1 << 21}, OpKind::kSoftmaxNorm);
  EXPECT_THROW(FlopCount(k), Error);
}

TEST(FlopCount, MonotoneInEveryDimension) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    int64_t m = 1 + rng.UniformInt(64), kk = 1 + rng.UniformInt(64), n = 1 + rng.UniformInt(64);
    int64_t base = FlopCount(Matmul("k", m, kk, n));
    EXPECT_GE(FlopCount(Matmul("k", m + 1, kk, n)), base);
    EXPECT_GE(FlopCount(Matmul("k", m, kk + 1, n)), base);
    EXPECT_GE(FlopCount(Matmul("k", m, kk, n + 1)), base);
    Shape s = {m, kk, n};
    int64_t e = FlopCount(Elementwise("e", s, OpKind::kTanh));
    for (size_t d = 0; d < 3; ++d) {
      Shape t = s;
      ++t[d];
      EXPECT_GE(FlopCount(Elementwise("e", t, OpKind::kTanh)), e);
    }
  }
}

TEST(Characterize, SingleRecordArithmetic) {
  Task t{"t0", Elementwise("k0", {4, 256, 1024}), "platinum-8272", ""};
  Dataset ds({Cpu()}, {t}, {Record("r0", "t0", Plain(3), 2e-3, 4 * 256 * 1024)});
  auto rows = Characterize(ds);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].op, OpKind::kElementwiseAdd);
  EXPECT_EQ(rows[0].shape_count.at(HardwareClass::kCPU), 1);
  EXPECT_EQ(rows[0].shape_count.count(HardwareClass::kGPU), 0u);
  EXPECT_NEAR(rows[0].max_gflops.at(HardwareClass::kCPU), 4.0 * 256 * 1024 / 1e9, 1e-15);
  EXPECT_NEAR(rows[0].mean_exec_time_ms.at("platinum-8272"), 2.0, 1e-12);
  EXPECT_EQ(rows[0].best_shape, (Shape{4, 256, 1024}));
}

TEST(Characterize, ErrorOnlyOperatorHasShapesButNoMean) {
  Task t{"t0", Elementwise("k0", {8, 8}), "platinum-8272", ""};
  Dataset ds({Cpu()}, {t}, {Record("r0", "t0", Plain(2), std::nullopt)});
  auto rows = Characterize(ds);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].shape_count.at(HardwareClass::kCPU), 1);
  EXPECT_TRUE(rows[0].mean_exec_time_ms.empty());
}

TEST(Characterize, GpuOnlyOperatorMarksCpuAbsent) {
  Task t{"t0", Elementwise("k0", {8, 8}), "t4", ""};
  Dataset ds({Gpu()}, {t}, {Record("r0", "t0", Plain(2, true), 1e-3)});
  auto rows = Characterize(ds);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].shape_count.count(HardwareClass::kCPU), 0u);
  EXPECT_EQ(rows[0].max_gflops.count(HardwareClass::kCPU), 0u);
  std::string table = FormatCharacterizationTable(rows);
  EXPECT_NE(table.find("NA"), std::string::npos);
}

TEST(Characterize, EmptyDatasetEmptyList) { EXPECT_TRUE(Characterize(Dataset()).empty()); }

TEST(Characterize, OrderIndependentAndCountsConsistent) {
  OracleConfig cfg = OracleConfig::Default();
  cfg.seed = 9;
  cfg.error_fraction = 0.1;
  Dataset ds = GenDataset(12, 15, cfg);
  std::vector<MeasurementRecord> shuffled = ds.records();
  Rng rng(1);
  rng.Shuffle(&shuffled);
  Dataset ds2(ds.hardware(), ds.tasks(), shuffled);
  EXPECT_EQ(FormatCharacterizationLines(Characterize(ds)), FormatCharacterizationLines(Characterize(ds2)));

  for (const auto& row : Characterize(ds)) {
    int64_t valid = 0;
    for (const auto& rec : ds.records()) {
      if (rec.valid() && ds.FindTask(rec.task_id)->kernel.op == row.op) ++valid;
    }
    int64_t used = 0;
    for (const auto& [target, n] : row.valid_record_count) used += n;
    EXPECT_EQ(used, valid) << OpKindName(row.op);
  }
}

}  // namespace
}  // namespace tensortune

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
 * \file test_util.h
 * \brief Small dataset builders shared by the unit tests.
 */
#ifndef TENSORTUNE_TESTS_TEST_UTIL_H_
#define TENSORTUNE_TESTS_TEST_UTIL_H_

#include <fmt/format.h>

#include <filesystem>
#include <string>
#include <vector>

#include "tensortune/dataset.h"
#include "tensortune/hardware.h"

namespace tensortune {
namespace testing_util {

inline HardwareParams Cpu(const std::string& id = "platinum-8272") { return *FindBuiltinHardware(id); }
inline HardwareParams Gpu(const std::string& id = "t4") { return *FindBuiltinHardware(id); }

inline Kernel Elementwise(const std::string& id, Shape shape, OpKind op = OpKind::kElementwiseAdd) {
  Kernel k;
  k.kernel_id = id;
  k.op = op;
  k.input_shapes = {shape, shape};
  if (op == OpKind::kRelu || op == OpKind::kTanh || op == OpKind::kFastTanh || op == OpKind::kSoftmaxNorm) {
    k.input_shapes = {shape};
  }
  k.output_shape = shape;
  return k;
}

inline Kernel Matmul(const std::string& id, int64_t m, int64_t kk, int64_t n) {
  Kernel k;
  k.kernel_id = id;
  k.op = OpKind::kMatmul;
  k.input_shapes = {{m, kk}, {kk, n}};
  k.output_shape = {m, n};
  return k;
}

/*! \brief Untiled schedule (one factor of 1 per axis). */
inline ScheduleConfig Plain(size_t rank, bool gpu = false) {
  ScheduleConfig s;
  s.tile_factors.assign(rank, std::vector<int64_t>{1});
  if (gpu) s.thread_binding = ThreadBinding{1, 1};
  return s;
}

inline MeasurementRecord Record(const std::string& id, const std::string& task, ScheduleConfig s,
                                std::optional<double> cost, int64_t flops = 1000) {
  MeasurementRecord r;
  r.record_id = id;
  r.task_id = task;
  r.schedule = std::move(s);
  r.mean_cost = cost;
  r.error_flag = !cost.has_value();
  r.measured_flops = cost ? flops : 0;
  return r;
}

/*!
 * \brief Dataset with `n_tasks` elementwise tasks on one CPU target, each
 *  holding `per_task` records with costs 1, 2, ... (milliseconds).
 */
inline Dataset LadderDataset(int n_tasks, int per_task, const std::string& target = "platinum-8272") {
  std::vector<Task> tasks;
  std::vector<MeasurementRecord> records;
  for (int t = 0; t < n_tasks; ++t) {
    Task task;
    task.task_id = fmt::format("t{:03d}", t);
    task.kernel = Elementwise(fmt::format("k{:03d}", t), {64, 16 * (t + 1)});
    task.target = target;
    for (int r = 0; r < per_task; ++r) {
      ScheduleConfig s = Plain(2);
      s.unroll_factor = 1 << (r % 4);
      records.push_back(Record(fmt::format("r{:03d}-{:03d}", t, r), task.task_id, s, 1e-3 * (r + 1)));
    }
    tasks.push_back(std::move(task));
  }
  return Dataset({*FindBuiltinHardware(target)}, std::move(tasks), std::move(records));
}

/*! \brief Fresh scratch directory under the system temp dir. */
inline std::filesystem::path ScratchDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tensortune_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_util
}  // namespace tensortune

#endif  // TENSORTUNE_TESTS_TEST_UTIL_H_

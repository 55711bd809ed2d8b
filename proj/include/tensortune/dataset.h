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
 * \file tensortune/dataset.h
 * \brief Dataset schema (kernels, tasks, schedules, measurements, hardware),
 *  record validation and the line-delimited persistence format.
 */
#ifndef TENSORTUNE_DATASET_H_
#define TENSORTUNE_DATASET_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tensortune/hardware.h"

namespace tensortune {

/*! \brief Closed operator registry. */
enum class OpKind : int {
  kElementwiseAdd = 0,
  kElementwiseMultiply,
  kElementwiseDivide,
  kRelu,
  kTanh,
  kFastTanh,
  kSoftmaxNorm,
  kConv2d,
  kConv2dWinograd,
  kMatmul,
};
inline constexpr int kNumOps = 10;

std::string_view OpKindName(OpKind op);
std::optional<OpKind> ParseOpKind(std::string_view name);
bool IsElementwise(OpKind op);
bool IsConv(OpKind op);

/*! \brief Largest output rank a kernel may have (feature layout limit). */
inline constexpr size_t kMaxRank = 6;

using Shape = std::vector<int64_t>;

/*!
 * \brief One tensor operator instance.
 *
 * conv2d kernels use NHWC data [N,H,W,Cin] and HWIO weights [Kh,Kw,Cin,Cout]
 * with integer attributes "stride" and "padding"; matmul takes [M,K] x [K,N].
 */
struct Kernel {
  std::string kernel_id;
  OpKind op = OpKind::kElementwiseAdd;
  std::vector<Shape> input_shapes;
  Shape output_shape;
  std::map<std::string, int64_t> attributes;

  bool operator==(const Kernel&) const = default;
};

std::vector<std::string> KernelViolations(const Kernel& k);

/*! \brief A kernel paired with the hardware target it is tuned for. */
struct Task {
  std::string task_id;
  Kernel kernel;
  std::string target;
  std::string network_tag;  // empty when absent

  bool operator==(const Task&) const = default;
};

struct ThreadBinding {
  int64_t threads_x = 1;
  int64_t threads_y = 1;
  bool operator==(const ThreadBinding&) const = default;
};

/*!
 * \brief Four-knob schedule. tile_factors has one (possibly empty) factor list
 *  per output axis; loop extents are the kernel's output dims.
 */
struct ScheduleConfig {
  std::vector<std::vector<int64_t>> tile_factors;
  int64_t unroll_factor = 1;
  int64_t vectorize_width = 1;
  std::optional<ThreadBinding> thread_binding;

  /*! \brief Innermost tile factor of each tiled axis, multiplied together. */
  int64_t InnerTileProduct() const;
  /*! \brief Canonical compact text form, used as a hashing key. */
  std::string Key() const;
  bool operator==(const ScheduleConfig&) const = default;
};

struct MeasurementRecord {
  std::string record_id;
  std::string task_id;
  ScheduleConfig schedule;
  std::optional<double> mean_cost;  // seconds; absent on error
  bool error_flag = false;
  int64_t measured_flops = 0;

  bool valid() const { return !error_flag && mean_cost.has_value(); }
  /*! \brief measured_flops / mean_cost; 0 for error records. */
  double Throughput() const;
  bool operator==(const MeasurementRecord&) const = default;
};

struct Violation {
  std::string code;
  std::string detail;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool Has(std::string_view code) const;
};

/*!
 * \brief Schedule checks that depend only on the kernel and the hardware
 *  class: knob positivity, tile arity and divisibility, GPU-only binding.
 */
std::vector<Violation> ScheduleShapeViolations(const ScheduleConfig& s, const Kernel& k,
                                               HardwareClass cls);

/*!
 * \brief Immutable, indexed collection of hardware, tasks and records.
 *
 * The constructor checks every invariant (unique ids, resolvable references,
 * kernel shapes, record validity) and throws DataError on the first failure.
 */
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<HardwareParams> hardware, std::vector<Task> tasks,
          std::vector<MeasurementRecord> records);

  const std::vector<HardwareParams>& hardware() const { return hardware_; }
  const std::vector<Task>& tasks() const { return tasks_; }
  const std::vector<MeasurementRecord>& records() const { return records_; }
  bool empty() const { return records_.empty() && tasks_.empty(); }

  const HardwareParams* FindHardware(std::string_view target_id) const;
  const Task* FindTask(std::string_view task_id) const;
  const MeasurementRecord* FindRecord(std::string_view record_id) const;
  /*! \brief Indices into records() of the task's records, in file order. */
  const std::vector<size_t>& RecordsOfTask(std::string_view task_id) const;
  /*! \brief Indices into tasks() of the tasks on a target, in file order. */
  const std::vector<size_t>& TasksOfTarget(std::string_view target_id) const;
  /*! \brief Targets that own at least one task, in first-appearance order. */
  std::vector<std::string> TaskTargets() const;
  const HardwareParams& HardwareOf(const Task& task) const;

  /*!
   * \brief New dataset keeping the records selected by `keep_record` (order
   *  preserved). Tasks left without records are dropped when drop_empty_tasks.
   */
  Dataset Filter(const std::vector<bool>& keep_record, bool drop_empty_tasks) const;
  Dataset FilterRecords(const std::vector<std::string>& record_ids, bool drop_empty_tasks) const;

  /*! \brief Digest of the serialized form; identifies training data in provenance. */
  std::string Fingerprint() const;

  bool operator==(const Dataset& o) const {
    return hardware_ == o.hardware_ && tasks_ == o.tasks_ && records_ == o.records_;
  }

 private:
  void BuildIndexes();

  std::vector<HardwareParams> hardware_;
  std::vector<Task> tasks_;
  std::vector<MeasurementRecord> records_;
  std::unordered_map<std::string, size_t> hardware_index_;
  std::unordered_map<std::string, size_t> task_index_;
  std::unordered_map<std::string, size_t> record_index_;
  std::unordered_map<std::string, std::vector<size_t>> task_records_;
  std::unordered_map<std::string, std::vector<size_t>> target_tasks_;
};

/*!
 * \brief Checks one record against the dataset: references, cost/error
 *  consistency, knob positivity, tile divisibility, GPU binding on CPU.
 *  Violations are returned as data; nothing throws.
 */
ValidationResult ValidateRecord(const MeasurementRecord& rec, const Dataset& ds);

struct LoadOptions {
  bool lenient = false;  // ignore unknown fields instead of rejecting them
};

inline constexpr std::string_view kDatasetFormat = "tensortune.v1";

Dataset ReadDataset(std::istream& in, const LoadOptions& options = {});
void WriteDataset(const Dataset& ds, std::ostream& out);
Dataset LoadDataset(const std::string& path, const LoadOptions& options = {});
void SaveDataset(const Dataset& ds, const std::string& path);

}  // namespace tensortune

#endif  // TENSORTUNE_DATASET_H_

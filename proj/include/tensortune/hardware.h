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
 * \file tensortune/hardware.h
 * \brief Hardware target description, log2 feature vectors and the
 *  source-to-target feature mapping used for heterogeneous transfer.
 */
#ifndef TENSORTUNE_HARDWARE_H_
#define TENSORTUNE_HARDWARE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tensortune {

enum class HardwareClass { kCPU, kGPU };

std::string_view HardwareClassName(HardwareClass cls);
std::optional<HardwareClass> ParseHardwareClass(std::string_view name);

/*!
 * \brief Parameters of one hardware target.
 *
 * Fields that do not apply to the target's class are absent: a CPU carries no
 * warp_size or per-block limits, a GPU carries no num_cores.
 */
struct HardwareParams {
  std::string target_id;
  HardwareClass hardware_class = HardwareClass::kCPU;
  std::optional<int64_t> cache_line_bytes;
  std::optional<int64_t> max_local_memory_per_block;
  std::optional<int64_t> max_shared_memory_per_block;
  std::optional<int64_t> max_threads_per_block;
  std::optional<int64_t> max_vthread_extent;
  std::optional<int64_t> num_cores;
  std::optional<int64_t> vector_unit_bytes;
  std::optional<int64_t> warp_size;

  bool is_gpu() const { return hardware_class == HardwareClass::kGPU; }
  bool operator==(const HardwareParams&) const = default;
};

/*! \brief Violations of the class/positivity invariants; empty when valid. */
std::vector<std::string> HardwareViolations(const HardwareParams& hw);

/*!
 * Canonical slot order of the hardware feature vector. The first eight slots
 * are the numeric parameters; the last one encodes the hardware class
 * (raw value 1 for CPU, 2 for GPU, so the slot holds 0 or 1 after log2).
 */
enum HardwareSlot : int {
  kSlotCacheLineBytes = 0,
  kSlotMaxLocalMemoryPerBlock,
  kSlotMaxSharedMemoryPerBlock,
  kSlotMaxThreadsPerBlock,
  kSlotMaxVthreadExtent,
  kSlotNumCores,
  kSlotVectorUnitBytes,
  kSlotWarpSize,
  kSlotHardwareClass,
  kNumHardwareSlots
};

std::string_view HardwareSlotName(int slot);

struct HardwareFeatureVector {
  std::array<double, kNumHardwareSlots> values{};
  std::array<bool, kNumHardwareSlots> presence_mask{};

  bool operator==(const HardwareFeatureVector&) const = default;
};

/*! \brief log2-scaled, class-masked feature vector of a target. */
HardwareFeatureVector FeatureVector(const HardwareParams& hw);

enum class SlotAction { kKeep, kReplaceWithDst, kZero };

/*! \brief Per-slot rewrite turning source-encoded hardware features into target ones. */
struct FeatureMapping {
  std::array<SlotAction, kNumHardwareSlots> actions{};
  HardwareFeatureVector dst;

  HardwareFeatureVector Apply(const HardwareFeatureVector& v) const;
  bool IsIdentityOn(const HardwareFeatureVector& v) const { return Apply(v) == v; }
  bool operator==(const FeatureMapping&) const = default;
};

FeatureMapping MapFeatures(const HardwareParams& src, const HardwareParams& dst);

/*!
 * \brief Built-in target registry: a fixed set of CPUs and GPUs
 *  with their hardware parameters.
 */
const std::vector<HardwareParams>& BuiltinHardware();
const HardwareParams* FindBuiltinHardware(std::string_view target_id);

}  // namespace tensortune

#endif  // TENSORTUNE_HARDWARE_H_

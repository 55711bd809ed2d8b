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
 * \file tensortune/featurize.h
 * \brief Model inputs built from (kernel, schedule, hardware): a flat vector
 *  for tree/MLP models, a knob-step sequence for the recurrent tuner, and the
 *  task-relative label.
 *
 * Flat layout (47 slots):
 *   [0, 10)   operator one-hot, registry order
 *   [10, 16)  log2 output dims, left aligned, zero padded
 *   [16]      log2 flop_count
 *   [17, 25)  log2 tile factors flattened axis by axis, zero padded
 *   [25]      log2 unroll    [26] log2 vectorize
 *   [27]      log2 threads_x [28] log2 threads_y (0 when unbound)
 *   [29, 38)  hardware feature values
 *   [38, 47)  hardware presence mask (0/1)
 */
#ifndef TENSORTUNE_FEATURIZE_H_
#define TENSORTUNE_FEATURIZE_H_

#include <array>
#include <cstdint>
#include <vector>

#include "tensortune/dataset.h"
#include "tensortune/hardware.h"

namespace tensortune {

inline constexpr uint32_t kFlatLayoutVersion = 1;
inline constexpr int kFlatLength = 47;
inline constexpr int kOpOffset = 0;
inline constexpr int kDimsOffset = 10;
inline constexpr int kMaxDimSlots = 6;
inline constexpr int kFlopsSlot = 16;
inline constexpr int kTileOffset = 17;
inline constexpr int kMaxTileSlots = 8;
inline constexpr int kUnrollSlot = 25;
inline constexpr int kVectorizeSlot = 26;
inline constexpr int kThreadsXSlot = 27;
inline constexpr int kThreadsYSlot = 28;
inline constexpr int kHwValueOffset = 29;
inline constexpr int kHwMaskOffset = 38;

struct FlatFeatures {
  std::array<double, kFlatLength> values{};
  uint32_t layout_version = kFlatLayoutVersion;

  bool operator==(const FlatFeatures&) const = default;
};

/*! \brief Step kinds, in canonical emission order. */
enum class StepKind : int { kTile = 0, kUnroll, kVectorize, kBind };

inline constexpr int kStepWidth = 6;  // kind one-hot (4) | log2 knob | axis index
inline constexpr int kMaxSequenceLength = 32;
/*! \brief Context = op one-hot | dims | log2 flops | hardware values | mask. */
inline constexpr int kContextLength = 35;
inline constexpr int kContextHwOffset = 17;

using StepVector = std::array<double, kStepWidth>;

struct StepSequence {
  std::vector<StepVector> steps;
  std::array<double, kContextLength> context{};
  uint32_t layout_version = kFlatLayoutVersion;

  bool operator==(const StepSequence&) const = default;
};

FlatFeatures EncodeFlat(const Kernel& k, const ScheduleConfig& s, const HardwareParams& hw);
FlatFeatures EncodeFlat(const MeasurementRecord& rec, const Dataset& ds);

/*!
 * \brief Steps: one per tile factor (axis by axis), then unroll, vectorize,
 *  then threads_x and threads_y (bind, axis index 0/1) when bound.
 */
StepSequence EncodeSequence(const Kernel& k, const ScheduleConfig& s, const HardwareParams& hw);
StepSequence EncodeSequence(const MeasurementRecord& rec, const Dataset& ds);

/*! \brief Kernel and hardware slice of a flat vector. */
std::array<double, kContextLength> ContextOf(const FlatFeatures& f);

/*! \brief Knob values recovered from a sequence (inverse of the step encoding). */
struct DecodedKnobs {
  std::vector<std::vector<int64_t>> tile_factors;  // indexed by axis
  int64_t unroll_factor = 1;
  int64_t vectorize_width = 1;
  std::vector<int64_t> bind;  // threads_x, threads_y when present
};
DecodedKnobs DecodeSteps(const StepSequence& seq);

/*!
 * \brief Rewrites the hardware values/mask of a flat vector or a sequence
 *  context with a feature mapping.
 */
void ApplyMapping(const FeatureMapping& m, FlatFeatures* f);
void ApplyMapping(const FeatureMapping& m, StepSequence* seq);

/*!
 * \brief Best mean_cost among the task's valid records divided by the
 *  record's mean_cost; 1.0 exactly for the task's fastest records.
 * \throws DataError on an error-flagged record.
 */
double Label(const MeasurementRecord& rec, const Dataset& ds);

}  // namespace tensortune

#endif  // TENSORTUNE_FEATURIZE_H_

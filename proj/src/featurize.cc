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

#include "tensortune/featurize.h"

#include <cmath>

#include "tensortune/common.h"
#include "tensortune/workload.h"

namespace tensortune {
namespace {

double Log2(int64_t v) { return std::log2(static_cast<double>(v)); }

struct Resolved {
  const Task* task;
  const HardwareParams* hw;
};

Resolved Resolve(const MeasurementRecord& rec, const Dataset& ds) {
  const Task* task = ds.FindTask(rec.task_id);
  if (task == nullptr) throw DataError("record " + rec.record_id + ": unresolvable task_id");
  const HardwareParams* hw = ds.FindHardware(task->target);
  if (hw == nullptr) throw DataError("record " + rec.record_id + ": unresolvable target");
  return {task, hw};
}

}  // namespace

FlatFeatures EncodeFlat(const Kernel& k, const ScheduleConfig& s, const HardwareParams& hw) {
  FlatFeatures f;
  auto& v = f.values;
  v[kOpOffset + static_cast<int>(k.op)] = 1.0;
  if (k.output_shape.size() > kMaxDimSlots) throw DataError("kernel rank exceeds feature layout");
  for (size_t i = 0; i < k.output_shape.size(); ++i) v[kDimsOffset + i] = Log2(k.output_shape[i]);
  v[kFlopsSlot] = Log2(FlopCount(k));
  int slot = 0;
  for (const auto& axis : s.tile_factors) {
    for (int64_t factor : axis) {
      if (slot >= kMaxTileSlots) throw DataError("schedule has more than 8 tile factors");
      v[kTileOffset + slot++] = Log2(factor);
    }
  }
  v[kUnrollSlot] = Log2(s.unroll_factor);
  v[kVectorizeSlot] = Log2(s.vectorize_width);
  if (s.thread_binding) {
    v[kThreadsXSlot] = Log2(s.thread_binding->threads_x);
    v[kThreadsYSlot] = Log2(s.thread_binding->threads_y);
  }
  HardwareFeatureVector hv = FeatureVector(hw);
  for (int i = 0; i < kNumHardwareSlots; ++i) {
    v[kHwValueOffset + i] = hv.values[i];
    v[kHwMaskOffset + i] = hv.presence_mask[i] ? 1.0 : 0.0;
  }
  return f;
}

FlatFeatures EncodeFlat(const MeasurementRecord& rec, const Dataset& ds) {
  Resolved r = Resolve(rec, ds);
  return EncodeFlat(r.task->kernel, rec.schedule, *r.hw);
}

std::array<double, kContextLength> ContextOf(const FlatFeatures& f) {
  std::array<double, kContextLength> ctx{};
  for (int i = 0; i < kTileOffset; ++i) ctx[i] = f.values[i];
  for (int i = 0; i < 2 * kNumHardwareSlots; ++i) ctx[kContextHwOffset + i] = f.values[kHwValueOffset + i];
  return ctx;
}

StepSequence EncodeSequence(const Kernel& k, const ScheduleConfig& s, const HardwareParams& hw) {
  StepSequence seq;
  auto push = [&](StepKind kind, int64_t value, int axis) {
    StepVector step{};
    step[static_cast<int>(kind)] = 1.0;
    step[4] = Log2(value);
    step[5] = static_cast<double>(axis);
    seq.steps.push_back(step);
  };
  for (size_t axis = 0; axis < s.tile_factors.size(); ++axis) {
    for (int64_t factor : s.tile_factors[axis]) push(StepKind::kTile, factor, static_cast<int>(axis));
  }
  push(StepKind::kUnroll, s.unroll_factor, 0);
  push(StepKind::kVectorize, s.vectorize_width, 0);
  if (s.thread_binding) {
    push(StepKind::kBind, s.thread_binding->threads_x, 0);
    push(StepKind::kBind, s.thread_binding->threads_y, 1);
  }
  if (seq.steps.size() > kMaxSequenceLength) throw DataError("schedule sequence longer than 32 steps");
  seq.context = ContextOf(EncodeFlat(k, s, hw));
  return seq;
}

StepSequence EncodeSequence(const MeasurementRecord& rec, const Dataset& ds) {
  Resolved r = Resolve(rec, ds);
  return EncodeSequence(r.task->kernel, rec.schedule, *r.hw);
}

DecodedKnobs DecodeSteps(const StepSequence& seq) {
  DecodedKnobs out;
  for (const auto& step : seq.steps) {
    int64_t value = std::llround(std::exp2(step[4]));
    int axis = static_cast<int>(std::lround(step[5]));
    if (step[static_cast<int>(StepKind::kTile)] == 1.0) {
      if (static_cast<int>(out.tile_factors.size()) <= axis) out.tile_factors.resize(axis + 1);
      out.tile_factors[axis].push_back(value);
    } else if (step[static_cast<int>(StepKind::kUnroll)] == 1.0) {
      out.unroll_factor = value;
    } else if (step[static_cast<int>(StepKind::kVectorize)] == 1.0) {
      out.vectorize_width = value;
    } else {
      out.bind.push_back(value);
    }
  }
  return out;
}

void ApplyMapping(const FeatureMapping& m, FlatFeatures* f) {
  HardwareFeatureVector hv;
  for (int i = 0; i < kNumHardwareSlots; ++i) {
    hv.values[i] = f->values[kHwValueOffset + i];
    hv.presence_mask[i] = f->values[kHwMaskOffset + i] != 0.0;
  }
  hv = m.Apply(hv);
  for (int i = 0; i < kNumHardwareSlots; ++i) {
    f->values[kHwValueOffset + i] = hv.values[i];
    f->values[kHwMaskOffset + i] = hv.presence_mask[i] ? 1.0 : 0.0;
  }
}

void ApplyMapping(const FeatureMapping& m, StepSequence* seq) {
  HardwareFeatureVector hv;
  const int mask_offset = kContextHwOffset + kNumHardwareSlots;
  for (int i = 0; i < kNumHardwareSlots; ++i) {
    hv.values[i] = seq->context[kContextHwOffset + i];
    hv.presence_mask[i] = seq->context[mask_offset + i] != 0.0;
  }
  hv = m.Apply(hv);
  for (int i = 0; i < kNumHardwareSlots; ++i) {
    seq->context[kContextHwOffset + i] = hv.values[i];
    seq->context[mask_offset + i] = hv.presence_mask[i] ? 1.0 : 0.0;
  }
}

double Label(const MeasurementRecord& rec, const Dataset& ds) {
  if (!rec.valid()) throw DataError("record " + rec.record_id + ": no label for an error record");
  double best = *rec.mean_cost;
  for (size_t idx : ds.RecordsOfTask(rec.task_id)) {
    const auto& other = ds.records()[idx];
    if (other.valid()) best = std::min(best, *other.mean_cost);
  }
  return best / *rec.mean_cost;
}

}  // namespace tensortune

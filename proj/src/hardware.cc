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

#include "tensortune/hardware.h"

#include <cmath>

namespace tensortune {
namespace {

struct SlotField {
  std::string_view name;
  std::optional<int64_t> HardwareParams::*member;
  bool cpu;
  bool gpu;
};

// Numeric slots in canonical order; the class slot is handled separately.
constexpr SlotField kSlotFields[] = {
    {"cache_line_bytes", &HardwareParams::cache_line_bytes, true, true},
    {"max_local_memory_per_block", &HardwareParams::max_local_memory_per_block, false, true},
    {"max_shared_memory_per_block", &HardwareParams::max_shared_memory_per_block, false, true},
    {"max_threads_per_block", &HardwareParams::max_threads_per_block, false, true},
    {"max_vthread_extent", &HardwareParams::max_vthread_extent, false, true},
    {"num_cores", &HardwareParams::num_cores, true, false},
    {"vector_unit_bytes", &HardwareParams::vector_unit_bytes, true, true},
    {"warp_size", &HardwareParams::warp_size, false, true},
};

bool Applies(const SlotField& f, HardwareClass cls) {
  return cls == HardwareClass::kGPU ? f.gpu : f.cpu;
}

HardwareParams MakeCpu(std::string id, int64_t cores, int64_t vector_bytes) {
  HardwareParams hw;
  hw.target_id = std::move(id);
  hw.hardware_class = HardwareClass::kCPU;
  hw.cache_line_bytes = 64;
  hw.num_cores = cores;
  hw.vector_unit_bytes = vector_bytes;
  return hw;
}

HardwareParams MakeGpu(std::string id, int64_t shared_bytes) {
  HardwareParams hw;
  hw.target_id = std::move(id);
  hw.hardware_class = HardwareClass::kGPU;
  hw.cache_line_bytes = 64;
  hw.max_local_memory_per_block = 2147483647;
  hw.max_shared_memory_per_block = shared_bytes;
  hw.max_threads_per_block = 1024;
  hw.max_vthread_extent = 8;
  hw.vector_unit_bytes = 16;
  hw.warp_size = 32;
  return hw;
}

}  // namespace

std::string_view HardwareClassName(HardwareClass cls) {
  return cls == HardwareClass::kGPU ? "GPU" : "CPU";
}

std::optional<HardwareClass> ParseHardwareClass(std::string_view name) {
  if (name == "CPU") return HardwareClass::kCPU;
  if (name == "GPU") return HardwareClass::kGPU;
  return std::nullopt;
}

std::string_view HardwareSlotName(int slot) {
  if (slot >= 0 && slot < kSlotHardwareClass) return kSlotFields[slot].name;
  if (slot == kSlotHardwareClass) return "hardware_class";
  return "?";
}

std::vector<std::string> HardwareViolations(const HardwareParams& hw) {
  std::vector<std::string> out;
  if (hw.target_id.empty()) out.push_back("empty target_id");
  for (const auto& f : kSlotFields) {
    const auto& value = hw.*(f.member);
    if (Applies(f, hw.hardware_class)) {
      if (!value) {
        out.push_back(std::string(f.name) + " missing for " +
                      std::string(HardwareClassName(hw.hardware_class)));
      } else if (*value <= 0) {
        out.push_back(std::string(f.name) + " must be > 0");
      }
    } else if (value) {
      out.push_back(std::string(f.name) + " not applicable to " +
                    std::string(HardwareClassName(hw.hardware_class)));
    }
  }
  return out;
}

HardwareFeatureVector FeatureVector(const HardwareParams& hw) {
  HardwareFeatureVector v;
  for (int i = 0; i < kSlotHardwareClass; ++i) {
    const auto& value = hw.*(kSlotFields[i].member);
    if (value && *value > 0) {
      v.values[i] = std::log2(static_cast<double>(*value));
      v.presence_mask[i] = true;
    }
  }
  v.values[kSlotHardwareClass] = hw.is_gpu() ? 1.0 : 0.0;
  v.presence_mask[kSlotHardwareClass] = true;
  return v;
}

HardwareFeatureVector FeatureMapping::Apply(const HardwareFeatureVector& v) const {
  HardwareFeatureVector out = v;
  for (int i = 0; i < kNumHardwareSlots; ++i) {
    switch (actions[i]) {
      case SlotAction::kKeep:
        break;
      case SlotAction::kReplaceWithDst:
        out.values[i] = dst.values[i];
        out.presence_mask[i] = dst.presence_mask[i];
        break;
      case SlotAction::kZero:
        out.values[i] = 0.0;
        out.presence_mask[i] = false;
        break;
    }
  }
  return out;
}

FeatureMapping MapFeatures(const HardwareParams& src, const HardwareParams& dst) {
  FeatureMapping m;
  HardwareFeatureVector sv = FeatureVector(src);
  m.dst = FeatureVector(dst);
  for (int i = 0; i < kNumHardwareSlots; ++i) {
    bool in_src = sv.presence_mask[i];
    bool in_dst = m.dst.presence_mask[i];
    if (in_dst) {
      m.actions[i] = SlotAction::kReplaceWithDst;
    } else if (in_src) {
      m.actions[i] = SlotAction::kZero;
    } else {
      m.actions[i] = SlotAction::kKeep;
    }
  }
  return m;
}

const std::vector<HardwareParams>& BuiltinHardware() {
  static const std::vector<HardwareParams> registry = {
      MakeCpu("platinum-8272", 16, 64),
      MakeCpu("epyc-7452", 4, 32),
      MakeCpu("graviton2", 16, 16),
      MakeCpu("xeon-gold-5115", 40, 64),
      MakeGpu("t4", 49152),
      MakeGpu("rtx-2080", 65536),
      MakeGpu("a100", 166912),
      MakeGpu("a40", 101376),
  };
  return registry;
}

const HardwareParams* FindBuiltinHardware(std::string_view target_id) {
  for (const auto& hw : BuiltinHardware()) {
    if (hw.target_id == target_id) return &hw;
  }
  return nullptr;
}

}  // namespace tensortune

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

#include "tensortune/serialization.h"

#include <fmt/format.h>

#include <fstream>
#include <set>
#include <sstream>

#include "object_reader.h"
#include "tensortune/common.h"

namespace tensortune {
namespace {

using detail::ObjectReader;

std::vector<int64_t> IntList(const Json& j, std::string_view what) {
  if (!j.is_array()) throw DataError(std::string(what) + ": expected an integer list");
  std::vector<int64_t> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw DataError(std::string(what) + ": expected integers");
    out.push_back(v.get<int64_t>());
  }
  return out;
}

std::vector<std::vector<int64_t>> IntListList(const Json& j, std::string_view what) {
  if (!j.is_array()) throw DataError(std::string(what) + ": expected a list of lists");
  std::vector<std::vector<int64_t>> out;
  for (const auto& v : j) out.push_back(IntList(v, what));
  return out;
}

}  // namespace

namespace detail {

ObjectReader::ObjectReader(const Json& j, std::string_view what, bool lenient)
    : json_(j), what_(what), lenient_(lenient) {
  if (!j.is_object()) throw DataError(what_ + ": expected an object");
}

const Json* ObjectReader::Optional(std::string_view key) {
  consumed_.emplace(key);
  auto it = json_.find(std::string(key));
  if (it == json_.end() || it->is_null()) return nullptr;
  return &*it;
}

const Json& ObjectReader::Required(std::string_view key) {
  const Json* v = Optional(key);
  if (v == nullptr) throw DataError(what_ + ": missing field \"" + std::string(key) + "\"");
  return *v;
}

std::string ObjectReader::String(std::string_view key) {
  const Json& v = Required(key);
  if (!v.is_string()) throw DataError(what_ + ": field \"" + std::string(key) + "\" must be a string");
  return v.get<std::string>();
}

int64_t ObjectReader::Int(std::string_view key) {
  const Json& v = Required(key);
  if (!v.is_number_integer()) {
    throw DataError(what_ + ": field \"" + std::string(key) + "\" must be an integer");
  }
  return v.get<int64_t>();
}

std::optional<int64_t> ObjectReader::OptionalInt(std::string_view key) {
  const Json* v = Optional(key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_number_integer()) {
    throw DataError(what_ + ": field \"" + std::string(key) + "\" must be an integer");
  }
  return v->get<int64_t>();
}

double ObjectReader::Number(std::string_view key) {
  const Json& v = Required(key);
  if (!v.is_number()) throw DataError(what_ + ": field \"" + std::string(key) + "\" must be a number");
  return v.get<double>();
}

bool ObjectReader::Bool(std::string_view key) {
  const Json& v = Required(key);
  if (!v.is_boolean()) throw DataError(what_ + ": field \"" + std::string(key) + "\" must be a boolean");
  return v.get<bool>();
}

void ObjectReader::Finish() const {
  if (lenient_) return;
  for (auto it = json_.begin(); it != json_.end(); ++it) {
    if (!consumed_.count(it.key())) {
      throw DataError(what_ + ": unknown field \"" + it.key() + "\"");
    }
  }
}

}  // namespace detail

Json HardwareToJson(const HardwareParams& hw) {
  Json j;
  j["target_id"] = hw.target_id;
  j["hardware_class"] = std::string(HardwareClassName(hw.hardware_class));
  auto put = [&](const char* name, const std::optional<int64_t>& v) {
    if (v) j[name] = *v;
  };
  put("cache_line_bytes", hw.cache_line_bytes);
  put("max_local_memory_per_block", hw.max_local_memory_per_block);
  put("max_shared_memory_per_block", hw.max_shared_memory_per_block);
  put("max_threads_per_block", hw.max_threads_per_block);
  put("max_vthread_extent", hw.max_vthread_extent);
  put("num_cores", hw.num_cores);
  put("vector_unit_bytes", hw.vector_unit_bytes);
  put("warp_size", hw.warp_size);
  return j;
}

HardwareParams HardwareFromJson(const Json& j, bool lenient) {
  ObjectReader r(j, "hardware", lenient);
  HardwareParams hw;
  hw.target_id = r.String("target_id");
  auto cls = ParseHardwareClass(r.String("hardware_class"));
  if (!cls) throw DataError("hardware " + hw.target_id + ": hardware_class must be CPU or GPU");
  hw.hardware_class = *cls;
  hw.cache_line_bytes = r.OptionalInt("cache_line_bytes");
  hw.max_local_memory_per_block = r.OptionalInt("max_local_memory_per_block");
  hw.max_shared_memory_per_block = r.OptionalInt("max_shared_memory_per_block");
  hw.max_threads_per_block = r.OptionalInt("max_threads_per_block");
  hw.max_vthread_extent = r.OptionalInt("max_vthread_extent");
  hw.num_cores = r.OptionalInt("num_cores");
  hw.vector_unit_bytes = r.OptionalInt("vector_unit_bytes");
  hw.warp_size = r.OptionalInt("warp_size");
  r.Finish();
  return hw;
}

Json KernelToJson(const Kernel& k) {
  Json j;
  j["kernel_id"] = k.kernel_id;
  j["op"] = std::string(OpKindName(k.op));
  j["input_shapes"] = k.input_shapes;
  j["output_shape"] = k.output_shape;
  Json attrs = Json::object();
  for (const auto& [name, value] : k.attributes) attrs[name] = value;
  j["attributes"] = attrs;
  return j;
}

Kernel KernelFromJson(const Json& j, bool lenient) {
  ObjectReader r(j, "kernel", lenient);
  Kernel k;
  k.kernel_id = r.String("kernel_id");
  std::string op_name = r.String("op");
  auto op = ParseOpKind(op_name);
  if (!op) throw DataError("kernel " + k.kernel_id + ": unknown operator \"" + op_name + "\"");
  k.op = *op;
  k.input_shapes = IntListList(r.Required("input_shapes"), "input_shapes");
  k.output_shape = IntList(r.Required("output_shape"), "output_shape");
  if (const Json* attrs = r.Optional("attributes")) {
    if (!attrs->is_object()) throw DataError("kernel " + k.kernel_id + ": attributes must be an object");
    for (auto it = attrs->begin(); it != attrs->end(); ++it) {
      if (!it->is_number_integer()) {
        throw DataError("kernel " + k.kernel_id + ": attribute " + it.key() + " must be an integer");
      }
      k.attributes[it.key()] = it->get<int64_t>();
    }
  }
  r.Finish();
  return k;
}

Json ScheduleToJson(const ScheduleConfig& s) {
  Json j;
  j["tile_factors"] = s.tile_factors;
  j["unroll_factor"] = s.unroll_factor;
  j["vectorize_width"] = s.vectorize_width;
  if (s.thread_binding) {
    j["thread_binding"] = Json::array({s.thread_binding->threads_x, s.thread_binding->threads_y});
  }
  return j;
}

ScheduleConfig ScheduleFromJson(const Json& j, bool lenient) {
  ObjectReader r(j, "schedule", lenient);
  ScheduleConfig s;
  s.tile_factors = IntListList(r.Required("tile_factors"), "tile_factors");
  s.unroll_factor = r.Int("unroll_factor");
  s.vectorize_width = r.Int("vectorize_width");
  if (const Json* b = r.Optional("thread_binding")) {
    auto pair = IntList(*b, "thread_binding");
    if (pair.size() != 2) throw DataError("schedule: thread_binding must have two entries");
    s.thread_binding = ThreadBinding{pair[0], pair[1]};
  }
  r.Finish();
  return s;
}

std::string FormatCost(double seconds) { return fmt::format("{:.16e}", seconds); }

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
}

}  // namespace tensortune

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

#include "tensortune/workload.h"

#include <fmt/format.h>

#include <algorithm>
#include <set>

#include "tensortune/common.h"
#include "tensortune/serialization.h"

namespace tensortune {
namespace {

int64_t CheckedProduct(std::initializer_list<int64_t> factors) {
  int64_t p = 1;
  for (int64_t f : factors) {
    if (__builtin_mul_overflow(p, f, &p)) throw NumericError("FLOPs count overflows 2^63");
  }
  return p;
}

std::string ShapeKey(const Kernel& k) {
  Json j = KernelToJson(k);
  j.erase("kernel_id");
  j.erase("op");
  return j.dump();
}

std::string ShapeText(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace

int64_t ElementwiseCost(OpKind op) {
  switch (op) {
    case OpKind::kTanh:
    case OpKind::kFastTanh:
      return 4;
    case OpKind::kSoftmaxNorm:
      return 5;
    default:
      return 1;
  }
}

int64_t FlopCount(const Kernel& k) {
  auto errs = KernelViolations(k);
  if (!errs.empty()) throw DataError("kernel " + k.kernel_id + ": " + errs.front());
  if (IsElementwise(k.op)) {
    int64_t elems = 1;
    for (int64_t d : k.output_shape) elems = CheckedProduct({elems, d});
    return CheckedProduct({elems, ElementwiseCost(k.op)});
  }
  if (k.op == OpKind::kMatmul) {
    const auto& a = k.input_shapes[0];
    const auto& b = k.input_shapes[1];
    return CheckedProduct({2, a[0], a[1], b[1]});
  }
  const auto& w = k.input_shapes[1];
  const auto& out = k.output_shape;
  int64_t direct = CheckedProduct({2, out[0], out[1], out[2], out[3], w[0], w[1], w[2]});
  return k.op == OpKind::kConv2dWinograd ? direct / 2 : direct;
}

std::vector<OpCharacterization> Characterize(const Dataset& ds) {
  std::map<OpKind, OpCharacterization> by_op;
  std::map<OpKind, std::map<HardwareClass, std::set<std::string>>> shapes;
  std::map<OpKind, std::map<std::string, std::vector<double>>> times;
  std::map<OpKind, double> best_gflops;

  for (const auto& task : ds.tasks()) {
    const HardwareParams& hw = ds.HardwareOf(task);
    auto& entry = by_op[task.kernel.op];
    entry.op = task.kernel.op;
    shapes[task.kernel.op][hw.hardware_class].insert(ShapeKey(task.kernel));
    double gflops = static_cast<double>(FlopCount(task.kernel)) / 1e9;
    for (size_t idx : ds.RecordsOfTask(task.task_id)) {
      const auto& rec = ds.records()[idx];
      if (!rec.valid()) continue;
      auto [it, fresh] = entry.max_gflops.emplace(hw.hardware_class, gflops);
      if (!fresh) it->second = std::max(it->second, gflops);
      auto best = best_gflops.find(task.kernel.op);
      if (best == best_gflops.end() || gflops > best->second) {
        best_gflops[task.kernel.op] = gflops;
        entry.best_shape = task.kernel.output_shape;
      }
      times[task.kernel.op][task.target].push_back(*rec.mean_cost * 1e3);
      entry.valid_record_count[task.target] += 1;
    }
  }

  std::vector<OpCharacterization> out;
  for (auto& [op, entry] : by_op) {
    for (const auto& [cls, set] : shapes[op]) entry.shape_count[cls] = static_cast<int64_t>(set.size());
    for (auto& [target, values] : times[op]) {
      // Sorted summation keeps the mean independent of record order.
      std::sort(values.begin(), values.end());
      double sum = 0;
      for (double v : values) sum += v;
      entry.mean_exec_time_ms[target] = sum / static_cast<double>(values.size());
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::string FormatCharacterizationTable(const std::vector<OpCharacterization>& rows) {
  std::vector<std::string> targets;
  for (const auto& r : rows) {
    for (const auto& [t, ms] : r.mean_exec_time_ms) {
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
  }
  std::sort(targets.begin(), targets.end());

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"op", "shapes_cpu", "shapes_gpu", "max_gflops_cpu",
                                     "max_gflops_gpu", "best_shape"};
  for (const auto& t : targets) header.push_back("mean_ms_" + t);
  cells.push_back(header);
  for (const auto& r : rows) {
    std::vector<std::string> line = {std::string(OpKindName(r.op))};
    for (HardwareClass cls : {HardwareClass::kCPU, HardwareClass::kGPU}) {
      auto it = r.shape_count.find(cls);
      line.push_back(it == r.shape_count.end() ? "NA" : std::to_string(it->second));
    }
    for (HardwareClass cls : {HardwareClass::kCPU, HardwareClass::kGPU}) {
      auto it = r.max_gflops.find(cls);
      line.push_back(it == r.max_gflops.end() ? "NA" : fmt::format("{:.6g}", it->second));
    }
    line.push_back(r.best_shape.empty() ? "NA" : ShapeText(r.best_shape));
    for (const auto& t : targets) {
      auto it = r.mean_exec_time_ms.find(t);
      line.push_back(it == r.mean_exec_time_ms.end() ? "NA" : fmt::format("{:.6g}", it->second));
    }
    cells.push_back(std::move(line));
  }
  std::vector<size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  std::string out;
  for (const auto& line : cells) {
    for (size_t i = 0; i < line.size(); ++i) {
      out += fmt::format("{:<{}}", line[i], width[i]);
      out += i + 1 == line.size() ? "\n" : "  ";
    }
  }
  return out;
}

std::string FormatCharacterizationLines(const std::vector<OpCharacterization>& rows) {
  std::string out;
  for (const auto& r : rows) {
    Json j;
    j["op"] = std::string(OpKindName(r.op));
    Json counts = Json::object();
    for (const auto& [cls, n] : r.shape_count) counts[std::string(HardwareClassName(cls))] = n;
    j["shape_count"] = counts;
    Json gflops = Json::object();
    for (const auto& [cls, g] : r.max_gflops) gflops[std::string(HardwareClassName(cls))] = g;
    j["max_gflops"] = gflops;
    j["best_shape"] = r.best_shape;
    Json times = Json::object();
    for (const auto& [t, ms] : r.mean_exec_time_ms) times[t] = ms;
    j["mean_exec_time_ms"] = times;
    Json counts_used = Json::object();
    for (const auto& [t, n] : r.valid_record_count) counts_used[t] = n;
    j["valid_record_count"] = counts_used;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace tensortune

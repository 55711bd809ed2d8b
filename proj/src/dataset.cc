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
 * \file dataset.cc
 * \brief Dataset construction, record validation and line-delimited I/O.
 */
#include "tensortune/dataset.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "object_reader.h"
#include "tensortune/common.h"
#include "tensortune/serialization.h"

namespace tensortune {
namespace {

constexpr std::string_view kOpNames[kNumOps] = {
    "elementwise-add", "elementwise-multiply", "elementwise-divide", "relu",
    "tanh",            "fast-tanh",            "softmax-norm",       "conv2d",
    "conv2d-winograd", "matmul",
};

std::string ShapeText(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

void CheckDims(const Shape& s, const std::string& what, std::vector<std::string>* out) {
  if (s.empty()) out->push_back(what + " has rank 0");
  for (int64_t d : s) {
    if (d < 1) {
      out->push_back(what + " " + ShapeText(s) + " has dimension < 1");
      return;
    }
  }
}

}  // namespace

std::string_view OpKindName(OpKind op) { return kOpNames[static_cast<int>(op)]; }

std::optional<OpKind> ParseOpKind(std::string_view name) {
  for (int i = 0; i < kNumOps; ++i) {
    if (kOpNames[i] == name) return static_cast<OpKind>(i);
  }
  return std::nullopt;
}

bool IsElementwise(OpKind op) {
  return op != OpKind::kConv2d && op != OpKind::kConv2dWinograd && op != OpKind::kMatmul;
}

bool IsConv(OpKind op) { return op == OpKind::kConv2d || op == OpKind::kConv2dWinograd; }

std::vector<std::string> KernelViolations(const Kernel& k) {
  std::vector<std::string> out;
  if (k.kernel_id.empty()) out.push_back("empty kernel_id");
  CheckDims(k.output_shape, "output_shape", &out);
  if (k.output_shape.size() > kMaxRank) out.push_back("output rank exceeds 6");
  for (const auto& s : k.input_shapes) CheckDims(s, "input shape", &out);
  if (!out.empty()) return out;

  if (IsElementwise(k.op)) {
    if (k.input_shapes.empty() || k.input_shapes.size() > 2) {
      out.push_back("elementwise op needs 1 or 2 inputs");
    }
    for (const auto& s : k.input_shapes) {
      if (s != k.output_shape) out.push_back("elementwise input shape differs from output shape");
    }
    if (!k.attributes.empty()) out.push_back("elementwise op takes no attributes");
  } else if (k.op == OpKind::kMatmul) {
    if (k.input_shapes.size() != 2 || k.input_shapes[0].size() != 2 ||
        k.input_shapes[1].size() != 2) {
      out.push_back("matmul needs inputs [M,K] and [K,N]");
    } else {
      const auto& a = k.input_shapes[0];
      const auto& b = k.input_shapes[1];
      if (a[1] != b[0]) out.push_back("matmul reduction dims differ");
      if (k.output_shape != Shape{a[0], b[1]}) out.push_back("matmul output must be [M,N]");
    }
    if (!k.attributes.empty()) out.push_back("matmul takes no attributes");
  } else {
    if (k.input_shapes.size() != 2 || k.input_shapes[0].size() != 4 ||
        k.input_shapes[1].size() != 4) {
      out.push_back("conv2d needs data [N,H,W,Cin] and weight [Kh,Kw,Cin,Cout]");
      return out;
    }
    for (const auto& [name, value] : k.attributes) {
      if (name != "stride" && name != "padding") out.push_back("unknown conv2d attribute " + name);
    }
    int64_t stride = k.attributes.count("stride") ? k.attributes.at("stride") : 1;
    int64_t pad = k.attributes.count("padding") ? k.attributes.at("padding") : 0;
    if (stride < 1 || pad < 0) {
      out.push_back("conv2d needs stride >= 1 and padding >= 0");
      return out;
    }
    const auto& x = k.input_shapes[0];
    const auto& w = k.input_shapes[1];
    if (x[3] != w[2]) out.push_back("conv2d input channels differ");
    int64_t h_span = x[1] + 2 * pad - w[0];
    int64_t w_span = x[2] + 2 * pad - w[1];
    if (h_span < 0 || w_span < 0) {
      out.push_back("conv2d window larger than padded input");
      return out;
    }
    Shape expect{x[0], h_span / stride + 1, w_span / stride + 1, w[3]};
    if (k.output_shape != expect) {
      out.push_back("conv2d output shape must be " + ShapeText(expect));
    }
  }
  return out;
}

int64_t ScheduleConfig::InnerTileProduct() const {
  int64_t p = 1;
  for (const auto& axis : tile_factors) {
    if (!axis.empty()) p *= axis.back();
  }
  return p;
}

std::string ScheduleConfig::Key() const {
  std::string key = "t";
  for (const auto& axis : tile_factors) {
    key += "[";
    for (size_t i = 0; i < axis.size(); ++i) {
      if (i) key += ",";
      key += std::to_string(axis[i]);
    }
    key += "]";
  }
  key += "u" + std::to_string(unroll_factor) + "v" + std::to_string(vectorize_width);
  if (thread_binding) {
    key += "b" + std::to_string(thread_binding->threads_x) + "x" +
           std::to_string(thread_binding->threads_y);
  }
  return key;
}

double MeasurementRecord::Throughput() const {
  if (!valid() || *mean_cost <= 0) return 0.0;
  return static_cast<double>(measured_flops) / *mean_cost;
}

bool ValidationResult::Has(std::string_view code) const {
  for (const auto& v : violations) {
    if (v.code == code) return true;
  }
  return false;
}

std::vector<Violation> ScheduleShapeViolations(const ScheduleConfig& s, const Kernel& k,
                                               HardwareClass cls) {
  std::vector<Violation> out;
  bool bad_knob = s.unroll_factor < 1 || s.vectorize_width < 1;
  for (const auto& axis : s.tile_factors) {
    for (int64_t f : axis) bad_knob |= f < 1;
  }
  if (s.thread_binding) {
    bad_knob |= s.thread_binding->threads_x < 1 || s.thread_binding->threads_y < 1;
  }
  if (bad_knob) out.push_back({"bad-knob", "schedule knobs must be >= 1"});

  if (s.tile_factors.size() != k.output_shape.size()) {
    out.push_back({"tile-arity", "tile_factors has " + std::to_string(s.tile_factors.size()) +
                                     " axes, kernel output has " +
                                     std::to_string(k.output_shape.size())});
  } else if (!bad_knob) {
    for (size_t axis = 0; axis < s.tile_factors.size(); ++axis) {
      int64_t product = 1;
      bool overflow = false;
      for (int64_t f : s.tile_factors[axis]) {
        overflow |= __builtin_mul_overflow(product, f, &product);
      }
      int64_t extent = k.output_shape[axis];
      if (overflow || product > extent || extent % product != 0) {
        out.push_back({"tile-divisibility", "axis " + std::to_string(axis) + ": tile product " +
                                                std::to_string(product) + " does not divide extent " +
                                                std::to_string(extent)});
        break;
      }
    }
  }
  if (s.thread_binding && cls == HardwareClass::kCPU) {
    out.push_back({"gpu-binding-on-cpu", "thread_binding set on a CPU-class target"});
  }
  return out;
}

Dataset::Dataset(std::vector<HardwareParams> hardware, std::vector<Task> tasks,
                 std::vector<MeasurementRecord> records)
    : hardware_(std::move(hardware)), tasks_(std::move(tasks)), records_(std::move(records)) {
  BuildIndexes();
  std::unordered_map<std::string, const Kernel*> kernels;
  std::set<std::pair<std::string, std::string>> kernel_targets;
  for (const auto& hw : hardware_) {
    auto errs = HardwareViolations(hw);
    if (!errs.empty()) throw DataError("hardware " + hw.target_id + ": " + errs.front());
  }
  for (const auto& task : tasks_) {
    auto errs = KernelViolations(task.kernel);
    if (!errs.empty()) {
      throw DataError("task " + task.task_id + ": kernel " + task.kernel.kernel_id + ": " +
                      errs.front());
    }
    if (FindHardware(task.target) == nullptr) {
      throw DataError("task " + task.task_id + ": references missing target " + task.target);
    }
    if (!kernel_targets.emplace(task.kernel.kernel_id, task.target).second) {
      throw DataError("task " + task.task_id + ": duplicate (kernel_id, target) pair (" +
                      task.kernel.kernel_id + ", " + task.target + ")");
    }
    auto [it, inserted] = kernels.emplace(task.kernel.kernel_id, &task.kernel);
    if (!inserted && !(*it->second == task.kernel)) {
      throw DataError("task " + task.task_id + ": kernel " + task.kernel.kernel_id +
                      " conflicts with an earlier definition");
    }
  }
  for (const auto& rec : records_) {
    ValidationResult vr = ValidateRecord(rec, *this);
    if (!vr.ok()) {
      throw DataError("record " + rec.record_id + ": " + vr.violations.front().code + ": " +
                      vr.violations.front().detail);
    }
  }
}

void Dataset::BuildIndexes() {
  for (size_t i = 0; i < hardware_.size(); ++i) {
    if (!hardware_index_.emplace(hardware_[i].target_id, i).second) {
      throw DataError("duplicate hardware target_id " + hardware_[i].target_id);
    }
  }
  for (size_t i = 0; i < tasks_.size(); ++i) {
    if (!task_index_.emplace(tasks_[i].task_id, i).second) {
      throw DataError("duplicate task_id " + tasks_[i].task_id);
    }
    target_tasks_[tasks_[i].target].push_back(i);
    task_records_[tasks_[i].task_id];
  }
  for (size_t i = 0; i < records_.size(); ++i) {
    if (!record_index_.emplace(records_[i].record_id, i).second) {
      throw DataError("duplicate record_id " + records_[i].record_id);
    }
    auto it = task_records_.find(records_[i].task_id);
    if (it != task_records_.end()) it->second.push_back(i);
  }
}

const HardwareParams* Dataset::FindHardware(std::string_view target_id) const {
  auto it = hardware_index_.find(std::string(target_id));
  return it == hardware_index_.end() ? nullptr : &hardware_[it->second];
}

const Task* Dataset::FindTask(std::string_view task_id) const {
  auto it = task_index_.find(std::string(task_id));
  return it == task_index_.end() ? nullptr : &tasks_[it->second];
}

const MeasurementRecord* Dataset::FindRecord(std::string_view record_id) const {
  auto it = record_index_.find(std::string(record_id));
  return it == record_index_.end() ? nullptr : &records_[it->second];
}

const std::vector<size_t>& Dataset::RecordsOfTask(std::string_view task_id) const {
  static const std::vector<size_t> kEmpty;
  auto it = task_records_.find(std::string(task_id));
  return it == task_records_.end() ? kEmpty : it->second;
}

const std::vector<size_t>& Dataset::TasksOfTarget(std::string_view target_id) const {
  static const std::vector<size_t> kEmpty;
  auto it = target_tasks_.find(std::string(target_id));
  return it == target_tasks_.end() ? kEmpty : it->second;
}

std::vector<std::string> Dataset::TaskTargets() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& t : tasks_) {
    if (seen.insert(t.target).second) out.push_back(t.target);
  }
  return out;
}

const HardwareParams& Dataset::HardwareOf(const Task& task) const {
  const HardwareParams* hw = FindHardware(task.target);
  if (hw == nullptr) throw DataError("task " + task.task_id + ": unknown target " + task.target);
  return *hw;
}

Dataset Dataset::Filter(const std::vector<bool>& keep_record, bool drop_empty_tasks) const {
  if (keep_record.size() != records_.size()) throw DataError("Filter: mask size mismatch");
  std::vector<MeasurementRecord> recs;
  std::set<std::string> used_tasks;
  for (size_t i = 0; i < records_.size(); ++i) {
    if (keep_record[i]) {
      recs.push_back(records_[i]);
      used_tasks.insert(records_[i].task_id);
    }
  }
  std::vector<Task> tasks;
  for (const auto& t : tasks_) {
    if (!drop_empty_tasks || used_tasks.count(t.task_id)) tasks.push_back(t);
  }
  return Dataset(hardware_, std::move(tasks), std::move(recs));
}

Dataset Dataset::FilterRecords(const std::vector<std::string>& record_ids,
                               bool drop_empty_tasks) const {
  std::vector<bool> keep(records_.size(), false);
  for (const auto& id : record_ids) {
    auto it = record_index_.find(id);
    if (it == record_index_.end()) throw DataError("unknown record_id " + id);
    keep[it->second] = true;
  }
  return Filter(keep, drop_empty_tasks);
}

std::string Dataset::Fingerprint() const {
  std::ostringstream out;
  WriteDataset(*this, out);
  return HexDigest(Fnv1a64(out.str()));
}

ValidationResult ValidateRecord(const MeasurementRecord& rec, const Dataset& ds) {
  ValidationResult result;
  auto& v = result.violations;
  if (rec.error_flag) {
    if (rec.mean_cost) v.push_back({"cost-on-error", "error record carries a mean_cost"});
  } else if (!rec.mean_cost) {
    v.push_back({"missing-cost", "valid record has no mean_cost"});
  } else if (!std::isfinite(*rec.mean_cost) || *rec.mean_cost <= 0) {
    v.push_back({"non-positive-cost", "mean_cost must be finite and > 0"});
  }
  if (rec.measured_flops < 0) v.push_back({"negative-flops", "measured_flops must be >= 0"});

  const Task* task = ds.FindTask(rec.task_id);
  if (task == nullptr) {
    v.push_back({"bad-task-ref", "references missing task_id " + rec.task_id});
    return result;
  }
  const HardwareParams* hw = ds.FindHardware(task->target);
  if (hw == nullptr) {
    v.push_back({"bad-target-ref", "task " + task->task_id + " references missing target"});
    return result;
  }
  for (auto& viol : ScheduleShapeViolations(rec.schedule, task->kernel, hw->hardware_class)) {
    v.push_back(std::move(viol));
  }
  return result;
}

Dataset ReadDataset(std::istream& in, const LoadOptions& options) {
  std::vector<HardwareParams> hardware;
  std::vector<Task> tasks;
  std::vector<MeasurementRecord> records;
  std::string line;
  size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      Json j = Json::parse(line);
      if (!seen_header) {
        detail::ObjectReader r(j, "header", options.lenient);
        std::string format = r.String("format");
        if (format != kDatasetFormat) throw DataError("unsupported format \"" + format + "\"");
        r.Finish();
        seen_header = true;
        continue;
      }
      detail::ObjectReader r(j, "line", options.lenient);
      std::string type = r.String("type");
      if (type == "hardware") {
        Json body = j;
        body.erase("type");
        hardware.push_back(HardwareFromJson(body, options.lenient));
      } else if (type == "task") {
        detail::ObjectReader tr(j, "task", options.lenient);
        tr.String("type");
        Task t;
        t.task_id = tr.String("task_id");
        t.kernel = KernelFromJson(tr.Required("kernel"), options.lenient);
        t.target = tr.String("target");
        if (tr.Optional("network_tag")) t.network_tag = tr.String("network_tag");
        tr.Finish();
        tasks.push_back(std::move(t));
      } else if (type == "record") {
        detail::ObjectReader rr(j, "record", options.lenient);
        rr.String("type");
        MeasurementRecord rec;
        rec.record_id = rr.String("record_id");
        rec.task_id = rr.String("task_id");
        rec.schedule = ScheduleFromJson(rr.Required("schedule"), options.lenient);
        if (rr.Optional("mean_cost")) rec.mean_cost = rr.Number("mean_cost");
        rec.error_flag = rr.Bool("error_flag");
        rec.measured_flops = rr.Int("measured_flops");
        rr.Finish();
        records.push_back(std::move(rec));
      } else {
        throw DataError("unknown line type \"" + type + "\"");
      }
    } catch (const Json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!seen_header) throw DataError("missing tensortune.v1 header line");
  return Dataset(std::move(hardware), std::move(tasks), std::move(records));
}

void WriteDataset(const Dataset& ds, std::ostream& out) {
  out << Json{{"format", std::string(kDatasetFormat)}}.dump() << '\n';
  for (const auto& hw : ds.hardware()) {
    Json j;
    j["type"] = "hardware";
    Json body = HardwareToJson(hw);
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    out << j.dump() << '\n';
  }
  for (const auto& t : ds.tasks()) {
    Json j;
    j["type"] = "task";
    j["task_id"] = t.task_id;
    j["target"] = t.target;
    if (!t.network_tag.empty()) j["network_tag"] = t.network_tag;
    j["kernel"] = KernelToJson(t.kernel);
    out << j.dump() << '\n';
  }
  for (const auto& r : ds.records()) {
    // Written by hand so the cost keeps 17 significant digits.
    out << "{\"type\":\"record\",\"record_id\":" << Json(r.record_id).dump()
        << ",\"task_id\":" << Json(r.task_id).dump()
        << ",\"schedule\":" << ScheduleToJson(r.schedule).dump();
    if (r.mean_cost) out << ",\"mean_cost\":" << FormatCost(*r.mean_cost);
    out << ",\"error_flag\":" << (r.error_flag ? "true" : "false")
        << ",\"measured_flops\":" << r.measured_flops << "}\n";
  }
}

Dataset LoadDataset(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path);
  try {
    return ReadDataset(in, options);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void SaveDataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write dataset file " + path);
  WriteDataset(ds, out);
  out.flush();
  if (!out) throw DataError("failed writing dataset file " + path);
}

}  // namespace tensortune

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

#include "tensortune/oracle.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "object_reader.h"
#include "tensortune/common.h"
#include "tensortune/workload.h"

namespace tensortune {

Json OracleCoefficients::ToJson() const {
  Json j;
  j["cache_weight"] = cache_weight;
  j["vector_weight"] = vector_weight;
  j["occupancy_weight"] = occupancy_weight;
  j["base_efficiency"] = base_efficiency;
  return j;
}

OracleCoefficients OracleCoefficients::FromJson(const Json& j, const OracleCoefficients& defaults) {
  detail::ObjectReader r(j, "oracle coefficients", false);
  OracleCoefficients c = defaults;
  if (r.Optional("cache_weight")) c.cache_weight = r.Number("cache_weight");
  if (r.Optional("vector_weight")) c.vector_weight = r.Number("vector_weight");
  if (r.Optional("occupancy_weight")) c.occupancy_weight = r.Number("occupancy_weight");
  if (r.Optional("base_efficiency")) c.base_efficiency = r.Number("base_efficiency");
  r.Finish();
  for (double v : {c.cache_weight, c.vector_weight, c.occupancy_weight}) {
    if (!std::isfinite(v) || v < 0) throw DataError("oracle coefficients must be finite and >= 0");
  }
  if (!(c.base_efficiency > 0 && c.base_efficiency <= 1)) {
    throw DataError("oracle base_efficiency must be in (0, 1]");
  }
  return c;
}

Json OracleConfig::ToJson() const {
  Json j;
  j["seed"] = seed;
  j["noise_sigma"] = noise_sigma;
  j["error_fraction"] = error_fraction;
  Json hws = Json::array();
  for (const auto& hw : hardware) hws.push_back(HardwareToJson(hw));
  j["hardware"] = std::move(hws);
  j["coefficients"] = {{"cpu", cpu.ToJson()}, {"gpu", gpu.ToJson()}};
  return j;
}

OracleConfig OracleConfig::FromJson(const Json& j) {
  detail::ObjectReader r(j, "oracle config", false);
  OracleConfig c = Default();
  if (r.Optional("seed")) c.seed = static_cast<uint64_t>(r.Int("seed"));
  if (r.Optional("noise_sigma")) c.noise_sigma = r.Number("noise_sigma");
  if (r.Optional("error_fraction")) c.error_fraction = r.Number("error_fraction");
  if (const Json* hws = r.Optional("hardware")) {
    if (!hws->is_array() || hws->empty()) throw DataError("oracle config: hardware must be a non-empty list");
    c.hardware.clear();
    for (const auto& entry : *hws) {
      if (entry.is_string()) {
        const HardwareParams* hw = FindBuiltinHardware(entry.get<std::string>());
        if (hw == nullptr) {
          throw DataError("oracle config: unknown builtin target " + entry.get<std::string>());
        }
        c.hardware.push_back(*hw);
      } else {
        c.hardware.push_back(HardwareFromJson(entry));
      }
    }
  }
  if (const Json* coeffs = r.Optional("coefficients")) {
    detail::ObjectReader cr(*coeffs, "oracle coefficients", false);
    if (const Json* cpu = cr.Optional("cpu")) c.cpu = OracleCoefficients::FromJson(*cpu, c.cpu);
    if (const Json* gpu = cr.Optional("gpu")) c.gpu = OracleCoefficients::FromJson(*gpu, c.gpu);
    cr.Finish();
  }
  r.Finish();
  if (!std::isfinite(c.noise_sigma) || c.noise_sigma < 0) {
    throw DataError("oracle config: noise_sigma must be >= 0");
  }
  if (!(c.error_fraction >= 0 && c.error_fraction < 1)) {
    throw DataError("oracle config: error_fraction must be in [0, 1)");
  }
  return c;
}

OracleConfig OracleConfig::Load(const std::string& path) { return FromJson(ReadJsonFile(path)); }

OracleConfig OracleConfig::Default() {
  OracleConfig c;
  c.hardware = {*FindBuiltinHardware("platinum-8272"), *FindBuiltinHardware("t4")};
  return c;
}

namespace {

int64_t Lanes(const HardwareParams& hw) { return std::max<int64_t>(1, hw.vector_unit_bytes.value_or(4) / 4); }

/*! \brief 0.98 per doubling of `value` past `knee`. */
double Overhead(double value, double knee) {
  return value > knee ? std::pow(0.98, std::log2(value / knee)) : 1.0;
}

double KeyedNormal(const Kernel& k, const ScheduleConfig& s, const HardwareParams& hw, uint64_t seed) {
  std::string key = k.kernel_id + "|" + s.Key() + "|" + hw.target_id;
  uint64_t h = Fnv1a64(key, SplitMix64(seed ^ 0x0a4c1e));
  double u1 = 1.0 - static_cast<double>(SplitMix64(h) >> 11) * 0x1.0p-53;  // (0, 1]
  double u2 = static_cast<double>(SplitMix64(h ^ 0x5bd1e995) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

double OraclePeak(const HardwareParams& hw) {
  if (hw.is_gpu()) {
    return static_cast<double>(hw.warp_size.value_or(32)) *
           static_cast<double>(hw.max_threads_per_block.value_or(1024)) * 2e7;
  }
  return static_cast<double>(hw.num_cores.value_or(1)) * static_cast<double>(Lanes(hw)) * 2.0 * 2.5e9;
}

double OracleEfficiency(const Kernel& k, const ScheduleConfig& s, const HardwareParams& hw,
                        const OracleConfig& cfg) {
  (void)k;
  const OracleCoefficients& c = cfg.For(hw);
  const double tile = static_cast<double>(s.InnerTileProduct());
  const double footprint = tile * 4.0;
  const double best_footprint =
      hw.is_gpu() ? static_cast<double>(hw.max_shared_memory_per_block.value_or(49152)) / 2.0
                  : static_cast<double>(hw.cache_line_bytes.value_or(64)) * 128.0;
  const double dist = (std::log2(footprint) - std::log2(best_footprint)) / 4.0;
  const double f_ws = 1.0 / (1.0 + c.cache_weight * dist * dist);

  const double lanes = static_cast<double>(Lanes(hw));
  const double v = static_cast<double>(s.vectorize_width);
  const double f_vec =
      (1.0 + c.vector_weight * std::min(v, lanes) / lanes) / (1.0 + c.vector_weight) * Overhead(v, lanes);

  const double u = static_cast<double>(s.unroll_factor);
  const double f_unroll = (1.0 + 0.5 * std::min(u, 4.0) / 4.0) / 1.5 * Overhead(u, 4.0);

  double f_occ = 1.0;
  if (hw.is_gpu()) {
    double threads = 1.0;
    if (s.thread_binding) {
      threads = static_cast<double>(s.thread_binding->threads_x * s.thread_binding->threads_y);
    }
    const double max_threads = static_cast<double>(hw.max_threads_per_block.value_or(1024));
    f_occ = (1.0 + c.occupancy_weight * std::min(threads, tile) / max_threads) /
            (1.0 + c.occupancy_weight) * Overhead(threads, tile);
  }
  return c.base_efficiency * f_ws * f_vec * f_unroll * f_occ;
}

double OracleCost(const Kernel& k, const ScheduleConfig& s, const HardwareParams& hw,
                  const OracleConfig& cfg) {
  ValidationResult v = ValidityCheck(s, k, hw);
  if (!v.ok()) {
    throw DataError("oracle: invalid schedule " + s.Key() + " on " + hw.target_id + ": " +
                    v.violations.front().code);
  }
  double flops = static_cast<double>(FlopCount(k));
  double cost = flops / (OraclePeak(hw) * OracleEfficiency(k, s, hw, cfg));
  if (cfg.noise_sigma > 0) cost *= std::exp(cfg.noise_sigma * KeyedNormal(k, s, hw, cfg.seed));
  if (!(cost > 0) || !std::isfinite(cost)) throw NumericError("oracle: non-finite cost");
  return cost;
}

double OracleScorer::Score(const ScheduleConfig& s) {
  double cost = OracleCost(kernel_, s, hw_, cfg_);
  return static_cast<double>(FlopCount(kernel_)) / (OraclePeak(hw_) * cost);
}

Kernel SampleKernel(Rng* rng, const HardwareParams& hw, const std::string& kernel_id) {
  auto pick = [rng](std::initializer_list<int64_t> options) {
    return *(options.begin() + rng->UniformInt(options.size()));
  };
  std::vector<OpKind> ops;
  for (int i = 0; i < kNumOps; ++i) {
    auto op = static_cast<OpKind>(i);
    if (op == OpKind::kConv2dWinograd && !hw.is_gpu()) continue;
    ops.push_back(op);
  }
  Kernel k;
  k.kernel_id = kernel_id;
  k.op = ops[rng->UniformInt(ops.size())];
  if (IsElementwise(k.op)) {
    if (rng->UniformInt(2) == 0) {
      k.output_shape = {pick({64, 128, 256, 512, 1024}), pick({16, 32, 64, 128, 256, 512, 1024})};
    } else {
      int64_t hw_dim = pick({8, 14, 16, 28, 32, 56, 64});
      k.output_shape = {1, hw_dim, hw_dim, pick({32, 64, 128, 256, 512})};
    }
    bool binary = k.op == OpKind::kElementwiseAdd || k.op == OpKind::kElementwiseMultiply ||
                  k.op == OpKind::kElementwiseDivide;
    k.input_shapes.assign(binary ? 2 : 1, k.output_shape);
  } else if (k.op == OpKind::kMatmul) {
    int64_t m = pick({64, 128, 256, 512, 1024});
    int64_t kk = pick({64, 128, 256, 512, 1024});
    int64_t n = pick({64, 128, 256, 512, 1024});
    k.input_shapes = {{m, kk}, {kk, n}};
    k.output_shape = {m, n};
  } else {
    int64_t size = pick({8, 14, 16, 28, 32, 56, 64});
    int64_t cin = pick({16, 32, 64, 128, 256});
    int64_t cout = pick({16, 32, 64, 128, 256});
    int64_t kernel = k.op == OpKind::kConv2dWinograd ? 3 : pick({1, 3});
    int64_t pad = kernel / 2;
    k.input_shapes = {{1, size, size, cin}, {kernel, kernel, cin, cout}};
    k.output_shape = {1, size, size, cout};
    k.attributes = {{"stride", 1}, {"padding", pad}};
  }
  return k;
}

namespace {

std::vector<ScheduleConfig> SampleSchedules(const ScheduleSpace& space, int64_t n, Rng* rng) {
  constexpr uint64_t kEnumerateLimit = 4096;
  std::vector<ScheduleConfig> out;
  if (space.size() <= kEnumerateLimit) {
    auto valid = EnumerateValidPoints(space, kEnumerateLimit);
    if (valid.empty()) throw DataError("gen: kernel " + space.kernel().kernel_id + " has no valid schedule");
    rng->Shuffle(&valid);
    for (int64_t i = 0; i < n; ++i) {
      size_t idx = i < static_cast<int64_t>(valid.size()) ? static_cast<size_t>(i)
                                                           : rng->UniformInt(valid.size());
      out.push_back(space.Materialize(valid[idx]));
    }
    return out;
  }
  std::set<ScheduleSpace::Point> seen;
  for (int64_t attempt = 0; static_cast<int64_t>(out.size()) < n; ++attempt) {
    auto p = RandomValidPoint(space, rng);
    if (!p) throw DataError("gen: kernel " + space.kernel().kernel_id + " has no valid schedule");
    if (seen.insert(*p).second || attempt >= 64 * n) out.push_back(space.Materialize(*p));
  }
  return out;
}

}  // namespace

Dataset GenDataset(int64_t n_tasks, int64_t records_per_task, const OracleConfig& cfg) {
  if (n_tasks < 1 || records_per_task < 1) throw DataError("gen: sizes must be positive");
  std::vector<HardwareParams> hardware = cfg.hardware;
  if (hardware.empty()) hardware = OracleConfig::Default().hardware;
  Rng rng(SplitMix64(cfg.seed ^ 0x9e4da7a));
  std::vector<Task> tasks;
  std::vector<MeasurementRecord> records;
  for (int64_t i = 0; i < n_tasks; ++i) {
    const HardwareParams& hw = hardware[static_cast<size_t>(i) % hardware.size()];
    Task task;
    task.task_id = fmt::format("task-{:04d}", i);
    task.target = hw.target_id;
    task.kernel = SampleKernel(&rng, hw, fmt::format("k-{:04d}", i));
    ScheduleSpace space = ScheduleSpace::For(task.kernel, hw);
    const int64_t flops = FlopCount(task.kernel);
    for (auto& s : SampleSchedules(space, records_per_task, &rng)) {
      MeasurementRecord rec;
      rec.record_id = fmt::format("r-{:06d}", records.size());
      rec.task_id = task.task_id;
      rec.mean_cost = OracleCost(task.kernel, s, hw, cfg);
      rec.schedule = std::move(s);
      rec.measured_flops = flops;
      records.push_back(std::move(rec));
    }
    tasks.push_back(std::move(task));
  }
  auto n_errors = static_cast<size_t>(std::llround(cfg.error_fraction * static_cast<double>(records.size())));
  std::vector<size_t> order(records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.Shuffle(&order);
  for (size_t i = 0; i < n_errors && i < order.size(); ++i) {
    auto& rec = records[order[i]];
    rec.error_flag = true;
    rec.mean_cost.reset();
    rec.measured_flops = 0;
  }
  return Dataset(std::move(hardware), std::move(tasks), std::move(records));
}

}  // namespace tensortune

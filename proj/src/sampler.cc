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

#include "tensortune/sampler.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "object_reader.h"
#include "tensortune/common.h"
#include "tensortune/workload.h"

namespace tensortune {

Json SamplerConfig::ToJson() const {
  Json j;
  j["target_fraction"] = target_fraction;
  j["low_perf_quantile"] = low_perf_quantile;
  j["min_records_per_task"] = min_records_per_task;
  j["seed"] = seed;
  return j;
}

namespace {

void CheckConfig(const SamplerConfig& cfg) {
  if (!(cfg.target_fraction > 0 && cfg.target_fraction <= 1)) {
    throw DataError("target_fraction must be in (0, 1]");
  }
  if (!(cfg.low_perf_quantile >= 0 && cfg.low_perf_quantile < 1)) {
    throw DataError("low_perf_quantile must be in [0, 1)");
  }
  if (cfg.min_records_per_task < 1) throw DataError("min_records_per_task must be >= 1");
}

}  // namespace

SamplerConfig SamplerConfig::FromJson(const Json& j) {
  detail::ObjectReader r(j, "sampler config", false);
  SamplerConfig c;
  if (r.Optional("target_fraction")) c.target_fraction = r.Number("target_fraction");
  if (r.Optional("low_perf_quantile")) c.low_perf_quantile = r.Number("low_perf_quantile");
  if (r.Optional("min_records_per_task")) c.min_records_per_task = r.Int("min_records_per_task");
  if (r.Optional("seed")) c.seed = static_cast<uint64_t>(r.Int("seed"));
  r.Finish();
  CheckConfig(c);
  return c;
}

Dataset FilterInvalid(const Dataset& ds, const SamplerConfig& cfg) {
  CheckConfig(cfg);
  std::vector<bool> keep(ds.records().size(), false);
  for (const auto& task : ds.tasks()) {
    std::vector<size_t> valid;
    for (size_t idx : ds.RecordsOfTask(task.task_id)) {
      if (ds.records()[idx].valid()) valid.push_back(idx);
    }
    if (valid.empty()) continue;
    std::vector<double> tp;
    tp.reserve(valid.size());
    for (size_t idx : valid) tp.push_back(ds.records()[idx].Throughput());
    std::vector<double> sorted = tp;
    std::sort(sorted.begin(), sorted.end());
    size_t q_index = static_cast<size_t>(std::floor(cfg.low_perf_quantile * sorted.size()));
    q_index = std::min(q_index, sorted.size() - 1);
    double threshold = sorted[q_index];
    std::vector<size_t> kept;
    for (size_t i = 0; i < valid.size(); ++i) {
      if (tp[i] >= threshold) kept.push_back(valid[i]);
    }
    if (static_cast<int64_t>(kept.size()) < cfg.min_records_per_task) continue;
    for (size_t idx : kept) keep[idx] = true;
  }
  return ds.Filter(keep, /*drop_empty_tasks=*/true);
}

std::map<std::string, double> TaskWeights(const Dataset& ds) {
  if (ds.tasks().empty()) throw DataError("task_weights: empty dataset");
  std::map<OpKind, int64_t> occurrence;
  for (const auto& t : ds.tasks()) occurrence[t.kernel.op] += 1;
  std::vector<double> raw;
  raw.reserve(ds.tasks().size());
  for (const auto& t : ds.tasks()) {
    raw.push_back(static_cast<double>(FlopCount(t.kernel)) *
                  static_cast<double>(occurrence[t.kernel.op]));
  }
  double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  std::map<std::string, double> out;
  for (size_t i = 0; i < raw.size(); ++i) out[ds.tasks()[i].task_id] = raw[i] / total;
  return out;
}

PruneResult PruneDataset(const Dataset& ds, const SamplerConfig& cfg) {
  CheckConfig(cfg);
  PruneReport report;
  report.config = cfg;
  report.records_before = static_cast<int64_t>(ds.records().size());
  report.tasks_before = static_cast<int64_t>(ds.tasks().size());
  for (const auto& task : ds.tasks()) {
    report.per_op_records[task.kernel.op].first +=
        static_cast<int64_t>(ds.RecordsOfTask(task.task_id).size());
  }

  Dataset filtered = FilterInvalid(ds, cfg);
  report.records_after_filter = static_cast<int64_t>(filtered.records().size());
  double goal = cfg.target_fraction * static_cast<double>(report.records_before);

  Dataset result = filtered;
  if (static_cast<double>(report.records_after_filter) < goal) {
    report.achievable = false;
  } else if (!filtered.tasks().empty()) {
    // Efraimidis-Spirakis keys log(u)/w give weighted sampling without replacement.
    auto weights = TaskWeights(filtered);
    Rng rng(SplitMix64(cfg.seed ^ 0x5a3d1e));
    struct Keyed {
      double key;
      size_t task;
    };
    std::vector<Keyed> keyed;
    for (size_t i = 0; i < filtered.tasks().size(); ++i) {
      double u = rng.Uniform();
      if (u <= 0) u = 0x1.0p-53;
      keyed.push_back({std::log(u) / weights[filtered.tasks()[i].task_id], i});
    }
    std::sort(keyed.begin(), keyed.end(), [&](const Keyed& a, const Keyed& b) {
      if (a.key != b.key) return a.key > b.key;
      return filtered.tasks()[a.task].task_id < filtered.tasks()[b.task].task_id;
    });
    std::vector<bool> keep(filtered.records().size(), false);
    double kept = 0;
    for (const auto& k : keyed) {
      if (kept >= goal) break;
      for (size_t idx : filtered.RecordsOfTask(filtered.tasks()[k.task].task_id)) {
        keep[idx] = true;
        kept += 1;
      }
    }
    result = filtered.Filter(keep, /*drop_empty_tasks=*/true);
  }

  report.records_after = static_cast<int64_t>(result.records().size());
  report.tasks_after = static_cast<int64_t>(result.tasks().size());
  report.realized_fraction = report.records_before == 0
                                 ? 0.0
                                 : static_cast<double>(report.records_after) /
                                       static_cast<double>(report.records_before);
  for (const auto& task : result.tasks()) {
    report.per_op_records[task.kernel.op].second +=
        static_cast<int64_t>(result.RecordsOfTask(task.task_id).size());
  }
  return {std::move(result), std::move(report)};
}

Json PruneReport::ToJson() const {
  Json j;
  j["config"] = config.ToJson();
  j["records_before"] = records_before;
  j["records_after_filter"] = records_after_filter;
  j["records_after"] = records_after;
  j["tasks_before"] = tasks_before;
  j["tasks_after"] = tasks_after;
  j["realized_fraction"] = realized_fraction;
  j["achievable"] = achievable;
  Json ops = Json::object();
  for (const auto& [op, counts] : per_op_records) {
    ops[std::string(OpKindName(op))] = Json::array({counts.first, counts.second});
  }
  j["per_op_records"] = ops;
  return j;
}

std::string PruneReport::ToText() const {
  std::string out;
  out += fmt::format("target_fraction      {:.4f}\n", config.target_fraction);
  out += fmt::format("low_perf_quantile    {:.4f}\n", config.low_perf_quantile);
  out += fmt::format("min_records_per_task {}\n", config.min_records_per_task);
  out += fmt::format("seed                 {}\n", config.seed);
  out += fmt::format("records_before       {}\n", records_before);
  out += fmt::format("records_after_filter {}\n", records_after_filter);
  out += fmt::format("records_after        {}\n", records_after);
  out += fmt::format("tasks_before         {}\n", tasks_before);
  out += fmt::format("tasks_after          {}\n", tasks_after);
  out += fmt::format("realized_fraction    {:.6f}\n", realized_fraction);
  if (!achievable) out += "note                 target fraction unachievable after filtering\n";
  out += fmt::format("{:<22}{:>10}{:>10}{:>10}\n", "op", "before", "after", "kept");
  for (const auto& [op, counts] : per_op_records) {
    double kept = counts.first == 0 ? 0.0 : static_cast<double>(counts.second) / counts.first;
    out += fmt::format("{:<22}{:>10}{:>10}{:>10.4f}\n", OpKindName(op), counts.first, counts.second,
                       kept);
  }
  return out;
}

}  // namespace tensortune

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

#include "tensortune/splitter.h"

#include <algorithm>
#include <cmath>

#include "object_reader.h"
#include "tensortune/common.h"

namespace tensortune {

std::string_view SplitStrategyName(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::kWithinTask:
      return "within_task";
    case SplitStrategy::kByTask:
      return "by_task";
    case SplitStrategy::kByTarget:
      return "by_target";
  }
  return "?";
}

std::optional<SplitStrategy> ParseSplitStrategy(std::string_view name) {
  for (auto s : {SplitStrategy::kWithinTask, SplitStrategy::kByTask, SplitStrategy::kByTarget}) {
    if (SplitStrategyName(s) == name) return s;
  }
  return std::nullopt;
}

Json SplitAssignment::ToJson() const {
  Json j;
  j["strategy"] = std::string(SplitStrategyName(strategy));
  j["test_ratio"] = test_ratio;
  j["seed"] = seed;
  j["train_ids"] = Json(std::vector<std::string>(train_ids.begin(), train_ids.end()));
  j["test_ids"] = Json(std::vector<std::string>(test_ids.begin(), test_ids.end()));
  return j;
}

SplitAssignment SplitAssignment::FromJson(const Json& j) {
  detail::ObjectReader r(j, "split", false);
  SplitAssignment s;
  std::string name = r.String("strategy");
  auto strategy = ParseSplitStrategy(name);
  if (!strategy) throw DataError("split: unknown strategy \"" + name + "\"");
  s.strategy = *strategy;
  s.test_ratio = r.Number("test_ratio");
  s.seed = static_cast<uint64_t>(r.Int("seed"));
  for (const char* side : {"train_ids", "test_ids"}) {
    const Json& ids = r.Required(side);
    if (!ids.is_array()) throw DataError(std::string("split: ") + side + " must be a list");
    auto& out = std::string_view(side) == "train_ids" ? s.train_ids : s.test_ids;
    for (const auto& id : ids) {
      if (!id.is_string()) throw DataError(std::string("split: ") + side + " must hold strings");
      out.insert(id.get<std::string>());
    }
  }
  r.Finish();
  for (const auto& id : s.test_ids) {
    if (s.train_ids.count(id)) throw DataError("split: record " + id + " on both sides");
  }
  return s;
}

SplitAssignment Split(const Dataset& ds, SplitStrategy strategy, double test_ratio, uint64_t seed) {
  if (!(test_ratio > 0 && test_ratio < 1)) throw DataError("split: test_ratio must be in (0, 1)");
  if (ds.records().empty()) throw DataError("split: empty dataset");
  SplitAssignment out;
  out.strategy = strategy;
  out.test_ratio = test_ratio;
  out.seed = seed;
  Rng rng(SplitMix64(seed ^ 0x7e11a9));

  std::set<std::string> test_tasks;
  switch (strategy) {
    case SplitStrategy::kWithinTask: {
      for (const auto& task : ds.tasks()) {
        std::vector<size_t> recs = ds.RecordsOfTask(task.task_id);
        rng.Shuffle(&recs);
        size_t n = recs.size();
        size_t n_test = static_cast<size_t>(std::llround(test_ratio * static_cast<double>(n)));
        if (n >= 2) n_test = std::clamp<size_t>(n_test, 1, n - 1);
        for (size_t i = 0; i < n; ++i) {
          (i < n_test ? out.test_ids : out.train_ids).insert(ds.records()[recs[i]].record_id);
        }
      }
      return out;
    }
    case SplitStrategy::kByTask: {
      if (ds.tasks().size() < 2) throw DataError("split by_task needs at least 2 tasks");
      std::vector<std::string> ids;
      for (const auto& t : ds.tasks()) ids.push_back(t.task_id);
      rng.Shuffle(&ids);
      size_t n_test = static_cast<size_t>(std::ceil(test_ratio * static_cast<double>(ids.size())));
      n_test = std::min(n_test, ids.size() - 1);
      test_tasks.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
      break;
    }
    case SplitStrategy::kByTarget: {
      std::vector<std::string> targets = ds.TaskTargets();
      if (targets.size() < 2) throw DataError("split by_target needs at least 2 distinct targets");
      rng.Shuffle(&targets);
      size_t n_test =
          static_cast<size_t>(std::ceil(test_ratio * static_cast<double>(targets.size())));
      n_test = std::min(n_test, targets.size() - 1);
      for (size_t i = 0; i < n_test; ++i) {
        for (size_t t : ds.TasksOfTarget(targets[i])) test_tasks.insert(ds.tasks()[t].task_id);
      }
      break;
    }
  }
  for (const auto& rec : ds.records()) {
    (test_tasks.count(rec.task_id) ? out.test_ids : out.train_ids).insert(rec.record_id);
  }
  return out;
}

}  // namespace tensortune

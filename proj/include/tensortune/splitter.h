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
 * \file tensortune/splitter.h
 * \brief Deterministic train/test partitions under the within_task, by_task
 *  and by_target strategies.
 */
#ifndef TENSORTUNE_SPLITTER_H_
#define TENSORTUNE_SPLITTER_H_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "tensortune/dataset.h"
#include "tensortune/serialization.h"

namespace tensortune {

enum class SplitStrategy { kWithinTask, kByTask, kByTarget };

std::string_view SplitStrategyName(SplitStrategy s);
std::optional<SplitStrategy> ParseSplitStrategy(std::string_view name);

struct SplitAssignment {
  SplitStrategy strategy = SplitStrategy::kWithinTask;
  double test_ratio = 0.2;
  uint64_t seed = 0;
  std::set<std::string> train_ids;
  std::set<std::string> test_ids;

  bool IsTest(const std::string& record_id) const { return test_ids.count(record_id) > 0; }
  Json ToJson() const;
  static SplitAssignment FromJson(const Json& j);
  bool operator==(const SplitAssignment&) const = default;
};

/*!
 * \brief Partitions every record of `ds`.
 *
 * within_task: per task, round(ratio * n) shuffled records go to test, at
 *   least 1 and at most n - 1 when the task has >= 2 records.
 * by_task: ceil(ratio * #tasks) shuffled whole tasks go to test.
 * by_target: ceil(ratio * #targets) shuffled whole targets go to test.
 */
SplitAssignment Split(const Dataset& ds, SplitStrategy strategy, double test_ratio, uint64_t seed);

}  // namespace tensortune

#endif  // TENSORTUNE_SPLITTER_H_

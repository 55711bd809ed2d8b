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
 * \file transfer.h
 * \brief Moving a trained cost model to another hardware target: feature
 *  remapping plus fine-tuning on a small budget of target records.
 */
#ifndef TENSORTUNE_TRANSFER_H_
#define TENSORTUNE_TRANSFER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tensortune/dataset.h"
#include "tensortune/hardware.h"
#include "tensortune/models.h"
#include "tensortune/serialization.h"

namespace tensortune {

enum class FineTuneScope { kHeadsOnly, kFull };

struct TransferConfig {
  std::string target;
  int64_t record_budget = 1;
  FineTuneScope scope = FineTuneScope::kHeadsOnly;
  int epochs = 50;
  double learning_rate = 1e-4;
  uint64_t seed = 0;
  int batch_size = 16;
  int jobs = 1;

  Json ToJson() const;
};

/*! \brief Tasks of the target in importance order and the records drawn from them. */
struct RetrainingSelection {
  std::vector<std::string> task_ids;    // every task on the target, heaviest first
  std::vector<std::string> record_ids;  // drawn in task order, fastest records first
};

/*!
 * \brief Draws up to `budget` valid records of `target`, task by task in
 *  occurrence x flops order; within a task the highest-throughput records go
 *  first. Raising the budget only appends to the selection.
 * \throws DataError when the target has no tasks or budget < 1.
 */
RetrainingSelection SelectTasksForRetraining(const Dataset& ds, const std::string& target,
                                             int64_t budget);

/*!
 * \brief Returns `model` with a mapping that rewrites the hardware slice of
 *  every input from `src` to `dst` features. Parameters are shared, not copied.
 * \throws DataError for GBDT models, whose splits bind to raw slot values.
 */
CostModel AdaptHardware(const CostModel& model, const HardwareParams& src, const HardwareParams& dst);

struct TransferReport {
  int64_t records_used = 0;
  int64_t holdout_records = 0;
  int epochs = 0;
  std::string scope;
  std::string record_source;
  std::optional<double> before_pca;
  std::optional<double> after_pca;
  double before_rmse = 0;
  double after_rmse = 0;
  std::vector<std::string> task_ids;

  Json ToJson() const;
  std::string ToText() const;
};

struct FineTuneResult {
  CostModel model;
  TransferReport report;
};

/*!
 * \brief Fine-tunes a tuner on the selected target records. One fifth of the
 *  drawn records (seeded) is held out for the before/after comparison.
 *  Heads-only scope updates the attention and output-head groups; the
 *  recurrent encoder stays bit-identical.
 * \throws DataError for non-tuner models or an empty selection;
 *  NumericError when training diverges.
 */
FineTuneResult FineTune(const CostModel& model, const Dataset& ds, const TransferConfig& cfg);

}  // namespace tensortune

#endif  // TENSORTUNE_TRANSFER_H_

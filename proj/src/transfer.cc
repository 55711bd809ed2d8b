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

#include "tensortune/transfer.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "tensortune/search.h"
#include "training.h"

namespace tensortune {

Json TransferConfig::ToJson() const {
  Json j;
  j["target"] = target;
  j["record_budget"] = record_budget;
  j["fine_tune_scope"] = scope == FineTuneScope::kHeadsOnly ? "heads-only" : "full";
  j["fine_tune_epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["seed"] = seed;
  j["batch_size"] = batch_size;
  return j;
}

RetrainingSelection SelectTasksForRetraining(const Dataset& ds, const std::string& target,
                                             int64_t budget) {
  if (budget < 1) throw DataError("transfer: record budget must be >= 1");
  if (!ds.FindHardware(target)) throw DataError("transfer: unknown target \"" + target + "\"");
  std::vector<size_t> order = TasksByImportance(ds, target);
  if (order.empty()) throw DataError("transfer: no tasks on target \"" + target + "\"");
  RetrainingSelection sel;
  for (size_t t : order) {
    const Task& task = ds.tasks()[t];
    sel.task_ids.push_back(task.task_id);
    std::vector<size_t> recs;
    for (size_t r : ds.RecordsOfTask(task.task_id)) {
      if (ds.records()[r].valid()) recs.push_back(r);
    }
    // Fastest first; equal costs keep file order.
    std::stable_sort(recs.begin(), recs.end(), [&](size_t a, size_t b) {
      return *ds.records()[a].mean_cost < *ds.records()[b].mean_cost;
    });
    for (size_t r : recs) {
      if (static_cast<int64_t>(sel.record_ids.size()) >= budget) break;
      sel.record_ids.push_back(ds.records()[r].record_id);
    }
  }
  return sel;
}

CostModel AdaptHardware(const CostModel& model, const HardwareParams& src, const HardwareParams& dst) {
  if (model.empty()) throw DataError("adapt: empty model");
  if (model.kind() == ModelKind::kGbdt) {
    throw DataError("adapt: gbdt models cannot be remapped; their splits bind to raw hardware slots");
  }
  std::vector<FeatureMapping> maps = model.input_mappings();
  maps.push_back(MapFeatures(src, dst));
  return model.WithMappings(std::move(maps));
}

Json TransferReport::ToJson() const {
  Json j;
  j["records_used"] = records_used;
  j["holdout_records"] = holdout_records;
  j["epochs"] = epochs;
  j["scope"] = scope;
  j["record_source"] = record_source;
  j["before_pca"] = before_pca ? Json(*before_pca) : Json(nullptr);
  j["after_pca"] = after_pca ? Json(*after_pca) : Json(nullptr);
  j["before_rmse"] = before_rmse;
  j["after_rmse"] = after_rmse;
  j["task_ids"] = task_ids;
  return j;
}

std::string TransferReport::ToText() const {
  auto pca = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.4f}", *v) : std::string("NA");
  };
  std::string out;
  out += fmt::format("{:<16} {}\n", "scope", scope);
  out += fmt::format("{:<16} {}\n", "record_source", record_source);
  out += fmt::format("{:<16} {}\n", "records_used", records_used);
  out += fmt::format("{:<16} {}\n", "holdout_records", holdout_records);
  out += fmt::format("{:<16} {}\n", "epochs", epochs);
  out += fmt::format("{:<16} {:>10} {:>10}\n", "", "before", "after");
  out += fmt::format("{:<16} {:>10} {:>10}\n", "holdout_pca", pca(before_pca), pca(after_pca));
  out += fmt::format("{:<16} {:>10.6f} {:>10.6f}\n", "holdout_rmse", before_rmse, after_rmse);
  return out;
}

namespace {

void MapSequences(const std::vector<FeatureMapping>& maps, TrainingData* data) {
  for (auto& s : data->sequences) {
    for (const auto& m : maps) ApplyMapping(m, &s);
  }
}

void ScoreHoldout(const CostModel& model, const TrainingData& holdout, std::optional<double>* pca,
                  double* rmse) {
  if (holdout.size() == 0) return;
  SideMetrics m = ScoreSide(holdout.labels, model.PredictData(holdout), holdout.groups);
  *rmse = m.rmse;
  if (m.tasks_scored > 0) *pca = m.pca;
}

}  // namespace

FineTuneResult FineTune(const CostModel& model, const Dataset& ds, const TransferConfig& cfg) {
  if (model.kind() != ModelKind::kTuner || !model.tuner()) {
    throw DataError("fine-tune: only tuner models can be fine-tuned");
  }
  if (cfg.epochs < 0 || !(cfg.learning_rate > 0) || cfg.batch_size < 1) {
    throw DataError("fine-tune: epochs must be >= 0, learning rate and batch size > 0");
  }
  RetrainingSelection sel = SelectTasksForRetraining(ds, cfg.target, cfg.record_budget);
  if (sel.record_ids.empty()) throw DataError("fine-tune: selection drew no valid records");

  std::vector<std::string> ids = sel.record_ids;
  Rng rng(SplitMix64(cfg.seed ^ 0xf1e7a2));
  rng.Shuffle(&ids);
  const size_t n_hold = ids.size() >= 2 ? static_cast<size_t>(std::llround(0.2 * ids.size())) : 0;
  std::set<std::string> hold_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::set<std::string> train_ids(ids.begin() + static_cast<std::ptrdiff_t>(n_hold), ids.end());
  TrainingData train = BuildTrainingData(ds, train_ids);
  TrainingData holdout = BuildTrainingData(ds, hold_ids);

  FineTuneResult result;
  TransferReport& rep = result.report;
  rep.records_used = static_cast<int64_t>(sel.record_ids.size());
  rep.holdout_records = static_cast<int64_t>(holdout.size());
  rep.epochs = cfg.epochs;
  rep.scope = cfg.scope == FineTuneScope::kHeadsOnly ? "heads-only" : "full";
  rep.record_source = "dataset:" + ds.Fingerprint();
  rep.task_ids = sel.task_ids;
  ScoreHoldout(model, holdout, &rep.before_pca, &rep.before_rmse);

  auto net = std::make_shared<detail::TunerNet>(*model.tuner());
  if (cfg.epochs > 0 && train.size() > 0) {
    std::vector<detail::ParamGroup> trainable;
    if (cfg.scope == FineTuneScope::kHeadsOnly) {
      trainable = {net->group("attention"), net->group("head")};
    } else {
      trainable = net->groups();
    }
    TrainingData mapped_train = train, mapped_hold = holdout;
    MapSequences(model.input_mappings(), &mapped_train);
    MapSequences(model.input_mappings(), &mapped_hold);
    TrainConfig tc;
    tc.batch_size = cfg.batch_size;
    tc.epochs = cfg.epochs;
    tc.learning_rate = cfg.learning_rate;
    tc.seed = cfg.seed;
    tc.jobs = cfg.jobs;
    TrainReport tr;
    detail::FitTuner(net.get(), mapped_train, mapped_hold, tc, trainable, &tr);
  }
  Json prov = model.provenance();
  prov["fine_tune"] = cfg.ToJson();
  prov["fine_tune"]["record_source"] = rep.record_source;
  result.model = model.WithTuner(std::move(net), std::move(prov));
  ScoreHoldout(result.model, holdout, &rep.after_pca, &rep.after_rmse);
  return result;
}

}  // namespace tensortune

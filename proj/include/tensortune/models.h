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
 * \file tensortune/models.h
 * \brief Learned cost models: gradient-boosted trees, an MLP, and the
 *  bidirectional-LSTM + attention tuner, behind one train/predict/evaluate
 *  contract.
 */
#ifndef TENSORTUNE_MODELS_H_
#define TENSORTUNE_MODELS_H_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tensortune/dataset.h"
#include "tensortune/featurize.h"
#include "tensortune/hardware.h"
#include "tensortune/serialization.h"
#include "tensortune/splitter.h"

namespace tensortune {

enum class ModelKind { kGbdt, kMlp, kTuner };
enum class LossKind { kRmse, kRanking };

std::string_view ModelKindName(ModelKind kind);
std::optional<ModelKind> ParseModelKind(std::string_view name);

struct GbdtConfig {
  int num_trees = 200;
  int max_depth = 6;
  double learning_rate = 0.1;
  int min_samples_leaf = 4;

  Json ToJson() const;
  static GbdtConfig FromJson(const Json& j);
};

/*!
 * \brief Neural model training settings. Defaults follow the tuner's
 *  published hyperparameters (batch 16, 200 epochs, lr 1e-3, 3 BiLSTM layers,
 *  2 attention heads, 2 attention unrolling steps, Adam, rmse loss).
 */
struct TrainConfig {
  int batch_size = 16;
  int epochs = 200;
  double learning_rate = 1e-3;
  int recurrent_layers = 3;
  int attention_heads = 2;
  int attention_unroll_steps = 2;
  LossKind loss = LossKind::kRmse;
  uint64_t seed = 0;
  // Layer widths; recorded in provenance.
  int recurrent_hidden = 32;
  int attention_dim = 16;
  int head_hidden = 64;
  int mlp_hidden = 64;
  int jobs = 1;

  Json ToJson() const;
  static TrainConfig FromJson(const Json& j);
};

/*! \brief Labelled model inputs grouped by task (for per-task ranking metrics). */
struct TrainingData {
  std::vector<FlatFeatures> flat;
  std::vector<StepSequence> sequences;
  std::vector<double> labels;
  std::vector<std::string> groups;

  size_t size() const { return labels.size(); }
};

/*!
 * \brief Encodes the valid records among `record_ids` (flat and sequence
 *  forms) with their task-relative labels. Error records are skipped.
 */
TrainingData BuildTrainingData(const Dataset& ds, const std::set<std::string>& record_ids);

struct EpochMetrics {
  int epoch = 0;
  double train_rmse = 0;
  double val_rmse = 0;
  std::optional<double> val_pca;
};

struct TrainReport {
  ModelKind kind = ModelKind::kGbdt;
  int64_t train_count = 0;
  int64_t val_count = 0;
  double initial_train_rmse = 0;
  double initial_val_rmse = 0;
  double final_train_rmse = 0;
  double final_val_rmse = 0;
  std::vector<EpochMetrics> epochs;

  Json ToJson() const;
  std::string ToText() const;
  bool operator==(const TrainReport& o) const { return ToJson() == o.ToJson(); }
};

namespace detail {
struct GbdtEnsemble;
class MlpNet;
class TunerNet;
}  // namespace detail

using ModelInputs = std::variant<std::vector<FlatFeatures>, std::vector<StepSequence>>;

/*!
 * \brief Trained, immutable cost model. Copies share parameters.
 *
 * A model may carry hardware feature mappings (see AdaptHardware); inputs are
 * rewritten by them, in order, before the network sees them.
 */
class CostModel {
 public:
  CostModel() = default;

  ModelKind kind() const { return kind_; }
  uint32_t layout_version() const { return layout_version_; }
  const Json& provenance() const { return provenance_; }
  const std::vector<FeatureMapping>& input_mappings() const { return mappings_; }
  bool empty() const { return !gbdt_ && !mlp_ && !tuner_; }

  /*! \brief Scores a batch; the input alternative must match the model kind. */
  std::vector<double> Predict(const ModelInputs& inputs) const;
  /*! \brief Encodes (kernel, schedule, hardware) in the model's input form and scores it. */
  std::vector<double> PredictSchedules(const Kernel& k, std::span<const ScheduleConfig> schedules,
                                       const HardwareParams& hw) const;
  /*! \brief Scores the model-appropriate encoding of prepared training data. */
  std::vector<double> PredictData(const TrainingData& data) const;

  void Write(std::ostream& out) const;
  static CostModel Read(std::istream& in);
  void Save(const std::string& path) const;
  static CostModel Load(const std::string& path);

  // Internal access for training and transfer.
  const detail::GbdtEnsemble* gbdt() const { return gbdt_.get(); }
  const detail::MlpNet* mlp() const { return mlp_.get(); }
  const detail::TunerNet* tuner() const { return tuner_.get(); }
  static CostModel FromGbdt(std::shared_ptr<const detail::GbdtEnsemble> g, Json provenance);
  static CostModel FromMlp(std::shared_ptr<const detail::MlpNet> m, Json provenance);
  static CostModel FromTuner(std::shared_ptr<const detail::TunerNet> t, Json provenance);
  CostModel WithMappings(std::vector<FeatureMapping> mappings) const;
  CostModel WithTuner(std::shared_ptr<const detail::TunerNet> t, Json provenance) const;
  CostModel WithProvenance(Json provenance) const;

 private:
  ModelKind kind_ = ModelKind::kGbdt;
  uint32_t layout_version_ = kFlatLayoutVersion;
  Json provenance_ = Json::object();
  std::vector<FeatureMapping> mappings_;
  std::shared_ptr<const detail::GbdtEnsemble> gbdt_;
  std::shared_ptr<const detail::MlpNet> mlp_;
  std::shared_ptr<const detail::TunerNet> tuner_;
};

struct TrainResult {
  CostModel model;
  TrainReport report;
};

/*! \brief Squared-error boosting with exact greedy splits on flat features. */
TrainResult TrainGbdt(const TrainingData& train, const TrainingData& val, const GbdtConfig& cfg);
TrainResult TrainGbdt(const Dataset& ds, const SplitAssignment& split, const GbdtConfig& cfg);

/*! \brief 47 -> 64 -> 64 -> 1 tanh MLP trained with Adam. */
TrainResult TrainMlp(const TrainingData& train, const TrainingData& val, const TrainConfig& cfg);
TrainResult TrainMlp(const Dataset& ds, const SplitAssignment& split, const TrainConfig& cfg);

/*! \brief BiLSTM + iterative multi-head attention pooling tuner trained with Adam. */
TrainResult TrainTuner(const TrainingData& train, const TrainingData& val, const TrainConfig& cfg);
TrainResult TrainTuner(const Dataset& ds, const SplitAssignment& split, const TrainConfig& cfg);

/*! \brief Dispatches on kind; gbdt reads `gbdt_cfg`, the others `train_cfg`. */
TrainResult TrainModel(ModelKind kind, const Dataset& ds, const SplitAssignment& split,
                       const GbdtConfig& gbdt_cfg, const TrainConfig& train_cfg);

struct SideMetrics {
  int64_t records = 0;
  double rmse = 0;
  double pca = 0;
  double top1 = 0;
  double top5 = 0;
  int64_t tasks_scored = 0;    // tasks with >= 2 records on this side
  int64_t tasks_excluded = 0;  // tasks with exactly 1 record on this side
};

struct MetricsReport {
  SideMetrics train;
  SideMetrics test;

  Json ToJson() const;
  std::string ToText() const;
};

/*!
 * \brief Per-task ranking metrics averaged over tasks with >= 2 labelled
 *  records; rmse pooled over records. top-k uses min(k, n) for small tasks.
 */
SideMetrics ScoreSide(std::span<const double> labels, std::span<const double> predictions,
                      std::span<const std::string> groups);
MetricsReport Evaluate(const CostModel& model, const Dataset& ds, const SplitAssignment& split);

}  // namespace tensortune

#endif  // TENSORTUNE_MODELS_H_

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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <sstream>

#include "gbdt.h"
#include "grad_check.h"
#include "tensortune/metrics.h"
#include "tensortune/models.h"
#include "tensortune/oracle.h"
#include "tensortune/splitter.h"
#include "test_util.h"
#include "training.h"

namespace tensortune {
namespace {

using testing_util::CheckGradients;
using testing_util::RandomFlat;
using testing_util::RandomSequence;
using testing_util::SampleIndices;

constexpr int kSlotA = 17;
constexpr int kSlotB = 20;
constexpr int kSlotC = 25;

/*! \brief Flat-only training data with one group per eight rows. */
TrainingData FlatData(const std::vector<FlatFeatures>& x, const std::vector<double>& y) {
  TrainingData d;
  d.flat = x;
  d.labels = y;
  for (size_t i = 0; i < y.size(); ++i) d.groups.push_back("g" + std::to_string(i / 8));
  return d;
}

TEST(GradientCheck, MlpMatchesCentralDifferences) {
  detail::MlpNet net(64, 11);
  Rng rng(5);
  std::vector<size_t> all(net.params.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (int s = 0; s < 10; ++s) {
    auto res = CheckGradients(net, RandomFlat(&rng), all);
    EXPECT_LE(res.max_rel_error, 1e-4) << "sample " << s << " index " << res.worst_index;
  }
}

TEST(GradientCheck, TunerMatchesCentralDifferencesInEveryGroup) {
  detail::TunerNet net(detail::TunerArch{}, 3);
  Rng rng(9);
  for (int s = 0; s < 4; ++s) {
    StepSequence seq = RandomSequence(&rng, 5 + s);
    for (const auto& g : net.groups()) {
      auto res = CheckGradients(net, seq, SampleIndices({g}, 150, 100 + s));
      EXPECT_LE(res.max_rel_error, 1e-3) << g.name << " sample " << s << " index " << res.worst_index;
    }
  }
}

TEST(GradientCheck, LossGradients) {
  Rng rng(2);
  std::vector<double> pred(9), y(9);
  for (size_t i = 0; i < pred.size(); ++i) {
    pred[i] = rng.Uniform();
    y[i] = rng.Uniform();
  }
  for (LossKind loss : {LossKind::kRmse, LossKind::kRanking}) {
    std::vector<double> grad, scratch;
    detail::LossGradient(loss, pred, y, &grad);
    for (size_t i = 0; i < pred.size(); ++i) {
      std::vector<double> p = pred;
      const double h = 1e-6;
      p[i] += h;
      const double up = detail::LossGradient(loss, p, y, &scratch);
      p[i] -= 2 * h;
      const double down = detail::LossGradient(loss, p, y, &scratch);
      EXPECT_NEAR(grad[i], (up - down) / (2 * h), 1e-6);
    }
  }
}

TEST(Gbdt, ConstantLabels) {
  Rng rng(1);
  std::vector<FlatFeatures> x;
  for (int i = 0; i < 50; ++i) x.push_back(RandomFlat(&rng));
  TrainingData d = FlatData(x, std::vector<double>(50, 1.0));
  TrainResult r = TrainGbdt(d, d, GbdtConfig{});
  for (double p : r.model.PredictData(d)) EXPECT_DOUBLE_EQ(p, 1.0);
  EXPECT_DOUBLE_EQ(r.report.final_train_rmse, 0.0);
}

TEST(Gbdt, StepFunctionFitsWithOneSplit) {
  Rng rng(4);
  auto step = [](double v) { return v <= 0.3 ? 0.2 : 0.9; };
  std::vector<FlatFeatures> x, vx;
  std::vector<double> y, vy;
  for (int i = 0; i < 200; ++i) {
    FlatFeatures f = RandomFlat(&rng);
    (i % 4 == 0 ? vx : x).push_back(f);
    (i % 4 == 0 ? vy : y).push_back(step(f.values[kSlotA]));
  }
  GbdtConfig cfg;
  cfg.max_depth = 1;
  TrainResult r = TrainGbdt(FlatData(x, y), FlatData(vx, vy), cfg);
  // The closed-form piecewise-constant fit recovers the step exactly, except
  // for validation points that fall between the two training points that
  // straddle the threshold.
  size_t between = 0;
  double lo = -1e300, hi = 1e300;
  for (const auto& f : x) {
    const double v = f.values[kSlotA];
    if (v <= 0.3) lo = std::max(lo, v);
    else hi = std::min(hi, v);
  }
  for (const auto& f : vx) between += f.values[kSlotA] > lo && f.values[kSlotA] < hi;
  EXPECT_LE(between, 1u);
  EXPECT_LE(r.report.final_val_rmse, 0.01 + (between ? 0.7 / std::sqrt(vx.size()) : 0.0));
  if (between == 0) EXPECT_LE(r.report.final_val_rmse, 0.01);
}

TEST(Gbdt, TrainRmseNonIncreasing) {
  OracleConfig oc = OracleConfig::Default();
  Dataset ds = GenDataset(10, 20, oc);
  SplitAssignment split = Split(ds, SplitStrategy::kWithinTask, 0.2, 0);
  TrainingData train = BuildTrainingData(ds, split.train_ids);
  detail::GbdtFit fit = detail::FitGbdt(train.flat, train.labels, {}, {}, GbdtConfig{}, 1);
  ASSERT_EQ(fit.train_rmse.size(), 200u);
  for (size_t i = 1; i < fit.train_rmse.size(); ++i) EXPECT_LE(fit.train_rmse[i], fit.train_rmse[i - 1] + 1e-12);
}

/*! \brief Least squares on [1, x_a, x_b, x_c] by the normal equations. */
std::array<double, 4> LeastSquares(const std::vector<FlatFeatures>& x, const std::vector<double>& y) {
  double a[4][5] = {};
  for (size_t n = 0; n < x.size(); ++n) {
    const double row[4] = {1.0, x[n].values[kSlotA], x[n].values[kSlotB], x[n].values[kSlotC]};
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) a[i][j] += row[i] * row[j];
      a[i][4] += row[i] * y[n];
    }
  }
  for (int c = 0; c < 4; ++c) {
    for (int r = c + 1; r < 4; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 5; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::array<double, 4> w{};
  for (int r = 3; r >= 0; --r) {
    double s = a[r][4];
    for (int k = r + 1; k < 4; ++k) s -= a[r][k] * w[k];
    w[r] = s / a[r][r];
  }
  return w;
}

TEST(Mlp, LinearTargetMatchesLeastSquares) {
  Rng rng(8);
  auto make = [&](int n, std::vector<FlatFeatures>* x, std::vector<double>* y) {
    for (int i = 0; i < n; ++i) {
      FlatFeatures f;
      f.values[kSlotA] = rng.Normal();
      f.values[kSlotB] = rng.Normal();
      f.values[kSlotC] = rng.Normal();
      x->push_back(f);
      y->push_back(0.5 + 0.1 * f.values[kSlotA] - 0.05 * f.values[kSlotB] + 0.08 * f.values[kSlotC]);
    }
  };
  std::vector<FlatFeatures> x, vx;
  std::vector<double> y, vy;
  make(400, &x, &y);
  make(100, &vx, &vy);
  auto w = LeastSquares(x, y);
  double ls_se = 0;
  for (size_t i = 0; i < vx.size(); ++i) {
    const double p = w[0] + w[1] * vx[i].values[kSlotA] + w[2] * vx[i].values[kSlotB] + w[3] * vx[i].values[kSlotC];
    ls_se += (p - vy[i]) * (p - vy[i]);
  }
  const double ls_rmse = std::sqrt(ls_se / vx.size());
  EXPECT_LE(ls_rmse, 1e-9);

  TrainConfig cfg;
  cfg.seed = 1;
  TrainResult r = TrainMlp(FlatData(x, y), FlatData(vx, vy), cfg);
  EXPECT_LE(r.report.final_val_rmse, ls_rmse + 0.02);
}

TEST(Mlp, ZeroEpochsKeepsInitialization) {
  Dataset ds = GenDataset(4, 10, OracleConfig::Default());
  SplitAssignment split = Split(ds, SplitStrategy::kWithinTask, 0.2, 0);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 3;
  TrainResult r = TrainMlp(ds, split, cfg);
  EXPECT_TRUE(r.report.epochs.empty());
  EXPECT_EQ(r.report.final_train_rmse, r.report.initial_train_rmse);
  EXPECT_EQ(r.report.final_val_rmse, r.report.initial_val_rmse);
  TrainConfig two = cfg;
  two.epochs = 2;
  TrainResult r2 = TrainMlp(ds, split, two);
  EXPECT_EQ(r2.report.initial_train_rmse, r.report.initial_train_rmse);
  EXPECT_NE(r2.model.mlp()->params, r.model.mlp()->params);
}

TEST(Training, NonEmptyTrainSideRequired) {
  TrainingData empty;
  EXPECT_THROW(TrainGbdt(empty, empty, GbdtConfig{}), DataError);
  EXPECT_THROW(TrainMlp(empty, empty, TrainConfig{}), DataError);
  EXPECT_THROW(TrainTuner(empty, empty, TrainConfig{}), DataError);
}

TEST(Training, FinalTrainRmseNotAboveInitial) {
  Dataset ds = GenDataset(8, 20, OracleConfig::Default());
  SplitAssignment split = Split(ds, SplitStrategy::kWithinTask, 0.2, 0);
  TrainConfig cfg;
  cfg.epochs = 20;
  for (ModelKind kind : {ModelKind::kGbdt, ModelKind::kMlp, ModelKind::kTuner}) {
    TrainResult r = TrainModel(kind, ds, split, GbdtConfig{}, cfg);
    EXPECT_LE(r.report.final_train_rmse, r.report.initial_train_rmse) << ModelKindName(kind);
  }
}

class TrainedModels : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ds_ = new Dataset(GenDataset(6, 12, OracleConfig::Default()));
    split_ = new SplitAssignment(Split(*ds_, SplitStrategy::kWithinTask, 0.25, 1));
    TrainConfig cfg;
    cfg.epochs = 3;
    for (ModelKind kind : {ModelKind::kGbdt, ModelKind::kMlp, ModelKind::kTuner}) {
      models_.push_back(TrainModel(kind, *ds_, *split_, GbdtConfig{}, cfg).model);
    }
  }
  static void TearDownTestSuite() {
    delete ds_;
    delete split_;
    models_.clear();
  }
  static Dataset* ds_;
  static SplitAssignment* split_;
  static std::vector<CostModel> models_;
};
Dataset* TrainedModels::ds_ = nullptr;
SplitAssignment* TrainedModels::split_ = nullptr;
std::vector<CostModel> TrainedModels::models_;

TEST_F(TrainedModels, SaveLoadIsBitIdentical) {
  std::set<std::string> all;
  for (const auto& r : ds_->records()) all.insert(r.record_id);
  TrainingData data = BuildTrainingData(*ds_, all);
  auto dir = testing_util::ScratchDir("models_roundtrip");
  for (const auto& m : models_) {
    const std::string path = (dir / std::string(ModelKindName(m.kind()))).string();
    m.Save(path);
    CostModel back = CostModel::Load(path);
    EXPECT_EQ(back.kind(), m.kind());
    EXPECT_EQ(back.provenance(), m.provenance());
    std::vector<double> a = m.PredictData(data), b = back.PredictData(data);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(std::memcmp(&a[i], &b[i], sizeof(double)), 0);
    std::ostringstream s1, s2;
    m.Write(s1);
    back.Write(s2);
    EXPECT_EQ(s1.str(), s2.str());
  }
}

TEST_F(TrainedModels, PredictBatchContracts) {
  const auto& rec = ds_->records().front();
  FlatFeatures f = EncodeFlat(rec, *ds_);
  StepSequence s = EncodeSequence(rec, *ds_);
  for (const auto& m : models_) {
    const bool seq = m.kind() == ModelKind::kTuner;
    ModelInputs empty = seq ? ModelInputs(std::vector<StepSequence>{}) : ModelInputs(std::vector<FlatFeatures>{});
    EXPECT_TRUE(m.Predict(empty).empty());
    ModelInputs dup = seq ? ModelInputs(std::vector<StepSequence>(5, s)) : ModelInputs(std::vector<FlatFeatures>(5, f));
    std::vector<double> out = m.Predict(dup);
    ASSERT_EQ(out.size(), 5u);
    for (double v : out) {
      EXPECT_EQ(v, out[0]);
      EXPECT_TRUE(std::isfinite(v));
    }
    ModelInputs wrong = seq ? ModelInputs(std::vector<FlatFeatures>{f}) : ModelInputs(std::vector<StepSequence>{s});
    EXPECT_THROW(m.Predict(wrong), DataError);
    FlatFeatures stale = f;
    stale.layout_version += 1;
    StepSequence stale_s = s;
    stale_s.layout_version += 1;
    ModelInputs bad = seq ? ModelInputs(std::vector<StepSequence>{stale_s}) : ModelInputs(std::vector<FlatFeatures>{stale});
    EXPECT_THROW(m.Predict(bad), DataError);
  }
}

TEST_F(TrainedModels, TunerOutputsInUnitInterval) {
  std::set<std::string> all;
  for (const auto& r : ds_->records()) all.insert(r.record_id);
  for (double v : models_[2].PredictData(BuildTrainingData(*ds_, all))) {
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Training, JobsDoNotChangeResults) {
  Dataset ds = GenDataset(4, 12, OracleConfig::Default());
  SplitAssignment split = Split(ds, SplitStrategy::kWithinTask, 0.25, 0);
  TrainConfig cfg;
  cfg.epochs = 2;
  for (ModelKind kind : {ModelKind::kGbdt, ModelKind::kMlp, ModelKind::kTuner}) {
    cfg.jobs = 1;
    TrainResult a = TrainModel(kind, ds, split, GbdtConfig{}, cfg);
    cfg.jobs = 3;
    TrainResult b = TrainModel(kind, ds, split, GbdtConfig{}, cfg);
    EXPECT_TRUE(a.report == b.report) << ModelKindName(kind);
    std::ostringstream s1, s2;
    a.model.Write(s1);
    b.model.Write(s2);
    EXPECT_EQ(s1.str(), s2.str()) << ModelKindName(kind);
  }
}

/*!
 * \brief Ten matmul tasks whose records differ only in the unroll factor;
 *  cost falls monotonically with unroll.
 */
Dataset SingleKnobDataset() {
  std::vector<Task> tasks;
  std::vector<MeasurementRecord> recs;
  for (int t = 0; t < 10; ++t) {
    Task task{fmt::format("t{}", t), testing_util::Matmul(fmt::format("k{}", t), 32 * (t + 1), 64, 32),
              "platinum-8272", ""};
    for (int r = 0; r < 12; ++r) {
      ScheduleConfig s = testing_util::Plain(2);
      s.tile_factors = {{2}, {4}};
      s.unroll_factor = r + 1;
      recs.push_back(testing_util::Record(fmt::format("t{}-r{}", t, r), task.task_id, s,
                                          1e-3 * (t + 1) / (1.0 + 0.25 * r)));
    }
    tasks.push_back(task);
  }
  return Dataset({testing_util::Cpu()}, tasks, recs);
}

TEST(Tuner, SingleKnobOrderingLearned) {
  Dataset ds = SingleKnobDataset();
  SplitAssignment split = Split(ds, SplitStrategy::kWithinTask, 0.25, 2);
  TrainConfig cfg;
  cfg.seed = 4;
  TrainResult r = TrainTuner(ds, split, cfg);
  ASSERT_TRUE(r.report.epochs.back().val_pca.has_value());
  EXPECT_GE(*r.report.epochs.back().val_pca, 0.95);
}

TEST(Tuner, ContextPermutationIsNeutral) {
  Dataset ds = GenDataset(10, 16, OracleConfig::Default());
  SplitAssignment split = Split(ds, SplitStrategy::kWithinTask, 0.25, 3);
  TrainingData train = BuildTrainingData(ds, split.train_ids);
  TrainingData val = BuildTrainingData(ds, split.test_ids);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 6;
  TrainResult a = TrainTuner(train, val, cfg);

  // Reverse the standardized (non-hardware) context slots in both sides.
  auto permute = [](TrainingData* d) {
    for (auto& s : d->sequences) std::reverse(s.context.begin(), s.context.begin() + kContextHwOffset);
  };
  permute(&train);
  permute(&val);
  TrainResult b = TrainTuner(train, val, cfg);
  EXPECT_NEAR(a.report.final_val_rmse, b.report.final_val_rmse, 0.03);
  EXPECT_NEAR(*a.report.epochs.back().val_pca, *b.report.epochs.back().val_pca, 0.05);
}

TEST(Evaluate, PerfectAndAntiPerfectPredictors) {
  std::vector<double> y = {0.1, 0.5, 0.9, 0.3, 0.7, 1.0};
  std::vector<std::string> g = {"a", "a", "a", "b", "b", "b"};
  std::vector<double> anti(y.size());
  for (size_t i = 0; i < y.size(); ++i) anti[i] = 1.0 - y[i];
  SideMetrics perfect = ScoreSide(y, y, g);
  EXPECT_DOUBLE_EQ(perfect.pca, 1.0);
  EXPECT_DOUBLE_EQ(perfect.rmse, 0.0);
  EXPECT_DOUBLE_EQ(perfect.top1, 1.0);
  EXPECT_DOUBLE_EQ(ScoreSide(y, anti, g).pca, 0.0);
}

TEST(Evaluate, SingletonTasksExcludedAndCounted) {
  std::vector<double> y = {0.1, 0.5, 0.9};
  std::vector<std::string> g = {"a", "a", "b"};
  SideMetrics m = ScoreSide(y, y, g);
  EXPECT_EQ(m.tasks_scored, 1);
  EXPECT_EQ(m.tasks_excluded, 1);
}

TEST_F(TrainedModels, EvaluateMatchesMetricsModule) {
  for (const auto& m : models_) {
    MetricsReport rep = Evaluate(m, *ds_, *split_);
    TrainingData test = BuildTrainingData(*ds_, split_->test_ids);
    std::vector<double> pred = m.PredictData(test);
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_task;
    for (size_t i = 0; i < test.size(); ++i) {
      per_task[test.groups[i]].first.push_back(pred[i]);
      per_task[test.groups[i]].second.push_back(test.labels[i]);
    }
    double sum = 0;
    int n = 0;
    for (const auto& [task, pv] : per_task) {
      if (pv.first.size() < 2) continue;
      sum += PairwiseComparisonAccuracy({pv.second, pv.first});
      ++n;
    }
    ASSERT_GT(n, 0);
    EXPECT_NEAR(rep.test.pca, sum / n, 1e-12) << ModelKindName(m.kind());
    EXPECT_NEAR(rep.test.rmse, Rmse({test.labels, pred}), 1e-12);
  }
}

TEST(Evaluate, EmptyTestSideRejected) {
  Dataset ds = GenDataset(2, 5, OracleConfig::Default());
  SplitAssignment split;
  for (const auto& r : ds.records()) split.train_ids.insert(r.record_id);
  TrainConfig cfg;
  cfg.epochs = 1;
  CostModel m = TrainGbdt(ds, split, GbdtConfig{}).model;
  EXPECT_THROW(Evaluate(m, ds, split), DataError);
}

}  // namespace
}  // namespace tensortune

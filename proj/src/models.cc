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

#include "tensortune/models.h"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "gbdt.h"
#include "mlp_net.h"
#include "object_reader.h"
#include "tensortune/metrics.h"
#include "training.h"
#include "tuner_net.h"

namespace tensortune {

std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGbdt:
      return "gbdt";
    case ModelKind::kMlp:
      return "mlp";
    case ModelKind::kTuner:
      return "tuner";
  }
  return "?";
}

std::optional<ModelKind> ParseModelKind(std::string_view name) {
  for (auto k : {ModelKind::kGbdt, ModelKind::kMlp, ModelKind::kTuner}) {
    if (ModelKindName(k) == name) return k;
  }
  return std::nullopt;
}

Json GbdtConfig::ToJson() const {
  Json j;
  j["num_trees"] = num_trees;
  j["max_depth"] = max_depth;
  j["learning_rate"] = learning_rate;
  j["min_samples_leaf"] = min_samples_leaf;
  return j;
}

GbdtConfig GbdtConfig::FromJson(const Json& j) {
  detail::ObjectReader r(j, "gbdt config", false);
  GbdtConfig c;
  if (r.Optional("num_trees")) c.num_trees = static_cast<int>(r.Int("num_trees"));
  if (r.Optional("max_depth")) c.max_depth = static_cast<int>(r.Int("max_depth"));
  if (r.Optional("learning_rate")) c.learning_rate = r.Number("learning_rate");
  if (r.Optional("min_samples_leaf")) c.min_samples_leaf = static_cast<int>(r.Int("min_samples_leaf"));
  r.Finish();
  if (c.num_trees < 1 || c.max_depth < 1 || !(c.learning_rate > 0) || c.min_samples_leaf < 1) {
    throw DataError("gbdt config values must be > 0");
  }
  return c;
}

Json TrainConfig::ToJson() const {
  Json j;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["recurrent_layers"] = recurrent_layers;
  j["attention_heads"] = attention_heads;
  j["attention_unroll_steps"] = attention_unroll_steps;
  j["optimizer"] = "adam";
  j["loss"] = loss == LossKind::kRmse ? "rmse" : "ranking";
  j["seed"] = seed;
  j["recurrent_hidden"] = recurrent_hidden;
  j["attention_dim"] = attention_dim;
  j["head_hidden"] = head_hidden;
  j["mlp_hidden"] = mlp_hidden;
  return j;
}

TrainConfig TrainConfig::FromJson(const Json& j) {
  detail::ObjectReader r(j, "train config", false);
  TrainConfig c;
  auto get_int = [&r](const char* key, int* out) {
    if (r.Optional(key)) *out = static_cast<int>(r.Int(key));
  };
  get_int("batch_size", &c.batch_size);
  get_int("epochs", &c.epochs);
  if (r.Optional("learning_rate")) c.learning_rate = r.Number("learning_rate");
  get_int("recurrent_layers", &c.recurrent_layers);
  get_int("attention_heads", &c.attention_heads);
  get_int("attention_unroll_steps", &c.attention_unroll_steps);
  if (r.Optional("optimizer") && r.String("optimizer") != "adam") {
    throw DataError("train config: optimizer is fixed to adam");
  }
  if (r.Optional("loss")) {
    std::string loss = r.String("loss");
    if (loss == "rmse") {
      c.loss = LossKind::kRmse;
    } else if (loss == "ranking") {
      c.loss = LossKind::kRanking;
    } else {
      throw DataError("train config: unknown loss \"" + loss + "\"");
    }
  }
  if (r.Optional("seed")) c.seed = static_cast<uint64_t>(r.Int("seed"));
  get_int("recurrent_hidden", &c.recurrent_hidden);
  get_int("attention_dim", &c.attention_dim);
  get_int("head_hidden", &c.head_hidden);
  get_int("mlp_hidden", &c.mlp_hidden);
  get_int("jobs", &c.jobs);
  r.Finish();
  if (c.batch_size < 1 || c.epochs < 0 || !(c.learning_rate > 0) || c.recurrent_layers < 1 ||
      c.attention_heads < 1 || c.attention_unroll_steps < 1) {
    throw DataError("train config: batch_size, learning_rate and layer counts must be positive");
  }
  return c;
}

TrainingData BuildTrainingData(const Dataset& ds, const std::set<std::string>& record_ids) {
  TrainingData data;
  for (const auto& rec : ds.records()) {
    if (!rec.valid() || !record_ids.count(rec.record_id)) continue;
    data.flat.push_back(EncodeFlat(rec, ds));
    data.sequences.push_back(EncodeSequence(rec, ds));
    data.labels.push_back(Label(rec, ds));
    data.groups.push_back(rec.task_id);
  }
  return data;
}

Json TrainReport::ToJson() const {
  Json j;
  j["kind"] = std::string(ModelKindName(kind));
  j["train_count"] = train_count;
  j["val_count"] = val_count;
  j["initial_train_rmse"] = initial_train_rmse;
  j["initial_val_rmse"] = initial_val_rmse;
  j["final_train_rmse"] = final_train_rmse;
  j["final_val_rmse"] = final_val_rmse;
  Json rows = Json::array();
  for (const auto& e : epochs) {
    Json row;
    row["epoch"] = e.epoch;
    row["train_rmse"] = e.train_rmse;
    row["val_rmse"] = e.val_rmse;
    if (e.val_pca) row["val_pca"] = *e.val_pca;
    rows.push_back(std::move(row));
  }
  j["epochs"] = std::move(rows);
  return j;
}

std::string TrainReport::ToText() const {
  std::string out = fmt::format("model {}  train_records {}  val_records {}\n", ModelKindName(kind),
                                train_count, val_count);
  out += fmt::format("initial  train_rmse {:.6f}  val_rmse {:.6f}\n", initial_train_rmse,
                     initial_val_rmse);
  out += fmt::format("final    train_rmse {:.6f}  val_rmse {:.6f}\n", final_train_rmse, final_val_rmse);
  out += fmt::format("{:>6}  {:>10}  {:>10}  {:>8}\n", "epoch", "train_rmse", "val_rmse", "val_pca");
  for (const auto& e : epochs) {
    out += fmt::format("{:>6}  {:>10.6f}  {:>10.6f}  {:>8}\n", e.epoch, e.train_rmse, e.val_rmse,
                       e.val_pca ? fmt::format("{:.4f}", *e.val_pca) : std::string("NA"));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared training loop

namespace detail {

double LossGradient(LossKind loss, const std::vector<double>& pred, const std::vector<double>& y,
                    std::vector<double>* dpred) {
  const size_t b = pred.size();
  dpred->assign(b, 0.0);
  if (loss == LossKind::kRmse) {
    double sum = 0;
    for (size_t i = 0; i < b; ++i) {
      const double d = pred[i] - y[i];
      sum += d * d;
      (*dpred)[i] = 2.0 * d / static_cast<double>(b);
    }
    return sum / static_cast<double>(b);
  }
  int64_t pairs = 0;
  for (size_t i = 0; i < b; ++i) {
    for (size_t j = 0; j < b; ++j) pairs += y[i] > y[j];
  }
  if (pairs == 0) return 0.0;
  double sum = 0;
  const double inv = 1.0 / static_cast<double>(pairs);
  for (size_t i = 0; i < b; ++i) {
    for (size_t j = 0; j < b; ++j) {
      if (!(y[i] > y[j])) continue;
      const double m = pred[i] - pred[j];
      sum += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
      const double g = -Sigmoid(-m) * inv;
      (*dpred)[i] += g;
      (*dpred)[j] -= g;
    }
  }
  return sum * inv;
}

namespace {

template <typename Net>
std::vector<double> PredictWith(const Net& net, const std::vector<typename Net::Input>& x, int jobs) {
  std::vector<double> out(x.size());
  ParallelFor(x.size(), jobs, [&](size_t i) {
    typename Net::Cache cache;
    out[i] = net.Forward(x[i], &cache);
  });
  return out;
}

double RmseOrZero(const std::vector<double>& pred, const std::vector<double>& y) {
  if (y.empty()) return 0.0;
  return Rmse({y, pred});
}

std::optional<double> GroupedPca(const std::vector<double>& pred, const std::vector<double>& y,
                                 const std::vector<std::string>& groups) {
  if (y.empty()) return std::nullopt;
  SideMetrics m = ScoreSide(y, pred, groups);
  if (m.tasks_scored == 0) return std::nullopt;
  return m.pca;
}

template <typename Net>
void Fit(Net* net, const std::vector<typename Net::Input>& x, const TrainingData& train,
         const std::vector<typename Net::Input>& vx, const TrainingData& val, const TrainConfig& cfg,
         const std::vector<ParamGroup>& trainable, TrainReport* report) {
  if (x.empty()) throw DataError("training: empty training side");
  const int jobs = cfg.jobs > 0 ? cfg.jobs : DefaultJobs();
  report->train_count = static_cast<int64_t>(x.size());
  report->val_count = static_cast<int64_t>(vx.size());
  report->initial_train_rmse = RmseOrZero(PredictWith(*net, x, jobs), train.labels);
  report->initial_val_rmse = RmseOrZero(PredictWith(*net, vx, jobs), val.labels);

  const size_t n = x.size(), n_params = net->params.size();
  const size_t batch = static_cast<size_t>(std::max(1, cfg.batch_size));
  Adam adam(n_params, cfg.learning_rate);
  Rng rng(SplitMix64(cfg.seed ^ 0x5eed7a));
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<typename Net::Cache> caches(batch);
  std::vector<std::vector<double>> grads(batch, std::vector<double>(n_params));
  std::vector<double> total(n_params), pred, y, dpred;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.Shuffle(&order);
    double sq = 0;
    for (size_t start = 0; start < n; start += batch) {
      const size_t b = std::min(batch, n - start);
      pred.assign(b, 0.0);
      y.assign(b, 0.0);
      ParallelFor(b, jobs, [&](size_t k) { pred[k] = net->Forward(x[order[start + k]], &caches[k]); });
      for (size_t k = 0; k < b; ++k) {
        y[k] = train.labels[order[start + k]];
        sq += (pred[k] - y[k]) * (pred[k] - y[k]);
      }
      double loss = LossGradient(cfg.loss, pred, y, &dpred);
      if (!std::isfinite(loss) || !std::isfinite(sq)) {
        throw NumericError(fmt::format("training diverged: NaN loss at epoch {}", epoch));
      }
      ParallelFor(b, jobs, [&](size_t k) {
        std::fill(grads[k].begin(), grads[k].end(), 0.0);
        net->Backward(caches[k], dpred[k], grads[k].data());
      });
      std::fill(total.begin(), total.end(), 0.0);
      for (size_t k = 0; k < b; ++k) Axpy(1.0, grads[k].data(), total.data(), static_cast<int>(n_params));
      adam.Step(&net->params, total, trainable);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_rmse = std::sqrt(sq / static_cast<double>(n));
    std::vector<double> vp = PredictWith(*net, vx, jobs);
    for (double v : vp) {
      if (!std::isfinite(v)) throw NumericError(fmt::format("training diverged: NaN loss at epoch {}", epoch));
    }
    m.val_rmse = RmseOrZero(vp, val.labels);
    m.val_pca = GroupedPca(vp, val.labels, val.groups);
    report->epochs.push_back(m);
  }
  report->final_train_rmse = RmseOrZero(PredictWith(*net, x, jobs), train.labels);
  report->final_val_rmse = RmseOrZero(PredictWith(*net, vx, jobs), val.labels);
}

}  // namespace

void FitMlp(MlpNet* net, const TrainingData& train, const TrainingData& val, const TrainConfig& cfg,
            const std::vector<ParamGroup>& trainable, TrainReport* report) {
  Fit(net, train.flat, train, val.flat, val, cfg, trainable, report);
}

void FitTuner(TunerNet* net, const TrainingData& train, const TrainingData& val,
              const TrainConfig& cfg, const std::vector<ParamGroup>& trainable, TrainReport* report) {
  Fit(net, train.sequences, train, val.sequences, val, cfg, trainable, report);
}

std::vector<double> PredictMlp(const MlpNet& net, const std::vector<FlatFeatures>& x, int jobs) {
  return PredictWith(net, x, jobs);
}

std::vector<double> PredictTuner(const TunerNet& net, const std::vector<StepSequence>& x, int jobs) {
  return PredictWith(net, x, jobs);
}

namespace {

std::string_view ActionName(SlotAction a) {
  switch (a) {
    case SlotAction::kKeep:
      return "keep";
    case SlotAction::kReplaceWithDst:
      return "replace";
    case SlotAction::kZero:
      return "zero";
  }
  return "?";
}

}  // namespace

Json MappingToJson(const FeatureMapping& m) {
  Json j;
  Json actions = Json::array(), values = Json::array(), mask = Json::array();
  for (int i = 0; i < kNumHardwareSlots; ++i) {
    actions.push_back(std::string(ActionName(m.actions[i])));
    values.push_back(m.dst.values[i]);
    mask.push_back(m.dst.presence_mask[i]);
  }
  j["actions"] = std::move(actions);
  j["dst_values"] = std::move(values);
  j["dst_mask"] = std::move(mask);
  return j;
}

FeatureMapping MappingFromJson(const Json& j) {
  ObjectReader r(j, "feature mapping", false);
  const Json& actions = r.Required("actions");
  const Json& values = r.Required("dst_values");
  const Json& mask = r.Required("dst_mask");
  r.Finish();
  if (!actions.is_array() || !values.is_array() || !mask.is_array() ||
      actions.size() != kNumHardwareSlots || values.size() != kNumHardwareSlots ||
      mask.size() != kNumHardwareSlots) {
    throw DataError("feature mapping: expected 9 slots");
  }
  FeatureMapping m;
  for (int i = 0; i < kNumHardwareSlots; ++i) {
    std::string a = actions[i].get<std::string>();
    if (a == "keep") {
      m.actions[i] = SlotAction::kKeep;
    } else if (a == "replace") {
      m.actions[i] = SlotAction::kReplaceWithDst;
    } else if (a == "zero") {
      m.actions[i] = SlotAction::kZero;
    } else {
      throw DataError("feature mapping: unknown action " + a);
    }
    m.dst.values[i] = values[i].get<double>();
    m.dst.presence_mask[i] = mask[i].get<bool>();
  }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CostModel

CostModel CostModel::FromGbdt(std::shared_ptr<const detail::GbdtEnsemble> g, Json provenance) {
  CostModel m;
  m.kind_ = ModelKind::kGbdt;
  m.gbdt_ = std::move(g);
  m.provenance_ = std::move(provenance);
  return m;
}

CostModel CostModel::FromMlp(std::shared_ptr<const detail::MlpNet> net, Json provenance) {
  CostModel m;
  m.kind_ = ModelKind::kMlp;
  m.mlp_ = std::move(net);
  m.provenance_ = std::move(provenance);
  return m;
}

CostModel CostModel::FromTuner(std::shared_ptr<const detail::TunerNet> t, Json provenance) {
  CostModel m;
  m.kind_ = ModelKind::kTuner;
  m.tuner_ = std::move(t);
  m.provenance_ = std::move(provenance);
  return m;
}

CostModel CostModel::WithMappings(std::vector<FeatureMapping> mappings) const {
  CostModel m = *this;
  m.mappings_ = std::move(mappings);
  return m;
}

CostModel CostModel::WithTuner(std::shared_ptr<const detail::TunerNet> t, Json provenance) const {
  CostModel m = *this;
  m.tuner_ = std::move(t);
  m.provenance_ = std::move(provenance);
  return m;
}

CostModel CostModel::WithProvenance(Json provenance) const {
  CostModel m = *this;
  m.provenance_ = std::move(provenance);
  return m;
}

std::vector<double> CostModel::Predict(const ModelInputs& inputs) const {
  if (empty()) throw DataError("predict: empty model");
  if (const auto* flat = std::get_if<std::vector<FlatFeatures>>(&inputs)) {
    if (kind_ == ModelKind::kTuner) throw DataError("predict: tuner model needs step sequences");
    std::vector<FlatFeatures> x = *flat;
    for (auto& f : x) {
      if (f.layout_version != layout_version_) throw DataError("predict: feature layout version mismatch");
      for (const auto& m : mappings_) ApplyMapping(m, &f);
    }
    if (kind_ == ModelKind::kGbdt) {
      std::vector<double> out;
      out.reserve(x.size());
      for (const auto& f : x) out.push_back(gbdt_->Predict(f));
      return out;
    }
    return detail::PredictMlp(*mlp_, x, 1);
  }
  const auto& seqs = std::get<std::vector<StepSequence>>(inputs);
  if (kind_ != ModelKind::kTuner) throw DataError("predict: gbdt/mlp models need flat features");
  std::vector<StepSequence> x = seqs;
  for (auto& s : x) {
    if (s.layout_version != layout_version_) throw DataError("predict: feature layout version mismatch");
    if (s.steps.empty()) throw DataError("predict: empty step sequence");
    for (const auto& m : mappings_) ApplyMapping(m, &s);
  }
  return detail::PredictTuner(*tuner_, x, 1);
}

std::vector<double> CostModel::PredictSchedules(const Kernel& k, std::span<const ScheduleConfig> schedules,
                                                const HardwareParams& hw) const {
  if (kind_ == ModelKind::kTuner) {
    std::vector<StepSequence> x;
    for (const auto& s : schedules) x.push_back(EncodeSequence(k, s, hw));
    return Predict(x);
  }
  std::vector<FlatFeatures> x;
  for (const auto& s : schedules) x.push_back(EncodeFlat(k, s, hw));
  return Predict(x);
}

std::vector<double> CostModel::PredictData(const TrainingData& data) const {
  if (kind_ == ModelKind::kTuner) return Predict(data.sequences);
  return Predict(data.flat);
}

namespace {

constexpr char kModelMagic[8] = {'T', 'T', 'M', 'O', 'D', 'E', 'L', '1'};

void WriteU64(std::ostream& out, uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

uint64_t ReadU64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw DataError("model file truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  return v;
}

struct NamedArray {
  std::string name;
  std::vector<double> values;
};

std::vector<double> TakeArray(std::map<std::string, std::vector<double>>* arrays, const std::string& name,
                              size_t expect) {
  auto it = arrays->find(name);
  if (it == arrays->end()) throw DataError("model file: missing array " + name);
  if (expect != 0 && it->second.size() != expect) {
    throw DataError(fmt::format("model file: array {} has {} values, expected {}", name,
                                it->second.size(), expect));
  }
  return std::move(it->second);
}

}  // namespace

void CostModel::Write(std::ostream& out) const {
  if (empty()) throw DataError("cannot save an empty model");
  Json header;
  header["format"] = "tensortune.model";
  header["version"] = 1;
  header["kind"] = std::string(ModelKindName(kind_));
  header["layout_version"] = layout_version_;
  header["provenance"] = provenance_;
  Json maps = Json::array();
  for (const auto& m : mappings_) maps.push_back(detail::MappingToJson(m));
  header["mappings"] = std::move(maps);

  std::vector<NamedArray> arrays;
  if (kind_ == ModelKind::kGbdt) {
    header["gbdt"] = gbdt_->config.ToJson();
    NamedArray base{"base", {gbdt_->base}}, sizes{"tree_sizes", {}}, feature{"node_feature", {}},
        threshold{"node_threshold", {}}, left{"node_left", {}}, right{"node_right", {}},
        value{"node_value", {}};
    for (const auto& t : gbdt_->trees) {
      sizes.values.push_back(static_cast<double>(t.nodes.size()));
      for (const auto& nd : t.nodes) {
        feature.values.push_back(nd.feature);
        threshold.values.push_back(nd.threshold);
        left.values.push_back(nd.left);
        right.values.push_back(nd.right);
        value.values.push_back(nd.value);
      }
    }
    arrays = {base, sizes, feature, threshold, left, right, value};
  } else if (kind_ == ModelKind::kMlp) {
    header["mlp"] = {{"hidden", mlp_->hidden()}};
    arrays = {{"params", mlp_->params}, {"norm_offset", mlp_->norm.offset}, {"norm_scale", mlp_->norm.scale}};
  } else {
    header["tuner"] = tuner_->arch().ToJson();
    arrays = {{"params", tuner_->params},
              {"norm_offset", tuner_->context_norm.offset},
              {"norm_scale", tuner_->context_norm.scale}};
  }
  Json list = Json::array();
  for (const auto& a : arrays) list.push_back({{"name", a.name}, {"count", a.values.size()}});
  header["arrays"] = std::move(list);

  std::string text = header.dump();
  out.write(kModelMagic, sizeof(kModelMagic));
  WriteU64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : arrays) {
    for (double v : a.values) WriteU64(out, std::bit_cast<uint64_t>(v));
  }
  if (!out) throw Error("failed to write model");
}

CostModel CostModel::Read(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::string_view(magic, 8) != std::string_view(kModelMagic, 8)) {
    throw DataError("not a tensortune model file");
  }
  uint64_t len = ReadU64(in);
  if (len > (1u << 26)) throw DataError("model file: header too large");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError("model file truncated");
  Json header;
  try {
    header = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: bad header: ") + e.what());
  }
  std::map<std::string, std::vector<double>> arrays;
  for (const auto& a : header.at("arrays")) {
    const uint64_t count = a.at("count").get<uint64_t>();
    std::vector<double> values(count);
    for (auto& v : values) v = std::bit_cast<double>(ReadU64(in));
    arrays[a.at("name").get<std::string>()] = std::move(values);
  }
  auto kind = ParseModelKind(header.at("kind").get<std::string>());
  if (!kind) throw DataError("model file: unknown kind");
  if (header.at("layout_version").get<uint32_t>() != kFlatLayoutVersion) {
    throw DataError("model file: feature layout version mismatch");
  }
  CostModel m;
  Json provenance = header.at("provenance");
  if (*kind == ModelKind::kGbdt) {
    auto g = std::make_shared<detail::GbdtEnsemble>();
    g->config = GbdtConfig::FromJson(header.at("gbdt"));
    g->base = TakeArray(&arrays, "base", 1)[0];
    auto sizes = TakeArray(&arrays, "tree_sizes", 0);
    auto feature = TakeArray(&arrays, "node_feature", 0);
    auto threshold = TakeArray(&arrays, "node_threshold", feature.size());
    auto left = TakeArray(&arrays, "node_left", feature.size());
    auto right = TakeArray(&arrays, "node_right", feature.size());
    auto value = TakeArray(&arrays, "node_value", feature.size());
    size_t pos = 0;
    for (double s : sizes) {
      detail::GbdtTree tree;
      for (size_t i = 0; i < static_cast<size_t>(s); ++i, ++pos) {
        if (pos >= feature.size()) throw DataError("model file: tree arrays truncated");
        tree.nodes.push_back({static_cast<int>(feature[pos]), threshold[pos], static_cast<int>(left[pos]),
                              static_cast<int>(right[pos]), value[pos]});
      }
      g->trees.push_back(std::move(tree));
    }
    m = FromGbdt(std::move(g), provenance);
  } else if (*kind == ModelKind::kMlp) {
    auto net = std::make_shared<detail::MlpNet>(header.at("mlp").at("hidden").get<int>(), 0);
    net->params = TakeArray(&arrays, "params", net->params.size());
    net->norm.offset = TakeArray(&arrays, "norm_offset", kFlatLength);
    net->norm.scale = TakeArray(&arrays, "norm_scale", kFlatLength);
    m = FromMlp(std::move(net), provenance);
  } else {
    auto net = std::make_shared<detail::TunerNet>(detail::TunerArch::FromJson(header.at("tuner")), 0);
    net->params = TakeArray(&arrays, "params", net->params.size());
    net->context_norm.offset = TakeArray(&arrays, "norm_offset", kContextLength);
    net->context_norm.scale = TakeArray(&arrays, "norm_scale", kContextLength);
    m = FromTuner(std::move(net), provenance);
  }
  std::vector<FeatureMapping> maps;
  for (const auto& j : header.at("mappings")) maps.push_back(detail::MappingFromJson(j));
  return m.WithMappings(std::move(maps));
}

void CostModel::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  Write(out);
}

CostModel CostModel::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path);
  try {
    return Read(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad model header: " + e.what());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training entry points

namespace {

Json Provenance(ModelKind kind, Json config, const TrainingData& train) {
  Json p;
  p["kind"] = std::string(ModelKindName(kind));
  p["config"] = std::move(config);
  p["train_records"] = train.size();
  return p;
}

TrainResult WithDataset(TrainResult r, const Dataset& ds, const SplitAssignment& split) {
  Json p = r.model.provenance();
  p["dataset_fingerprint"] = ds.Fingerprint();
  p["split"] = {{"strategy", std::string(SplitStrategyName(split.strategy))},
                {"test_ratio", split.test_ratio},
                {"seed", split.seed}};
  r.model = r.model.WithProvenance(std::move(p));
  return r;
}

void RequireTrain(const TrainingData& train) {
  if (train.size() == 0) throw DataError("training side has no valid records");
}

std::vector<const double*> FlatRows(const TrainingData& d) {
  std::vector<const double*> rows;
  for (const auto& f : d.flat) rows.push_back(f.values.data());
  return rows;
}

std::vector<const double*> ContextRows(const TrainingData& d) {
  std::vector<const double*> rows;
  for (const auto& s : d.sequences) rows.push_back(s.context.data());
  return rows;
}

}  // namespace

TrainResult TrainGbdt(const TrainingData& train, const TrainingData& val, const GbdtConfig& cfg) {
  RequireTrain(train);
  auto fit = detail::FitGbdt(train.flat, train.labels, val.flat, val.labels, cfg, 1);
  TrainResult r;
  r.report.kind = ModelKind::kGbdt;
  r.report.train_count = static_cast<int64_t>(train.size());
  r.report.val_count = static_cast<int64_t>(val.size());
  auto base_rmse = [&](const std::vector<double>& y) {
    if (y.empty()) return 0.0;
    std::vector<double> p(y.size(), fit.ensemble.base);
    return Rmse({y, p});
  };
  r.report.initial_train_rmse = base_rmse(train.labels);
  r.report.initial_val_rmse = base_rmse(val.labels);
  for (size_t t = 0; t < fit.train_rmse.size(); ++t) {
    r.report.epochs.push_back({static_cast<int>(t + 1), fit.train_rmse[t], fit.val_rmse[t], std::nullopt});
  }
  r.report.final_train_rmse = fit.train_rmse.back();
  r.report.final_val_rmse = fit.val_rmse.back();
  r.model = CostModel::FromGbdt(std::make_shared<detail::GbdtEnsemble>(std::move(fit.ensemble)),
                                Provenance(ModelKind::kGbdt, cfg.ToJson(), train));
  return r;
}

TrainResult TrainMlp(const TrainingData& train, const TrainingData& val, const TrainConfig& cfg) {
  RequireTrain(train);
  auto net = std::make_shared<detail::MlpNet>(cfg.mlp_hidden, cfg.seed);
  net->norm = detail::Normalizer::Fit(FlatRows(train), kFlatLength, kHwValueOffset);
  TrainResult r;
  r.report.kind = ModelKind::kMlp;
  detail::FitMlp(net.get(), train, val, cfg, net->groups(), &r.report);
  r.model = CostModel::FromMlp(std::move(net), Provenance(ModelKind::kMlp, cfg.ToJson(), train));
  return r;
}

TrainResult TrainTuner(const TrainingData& train, const TrainingData& val, const TrainConfig& cfg) {
  RequireTrain(train);
  for (const auto& s : train.sequences) {
    if (s.steps.empty()) throw DataError("tuner: empty step sequence");
  }
  detail::TunerArch arch;
  arch.layers = cfg.recurrent_layers;
  arch.hidden = cfg.recurrent_hidden;
  arch.heads = cfg.attention_heads;
  arch.attention_dim = cfg.attention_dim;
  arch.unroll_steps = cfg.attention_unroll_steps;
  arch.head_hidden = cfg.head_hidden;
  auto net = std::make_shared<detail::TunerNet>(arch, cfg.seed);
  net->context_norm = detail::Normalizer::Fit(ContextRows(train), kContextLength, kContextHwOffset);
  TrainResult r;
  r.report.kind = ModelKind::kTuner;
  detail::FitTuner(net.get(), train, val, cfg, net->groups(), &r.report);
  r.model = CostModel::FromTuner(std::move(net), Provenance(ModelKind::kTuner, cfg.ToJson(), train));
  return r;
}

TrainResult TrainGbdt(const Dataset& ds, const SplitAssignment& split, const GbdtConfig& cfg) {
  return WithDataset(TrainGbdt(BuildTrainingData(ds, split.train_ids), BuildTrainingData(ds, split.test_ids), cfg),
                     ds, split);
}

TrainResult TrainMlp(const Dataset& ds, const SplitAssignment& split, const TrainConfig& cfg) {
  return WithDataset(TrainMlp(BuildTrainingData(ds, split.train_ids), BuildTrainingData(ds, split.test_ids), cfg),
                     ds, split);
}

TrainResult TrainTuner(const Dataset& ds, const SplitAssignment& split, const TrainConfig& cfg) {
  return WithDataset(
      TrainTuner(BuildTrainingData(ds, split.train_ids), BuildTrainingData(ds, split.test_ids), cfg), ds,
      split);
}

TrainResult TrainModel(ModelKind kind, const Dataset& ds, const SplitAssignment& split,
                       const GbdtConfig& gbdt_cfg, const TrainConfig& train_cfg) {
  switch (kind) {
    case ModelKind::kGbdt:
      return TrainGbdt(ds, split, gbdt_cfg);
    case ModelKind::kMlp:
      return TrainMlp(ds, split, train_cfg);
    case ModelKind::kTuner:
      return TrainTuner(ds, split, train_cfg);
  }
  throw Error("unknown model kind");
}

// ---------------------------------------------------------------------------
// Evaluation

SideMetrics ScoreSide(std::span<const double> labels, std::span<const double> predictions,
                      std::span<const std::string> groups) {
  if (labels.size() != predictions.size() || labels.size() != groups.size()) {
    throw DataError("score: labels, predictions and groups differ in length");
  }
  SideMetrics m;
  m.records = static_cast<int64_t>(labels.size());
  if (labels.empty()) return m;
  m.rmse = Rmse({labels, predictions});
  std::map<std::string, std::vector<size_t>> by_group;
  for (size_t i = 0; i < groups.size(); ++i) by_group[groups[i]].push_back(i);
  double pca = 0, top1 = 0, top5 = 0;
  for (const auto& [group, idx] : by_group) {
    if (idx.size() < 2) {
      ++m.tasks_excluded;
      continue;
    }
    std::vector<double> y, p;
    for (size_t i : idx) {
      y.push_back(labels[i]);
      p.push_back(predictions[i]);
    }
    LabelPair lp{y, p};
    const int n = static_cast<int>(y.size());
    pca += PairwiseComparisonAccuracy(lp);
    top1 += TopKScore(lp, 1);
    top5 += TopKScore(lp, std::min(5, n));
    ++m.tasks_scored;
  }
  if (m.tasks_scored > 0) {
    m.pca = pca / static_cast<double>(m.tasks_scored);
    m.top1 = top1 / static_cast<double>(m.tasks_scored);
    m.top5 = top5 / static_cast<double>(m.tasks_scored);
  }
  return m;
}

MetricsReport Evaluate(const CostModel& model, const Dataset& ds, const SplitAssignment& split) {
  TrainingData test = BuildTrainingData(ds, split.test_ids);
  if (test.size() == 0) throw DataError("evaluate: test side has no valid records");
  TrainingData train = BuildTrainingData(ds, split.train_ids);
  MetricsReport r;
  std::vector<double> tp = model.PredictData(test);
  r.test = ScoreSide(test.labels, tp, test.groups);
  if (train.size() > 0) {
    std::vector<double> trp = model.PredictData(train);
    r.train = ScoreSide(train.labels, trp, train.groups);
  }
  return r;
}

namespace {

Json SideJson(const SideMetrics& m) {
  Json j;
  j["records"] = m.records;
  j["rmse"] = m.rmse;
  j["pca"] = m.pca;
  j["top1"] = m.top1;
  j["top5"] = m.top5;
  j["tasks_scored"] = m.tasks_scored;
  j["tasks_excluded"] = m.tasks_excluded;
  return j;
}

}  // namespace

Json MetricsReport::ToJson() const { return {{"train", SideJson(train)}, {"test", SideJson(test)}}; }

std::string MetricsReport::ToText() const {
  std::string out = fmt::format("{:<6}  {:>8}  {:>10}  {:>8}  {:>8}  {:>8}  {:>12}  {:>14}\n", "side",
                                "records", "rmse", "pca", "top1", "top5", "tasks_scored",
                                "tasks_excluded");
  for (const auto& [name, m] : {std::pair<const char*, const SideMetrics&>{"train", train}, {"test", test}}) {
    out += fmt::format("{:<6}  {:>8}  {:>10.6f}  {:>8.4f}  {:>8.4f}  {:>8.4f}  {:>12}  {:>14}\n", name,
                       m.records, m.rmse, m.pca, m.top1, m.top5, m.tasks_scored, m.tasks_excluded);
  }
  return out;
}

}  // namespace tensortune

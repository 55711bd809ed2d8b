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

#include "tensortune/cli.h"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>

#include "tensortune/dataset.h"
#include "tensortune/models.h"
#include "tensortune/oracle.h"
#include "tensortune/sampler.h"
#include "tensortune/search.h"
#include "tensortune/serialization.h"
#include "tensortune/splitter.h"
#include "tensortune/transfer.h"
#include "tensortune/workload.h"

namespace tensortune {
namespace {

/*! \brief Thrown for argument errors detected after parsing. */
class UsageError : public Error {
 public:
  using Error::Error;
};

std::string ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << bytes;
  if (!out) throw DataError("failed writing " + path);
}

std::string FileDigest(const std::string& path) { return HexDigest(Fnv1a64(ReadFileBytes(path))); }

/*! \brief Options shared by every command. */
struct GlobalOptions {
  int jobs = 0;
  bool lenient = false;

  int Jobs() const { return jobs > 0 ? jobs : DefaultJobs(); }
  LoadOptions Load() const { return LoadOptions{lenient}; }
};

/*! \brief A `--seed` option that falls back to TENSORTUNE_SEED, then to a default. */
struct SeedOption {
  uint64_t value = 0;
  CLI::Option* opt = nullptr;

  void Add(CLI::App* cmd) { opt = cmd->add_option("--seed", value, "RNG seed (default: $TENSORTUNE_SEED or 0)"); }
  bool explicitly_set() const { return opt && opt->count() > 0; }
  uint64_t Resolve(uint64_t fallback = 0) const {
    if (explicitly_set()) return value;
    if (const char* env = std::getenv("TENSORTUNE_SEED"); env && *env) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (*end != '\0') throw UsageError(fmt::format("TENSORTUNE_SEED is not an integer: \"{}\"", env));
      return v;
    }
    return fallback;
  }
};

/*! \brief Run record written next to a command's primary output. */
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args)
      : command_(std::move(command)), args_(args), start_(std::chrono::steady_clock::now()) {}

  void Config(Json config) { config_ = std::move(config); }
  void Seed(uint64_t seed) { seed_ = seed; }
  void Input(const std::string& path) { inputs_.push_back(path); }
  void Output(const std::string& path) { outputs_.push_back(path); }

  /*! \brief Writes `<primary>.manifest.json`. */
  void Write(const std::string& primary) const {
    Json j;
    j["command"] = command_;
    j["argv"] = args_;
    j["config"] = config_;
    j["seed"] = seed_ ? Json(*seed_) : Json(nullptr);
    j["version"] = std::string(kToolVersion);
    Json in = Json::object(), out = Json::object();
    for (const auto& p : inputs_) in[p] = FileDigest(p);
    for (const auto& p : outputs_) out[p] = FileDigest(p);
    j["inputs"] = std::move(in);
    j["outputs"] = std::move(out);
    j["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    WriteFileBytes(primary + ".manifest.json", j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  Json config_ = Json::object();
  std::optional<uint64_t> seed_;
  std::vector<std::string> inputs_, outputs_;
  std::chrono::steady_clock::time_point start_;
};

std::string StripPrefix(const std::string& spec, std::string_view prefix, bool required) {
  if (spec.rfind(prefix, 0) == 0) return spec.substr(prefix.size());
  if (required) throw UsageError(fmt::format("expected \"{}<path>\", got \"{}\"", prefix, spec));
  return spec;
}

HardwareParams ResolveHardware(const Dataset& ds, const std::string& id) {
  if (const auto* hw = ds.FindHardware(id)) return *hw;
  if (const auto* hw = FindBuiltinHardware(id)) return *hw;
  throw DataError("unknown hardware target \"" + id + "\"");
}

void WriteLines(const std::string& path, const std::vector<Json>& rows) {
  std::string text;
  for (const auto& r : rows) text += r.dump() + "\n";
  WriteFileBytes(path, text);
}

std::string CellText(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return fmt::format("{:.6g}", v.get<double>());
  return v.dump();
}

/*! \brief Aligned table of flat records, grouped by their "kind" field. */
std::string FormatRecordTables(const std::vector<Json>& rows) {
  std::vector<std::string> kinds;
  std::map<std::string, std::vector<const Json*>> by_kind;
  for (const auto& r : rows) {
    std::string kind = r.contains("kind") && r["kind"].is_string() ? r["kind"].get<std::string>() : "-";
    if (!by_kind.count(kind)) kinds.push_back(kind);
    by_kind[kind].push_back(&r);
  }
  std::string out;
  for (const auto& kind : kinds) {
    std::vector<std::string> cols;
    for (const Json* r : by_kind[kind]) {
      for (const auto& [k, v] : r->items()) {
        if (k != "kind" && std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
      }
    }
    std::vector<std::vector<std::string>> cells;
    std::vector<size_t> width(cols.size());
    for (size_t c = 0; c < cols.size(); ++c) width[c] = cols[c].size();
    for (const Json* r : by_kind[kind]) {
      std::vector<std::string> line;
      for (size_t c = 0; c < cols.size(); ++c) {
        line.push_back(r->contains(cols[c]) ? CellText((*r)[cols[c]]) : "NA");
        width[c] = std::max(width[c], line.back().size());
      }
      cells.push_back(std::move(line));
    }
    out += fmt::format("[{}]\n", kind);
    for (size_t c = 0; c < cols.size(); ++c) out += fmt::format("{:<{}}  ", cols[c], width[c]);
    out += "\n";
    for (const auto& line : cells) {
      for (size_t c = 0; c < cols.size(); ++c) out += fmt::format("{:<{}}  ", line[c], width[c]);
      out += "\n";
    }
    out += "\n";
  }
  return out;
}

Json SideRow(const char* kind, const char* side, const SideMetrics& m) {
  return {{"kind", kind},          {"side", side},       {"records", m.records},
          {"rmse", m.rmse},        {"pca", m.pca},       {"top1", m.top1},
          {"top5", m.top5},        {"tasks_scored", m.tasks_scored},
          {"tasks_excluded", m.tasks_excluded}};
}

/*! \brief Declares all subcommands and runs the selected one. */
class Driver {
 public:
  Driver(std::vector<std::string> args, std::ostream& out) : args_(std::move(args)), out_(out) {}

  int Run(std::ostream& err) {
    CLI::App app{"tensortune: hardware-aware tensor schedule tuning", "tensortune"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--jobs,-j", global_.jobs, "worker threads (default: available parallelism)")
        ->check(CLI::NonNegativeNumber);
    app.add_flag("--lenient", global_.lenient, "ignore unknown fields when loading datasets");

    AddGen(&app);
    AddCharacterize(&app);
    AddPrune(&app);
    AddSplit(&app);
    AddTrain(&app);
    AddEval(&app);
    AddTune(&app);
    AddTransfer(&app);
    AddReport(&app);
    AddHw(&app);

    std::vector<std::string> reversed(args_.rbegin(), args_.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      std::ostringstream o, d;
      int code = app.exit(e, o, d);
      out_ << o.str();
      err << d.str();
      return code == 0 ? kExitOk : kExitUsage;
    }
    try {
      action_();
      return kExitOk;
    } catch (const UsageError& e) {
      err << "tensortune: usage error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const NumericError& e) {
      err << "tensortune: numeric failure: " << e.what() << "\n";
      return kExitNumeric;
    } catch (const DataError& e) {
      err << "tensortune: data error: " << e.what() << "\n";
      return kExitData;
    } catch (const Error& e) {
      err << "tensortune: error: " << e.what() << "\n";
      return kExitData;
    } catch (const std::exception& e) {
      err << "tensortune: error: " << e.what() << "\n";
      return kExitData;
    }
  }

 private:
  Manifest NewManifest(const std::string& command) const { return Manifest(command, args_); }

  Dataset Load(const std::string& path) const { return LoadDataset(path, global_.Load()); }

  void Emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
      out_ << text;
    } else {
      WriteFileBytes(path, text);
    }
  }

  void AddGen(CLI::App* app) {
    auto* cmd = app->add_subcommand("gen", "generate a synthetic dataset from the seeded oracle");
    struct Opts {
      int64_t tasks = 60;
      int64_t records = 50;
      std::string oracle, out;
      SeedOption seed;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--tasks", o->tasks, "number of tasks")->check(CLI::PositiveNumber);
    cmd->add_option("--records", o->records, "records per task")->check(CLI::PositiveNumber);
    cmd->add_option("--oracle", o->oracle, "oracle config file ([synth:]cfg.json)");
    cmd->add_option("--out", o->out, "output dataset")->required();
    o->seed.Add(cmd);
    cmd->callback([this, o] {
      action_ = [this, o] {
        Manifest man = NewManifest("gen");
        OracleConfig cfg = OracleConfig::Default();
        if (!o->oracle.empty()) {
          std::string path = StripPrefix(o->oracle, "synth:", false);
          cfg = OracleConfig::Load(path);
          man.Input(path);
        }
        cfg.seed = o->seed.Resolve(cfg.seed);
        Dataset ds = GenDataset(o->tasks, o->records, cfg);
        SaveDataset(ds, o->out);
        Json c = {{"tasks", o->tasks}, {"records", o->records}, {"oracle", cfg.ToJson()}};
        man.Config(c);
        man.Seed(cfg.seed);
        man.Output(o->out);
        man.Write(o->out);
      };
    });
  }

  void AddCharacterize(CLI::App* app) {
    auto* cmd = app->add_subcommand("characterize", "per-operator flops and throughput table");
    struct Opts {
      std::string in, out, lines;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("dataset", o->in, "input dataset")->required();
    cmd->add_option("--out", o->out, "write the table here instead of standard output");
    cmd->add_option("--lines", o->lines, "also write line-delimited records");
    cmd->callback([this, o] {
      action_ = [this, o] {
        Manifest man = NewManifest("characterize");
        man.Input(o->in);
        auto rows = Characterize(Load(o->in));
        Emit(FormatCharacterizationTable(rows), o->out);
        if (!o->lines.empty()) {
          WriteFileBytes(o->lines, FormatCharacterizationLines(rows));
          man.Output(o->lines);
        }
        if (!o->out.empty()) man.Output(o->out);
        const std::string& primary = !o->out.empty() ? o->out : o->lines;
        if (!primary.empty()) man.Write(primary);
      };
    });
  }

  void AddPrune(CLI::App* app) {
    auto* cmd = app->add_subcommand("prune", "flops-weighted dataset pruning");
    struct Opts {
      SamplerConfig cfg;
      std::string in, out, report, lines;
      SeedOption seed;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--fraction", o->cfg.target_fraction, "fraction of records to keep");
    cmd->add_option("--quantile", o->cfg.low_perf_quantile, "per-task low-throughput quantile to drop");
    cmd->add_option("--min-records", o->cfg.min_records_per_task, "per-task record floor");
    cmd->add_option("--report", o->report, "text report");
    cmd->add_option("--lines", o->lines, "line-delimited report record");
    cmd->add_option("in", o->in, "input dataset")->required();
    cmd->add_option("out", o->out, "output dataset")->required();
    o->seed.Add(cmd);
    cmd->callback([this, o] {
      action_ = [this, o] {
        Manifest man = NewManifest("prune");
        man.Input(o->in);
        SamplerConfig cfg = o->cfg;
        cfg.seed = o->seed.Resolve();
        cfg = SamplerConfig::FromJson(cfg.ToJson());  // range checks
        PruneResult r = PruneDataset(Load(o->in), cfg);
        SaveDataset(r.dataset, o->out);
        man.Output(o->out);
        Emit(r.report.ToText(), o->report);
        if (!o->report.empty()) man.Output(o->report);
        if (!o->lines.empty()) {
          Json row = {{"kind", "prune"},
                      {"target_fraction", cfg.target_fraction},
                      {"records_before", r.report.records_before},
                      {"records_after", r.report.records_after},
                      {"realized_fraction", r.report.realized_fraction},
                      {"achievable", r.report.achievable}};
          WriteLines(o->lines, {row});
          man.Output(o->lines);
        }
        man.Config(cfg.ToJson());
        man.Seed(cfg.seed);
        man.Write(o->out);
      };
    });
  }

  void AddSplit(CLI::App* app) {
    auto* cmd = app->add_subcommand("split", "train/test split assignment");
    struct Opts {
      std::string strategy = "within_task";
      double ratio = 0.2;
      std::string in, out;
      SeedOption seed;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--strategy", o->strategy, "within_task | by_task | by_target")
        ->check(CLI::IsMember({"within_task", "by_task", "by_target"}));
    cmd->add_option("--ratio", o->ratio, "test ratio in (0, 1)");
    cmd->add_option("--out", o->out, "split assignment file")->required();
    cmd->add_option("dataset", o->in, "input dataset")->required();
    o->seed.Add(cmd);
    cmd->callback([this, o] {
      action_ = [this, o] {
        Manifest man = NewManifest("split");
        man.Input(o->in);
        const uint64_t seed = o->seed.Resolve();
        SplitAssignment s = Split(Load(o->in), *ParseSplitStrategy(o->strategy), o->ratio, seed);
        WriteFileBytes(o->out, s.ToJson().dump() + "\n");
        man.Output(o->out);
        man.Config({{"strategy", o->strategy}, {"ratio", o->ratio}});
        man.Seed(seed);
        man.Write(o->out);
      };
    });
  }

  SplitAssignment LoadSplit(const std::string& path, const Dataset& ds, bool all_test) const {
    if (!path.empty()) return SplitAssignment::FromJson(ReadJsonFile(path));
    SplitAssignment s;
    for (const auto& r : ds.records()) (all_test ? s.test_ids : s.train_ids).insert(r.record_id);
    return s;
  }

  void AddTrain(CLI::App* app) {
    auto* cmd = app->add_subcommand("train", "train a cost model");
    struct Opts {
      std::string kind = "tuner";
      std::string config, split, in, out, report, lines;
      int epochs = -1;
      SeedOption seed;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--model", o->kind, "gbdt | mlp | tuner")->check(CLI::IsMember({"gbdt", "mlp", "tuner"}));
    cmd->add_option("--config", o->config, "training config file");
    cmd->add_option("--split", o->split, "split assignment (default: every record trains)");
    cmd->add_option("--epochs", o->epochs, "override the configured epochs");
    cmd->add_option("--out", o->out, "model file")->required();
    cmd->add_option("--report", o->report, "text training report");
    cmd->add_option("--lines", o->lines, "line-delimited per-epoch records");
    cmd->add_option("dataset", o->in, "input dataset")->required();
    o->seed.Add(cmd);
    cmd->callback([this, o] {
      action_ = [this, o] {
        Manifest man = NewManifest("train");
        man.Input(o->in);
        Dataset ds = Load(o->in);
        SplitAssignment split = LoadSplit(o->split, ds, false);
        if (!o->split.empty()) man.Input(o->split);
        Json cfg_json = Json::object();
        if (!o->config.empty()) {
          cfg_json = ReadJsonFile(o->config);
          man.Input(o->config);
        }
        ModelKind kind = *ParseModelKind(o->kind);
        GbdtConfig gcfg;
        TrainConfig tcfg;
        uint64_t seed = 0;
        if (kind == ModelKind::kGbdt) {
          gcfg = GbdtConfig::FromJson(cfg_json);
          if (o->epochs >= 0) throw UsageError("--epochs does not apply to gbdt; set num_trees");
          man.Config(gcfg.ToJson());
        } else {
          tcfg = TrainConfig::FromJson(cfg_json);
          tcfg.seed = o->seed.Resolve(tcfg.seed);
          if (o->epochs >= 0) tcfg.epochs = o->epochs;
          tcfg.jobs = global_.Jobs();
          seed = tcfg.seed;
          man.Config(tcfg.ToJson());
        }
        man.Seed(seed);
        TrainResult r = TrainModel(kind, ds, split, gcfg, tcfg);
        r.model.Save(o->out);
        man.Output(o->out);
        Emit(r.report.ToText(), o->report);
        if (!o->report.empty()) man.Output(o->report);
        if (!o->lines.empty()) {
          std::vector<Json> rows;
          for (const auto& e : r.report.epochs) {
            Json row = {{"kind", "train"}, {"model", o->kind}, {"epoch", e.epoch},
                        {"train_rmse", e.train_rmse}, {"val_rmse", e.val_rmse}};
            row["val_pca"] = e.val_pca ? Json(*e.val_pca) : Json(nullptr);
            rows.push_back(std::move(row));
          }
          WriteLines(o->lines, rows);
          man.Output(o->lines);
        }
        man.Write(o->out);
      };
    });
  }

  void AddEval(CLI::App* app) {
    auto* cmd = app->add_subcommand("eval", "score a model: rmse, pairwise accuracy, top-k");
    struct Opts {
      std::string model, split, in, report, lines;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--model", o->model, "model file")->required();
    cmd->add_option("--split", o->split, "split assignment (default: every record is test)");
    cmd->add_option("--report", o->report, "write the table here instead of standard output");
    cmd->add_option("--lines", o->lines, "line-delimited metric records");
    cmd->add_option("dataset", o->in, "input dataset")->required();
    cmd->callback([this, o] {
      action_ = [this, o] {
        Manifest man = NewManifest("eval");
        man.Input(o->model);
        man.Input(o->in);
        Dataset ds = Load(o->in);
        if (!o->split.empty()) man.Input(o->split);
        MetricsReport r = Evaluate(CostModel::Load(o->model), ds, LoadSplit(o->split, ds, true));
        Emit(r.ToText(), o->report);
        if (!o->report.empty()) man.Output(o->report);
        if (!o->lines.empty()) {
          WriteLines(o->lines, {SideRow("eval", "train", r.train), SideRow("eval", "test", r.test)});
          man.Output(o->lines);
        }
        const std::string& primary = !o->report.empty() ? o->report : o->lines;
        if (!primary.empty()) man.Write(primary);
      };
    });
  }

  void AddTune(CLI::App* app) {
    auto* cmd = app->add_subcommand("tune", "model-guided schedule search measured on the oracle");
    struct Opts {
      std::string model, method, config, oracle, in, report, lines;
      int topk = -1;
      int steps = -1;
      SeedOption seed;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--model", o->model, "model file")->required();
    cmd->add_option("--method", o->method, "anneal | evolve")->check(CLI::IsMember({"anneal", "evolve"}));
    cmd->add_option("--topk", o->topk, "candidates measured per task")->check(CLI::PositiveNumber);
    cmd->add_option("--steps", o->steps, "annealing steps")->check(CLI::PositiveNumber);
    cmd->add_option("--config", o->config, "search config file");
    cmd->add_option("--oracle", o->oracle, "synth:cfg.json")->required();
    cmd->add_option("--report", o->report, "write the table here instead of standard output");
    cmd->add_option("--lines", o->lines, "line-delimited per-task records");
    cmd->add_option("dataset", o->in, "tasks to tune")->required();
    o->seed.Add(cmd);
    cmd->callback([this, o] {
      action_ = [this, o] {
        Manifest man = NewManifest("tune");
        man.Input(o->model);
        man.Input(o->in);
        std::string oracle_path = StripPrefix(o->oracle, "synth:", true);
        SynthOracle oracle(OracleConfig::Load(oracle_path));
        man.Input(oracle_path);
        SearchConfig cfg;
        if (!o->config.empty()) {
          cfg = SearchConfig::FromJson(ReadJsonFile(o->config));
          man.Input(o->config);
        }
        if (!o->method.empty()) cfg.method = o->method == "anneal" ? SearchMethod::kAnneal : SearchMethod::kEvolve;
        if (o->topk > 0) cfg.top_k = o->topk;
        if (o->steps > 0) cfg.steps = o->steps;
        cfg.seed = o->seed.Resolve(cfg.seed);
        TuneResult r = Tune(Load(o->in), CostModel::Load(o->model), oracle, cfg, global_.Jobs());
        Emit(r.ToText(), o->report);
        if (!o->report.empty()) man.Output(o->report);
        if (!o->lines.empty()) {
          std::vector<Json> rows;
          for (const auto& t : r.tasks) {
            rows.push_back({{"kind", "tune"},
                            {"task_id", t.task_id},
                            {"best_cost", t.best_cost},
                            {"oracle_calls", t.oracle_calls},
                            {"best_schedule", ScheduleConfig(t.best_schedule).Key()}});
          }
          rows.push_back({{"kind", "tune_total"},
                          {"tasks", r.tasks.size()},
                          {"oracle_calls", r.oracle_calls},
                          {"total_best_cost", r.total_best_cost},
                          {"mean_best_cost", r.MeanBestCost()}});
          WriteLines(o->lines, rows);
          man.Output(o->lines);
        }
        man.Config({{"search", cfg.ToJson()}, {"oracle", oracle.config().ToJson()}});
        man.Seed(cfg.seed);
        const std::string& primary = !o->report.empty() ? o->report : o->lines;
        if (!primary.empty()) man.Write(primary);
      };
    });
  }

  void AddTransfer(CLI::App* app) {
    auto* cmd = app->add_subcommand("transfer", "remap hardware features and fine-tune on a target");
    struct Opts {
      std::string model, src, dst, scope = "heads-only", in, out, report, lines;
      int64_t budget = 0;
      int epochs = 50;
      double lr = 1e-4;
      SeedOption seed;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--model", o->model, "pretrained model file")->required();
    cmd->add_option("--src", o->src, "source hardware id")->required();
    cmd->add_option("--dst", o->dst, "target hardware id")->required();
    cmd->add_option("--budget", o->budget, "target records to draw")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--scope", o->scope, "heads-only | full")->check(CLI::IsMember({"heads-only", "full"}));
    cmd->add_option("--epochs", o->epochs, "fine-tuning epochs")->check(CLI::NonNegativeNumber);
    cmd->add_option("--lr", o->lr, "fine-tuning learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o->out, "adapted model file")->required();
    cmd->add_option("--report", o->report, "write the report here instead of standard output");
    cmd->add_option("--lines", o->lines, "line-delimited report record");
    cmd->add_option("dataset", o->in, "dataset holding target records")->required();
    o->seed.Add(cmd);
    cmd->callback([this, o] {
      action_ = [this, o] {
        Manifest man = NewManifest("transfer");
        man.Input(o->model);
        man.Input(o->in);
        Dataset ds = Load(o->in);
        CostModel model = CostModel::Load(o->model);
        CostModel adapted = AdaptHardware(model, ResolveHardware(ds, o->src), ResolveHardware(ds, o->dst));
        TransferConfig cfg;
        cfg.target = o->dst;
        cfg.record_budget = o->budget;
        cfg.scope = o->scope == "full" ? FineTuneScope::kFull : FineTuneScope::kHeadsOnly;
        cfg.epochs = o->epochs;
        cfg.learning_rate = o->lr;
        cfg.seed = o->seed.Resolve();
        cfg.jobs = global_.Jobs();
        FineTuneResult r = FineTune(adapted, ds, cfg);
        r.model.Save(o->out);
        man.Output(o->out);
        Emit(r.report.ToText(), o->report);
        if (!o->report.empty()) man.Output(o->report);
        if (!o->lines.empty()) {
          Json row = r.report.ToJson();
          row.erase("task_ids");
          row["kind"] = "transfer";
          WriteLines(o->lines, {row});
          man.Output(o->lines);
        }
        Json c = cfg.ToJson();
        c["src"] = o->src;
        man.Config(c);
        man.Seed(cfg.seed);
        man.Write(o->out);
      };
    });
  }

  void AddReport(CLI::App* app) {
    auto* cmd = app->add_subcommand("report", "aligned tables from line-delimited result files");
    struct Opts {
      std::vector<std::string> files;
      std::string out;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("files", o->files, "line-delimited record files")->required();
    cmd->add_option("--out", o->out, "write the tables here instead of standard output");
    cmd->callback([this, o] {
      action_ = [this, o] {
        Manifest man = NewManifest("report");
        std::vector<Json> rows;
        for (const auto& path : o->files) {
          man.Input(path);
          std::istringstream in(ReadFileBytes(path));
          std::string line;
          int64_t line_no = 0;
          while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
              rows.push_back(Json::parse(line));
            } catch (const nlohmann::json::exception&) {
              throw DataError(fmt::format("{}:{}: not a JSON record", path, line_no));
            }
            if (!rows.back().is_object()) throw DataError(fmt::format("{}:{}: not an object", path, line_no));
          }
        }
        Emit(FormatRecordTables(rows), o->out);
        if (!o->out.empty()) {
          man.Output(o->out);
          man.Write(o->out);
        }
      };
    });
  }

  void AddHw(CLI::App* app) {
    auto* cmd = app->add_subcommand("hw", "hardware registry");
    cmd->require_subcommand(1);
    auto* list = cmd->add_subcommand("list", "print the builtin targets");
    list->callback([this] {
      action_ = [this] {
        std::vector<Json> rows;
        for (const auto& hw : BuiltinHardware()) {
          Json row = HardwareToJson(hw);
          row.erase("type");
          row["kind"] = std::string(HardwareClassName(hw.hardware_class));
          rows.push_back(std::move(row));
        }
        out_ << FormatRecordTables(rows);
      };
    });
  }

  std::vector<std::string> args_;
  std::ostream& out_;
  GlobalOptions global_;
  std::function<void()> action_ = [] {};
};

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return Driver(args, out).Run(err);
  } catch (const std::exception& e) {
    err << "tensortune: " << e.what() << "\n";
    return kExitData;
  }
}

int RunCli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return RunCli(args, std::cout, std::cerr);
}

}  // namespace tensortune

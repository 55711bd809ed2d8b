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

#include "tensortune/search.h"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "object_reader.h"
#include "tensortune/workload.h"

namespace tensortune {

ValidationResult ValidityCheck(const ScheduleConfig& s, const Kernel& k, const HardwareParams& hw) {
  ValidationResult r;
  r.violations = ScheduleShapeViolations(s, k, hw.hardware_class);
  if (r.Has("bad-knob")) return r;
  // Saturating product: a malformed schedule must not overflow here.
  int64_t tile = 1;
  for (const auto& axis : s.tile_factors) {
    if (!axis.empty() && __builtin_mul_overflow(tile, axis.back(), &tile)) {
      tile = std::numeric_limits<int64_t>::max() / 8;
      break;
    }
  }
  if (hw.is_gpu()) {
    int64_t threads = 1;
    if (s.thread_binding) {
      threads = s.thread_binding->threads_x * s.thread_binding->threads_y;
      if (hw.max_threads_per_block && threads > *hw.max_threads_per_block) {
        r.violations.push_back({"threads-per-block",
                                fmt::format("{} threads > {}", threads, *hw.max_threads_per_block)});
      }
    }
    if (hw.max_shared_memory_per_block && tile * 4 > *hw.max_shared_memory_per_block) {
      r.violations.push_back({"shared-memory", fmt::format("tile footprint {} bytes > {}", tile * 4,
                                                           *hw.max_shared_memory_per_block)});
    }
    int64_t vthreads = (tile + threads - 1) / threads;
    if (hw.max_vthread_extent && vthreads > *hw.max_vthread_extent) {
      r.violations.push_back({"vthread-extent",
                              fmt::format("{} virtual threads > {}", vthreads, *hw.max_vthread_extent)});
    }
  } else if (hw.vector_unit_bytes && s.vectorize_width * 4 > *hw.vector_unit_bytes) {
    r.violations.push_back({"vector-width", fmt::format("{} bytes > {}", s.vectorize_width * 4,
                                                        *hw.vector_unit_bytes)});
  }
  return r;
}

ScheduleSpace::ScheduleSpace(Kernel k, HardwareParams hw, std::vector<int> tiled_axes,
                             std::vector<std::vector<int64_t>> tile_domains,
                             std::vector<int64_t> unroll_domain, std::vector<int64_t> vectorize_domain,
                             std::vector<int64_t> threads_x_domain,
                             std::vector<int64_t> threads_y_domain)
    : kernel_(std::move(k)), hw_(std::move(hw)), tiled_axes_(std::move(tiled_axes)) {
  if (tiled_axes_.size() != tile_domains.size()) throw DataError("space: one domain per tiled axis");
  for (int axis : tiled_axes_) {
    if (axis < 0 || axis >= static_cast<int>(kernel_.output_shape.size())) {
      throw DataError("space: tiled axis out of range");
    }
  }
  if (threads_x_domain.empty() != threads_y_domain.empty()) {
    throw DataError("space: thread binding needs both threads_x and threads_y domains");
  }
  has_binding_ = !threads_x_domain.empty();
  domains_ = std::move(tile_domains);
  domains_.push_back(std::move(unroll_domain));
  domains_.push_back(std::move(vectorize_domain));
  if (has_binding_) {
    domains_.push_back(std::move(threads_x_domain));
    domains_.push_back(std::move(threads_y_domain));
  }
  for (const auto& d : domains_) {
    if (d.empty()) throw DataError("space: empty knob domain");
  }
}

ScheduleSpace ScheduleSpace::For(const Kernel& k, const HardwareParams& hw) {
  constexpr int64_t kMaxTile = 64;
  const int rank = static_cast<int>(k.output_shape.size());
  std::vector<int> axes;
  std::vector<std::vector<int64_t>> tiles;
  for (int axis = std::max(0, rank - 3); axis < rank; ++axis) {
    int64_t extent = k.output_shape[axis];
    std::vector<int64_t> domain;
    for (int64_t p = 1; p <= std::min(extent, kMaxTile); p *= 2) {
      if (extent % p == 0) domain.push_back(p);
    }
    axes.push_back(axis);
    tiles.push_back(std::move(domain));
  }
  std::vector<int64_t> tx, ty;
  if (hw.is_gpu()) {
    tx = {8, 16, 32, 64};
    ty = {1, 2, 4, 8, 16, 32};
  }
  return ScheduleSpace(k, hw, std::move(axes), std::move(tiles), {1, 2, 4, 8}, {1, 2, 4, 8, 16},
                       std::move(tx), std::move(ty));
}

uint64_t ScheduleSpace::size() const {
  uint64_t n = 1;
  for (const auto& d : domains_) {
    if (__builtin_mul_overflow(n, static_cast<uint64_t>(d.size()), &n)) {
      return std::numeric_limits<uint64_t>::max();
    }
  }
  return n;
}

ScheduleConfig ScheduleSpace::Materialize(const Point& p) const {
  if (p.size() != domains_.size()) throw DataError("space: point has the wrong number of knobs");
  ScheduleConfig s;
  s.tile_factors.assign(kernel_.output_shape.size(), {});
  size_t knob = 0;
  for (int axis : tiled_axes_) {
    s.tile_factors[axis] = {domains_[knob][p[knob]]};
    ++knob;
  }
  s.unroll_factor = domains_[knob][p[knob]];
  ++knob;
  s.vectorize_width = domains_[knob][p[knob]];
  ++knob;
  if (has_binding_) {
    s.thread_binding = ThreadBinding{domains_[knob][p[knob]], domains_[knob + 1][p[knob + 1]]};
  }
  return s;
}

std::vector<ScheduleSpace::Point> EnumerateValidPoints(const ScheduleSpace& space, uint64_t limit) {
  if (space.size() > limit) {
    throw DataError(fmt::format("space of {} points exceeds the enumeration limit {}", space.size(),
                                limit));
  }
  std::vector<ScheduleSpace::Point> out;
  ScheduleSpace::Point p(space.num_knobs(), 0);
  while (true) {
    if (space.IsValid(p)) out.push_back(p);
    size_t knob = space.num_knobs();
    while (knob > 0) {
      --knob;
      if (++p[knob] < static_cast<int>(space.domain(knob).size())) break;
      p[knob] = 0;
      if (knob == 0) return out;
    }
    if (space.num_knobs() == 0) return out;
  }
}

std::vector<ScheduleConfig> EnumerateSpace(const ScheduleSpace& space, uint64_t limit) {
  std::vector<ScheduleConfig> out;
  for (const auto& p : EnumerateValidPoints(space, limit)) out.push_back(space.Materialize(p));
  return out;
}

std::optional<ScheduleSpace::Point> RandomValidPoint(const ScheduleSpace& space, Rng* rng) {
  constexpr int kTries = 256;
  constexpr uint64_t kEnumerateLimit = 1 << 20;
  ScheduleSpace::Point p(space.num_knobs());
  for (int t = 0; t < kTries; ++t) {
    for (size_t k = 0; k < p.size(); ++k) {
      p[k] = static_cast<int>(rng->UniformInt(space.domain(k).size()));
    }
    if (space.IsValid(p)) return p;
  }
  if (space.size() > kEnumerateLimit) return std::nullopt;
  auto valid = EnumerateValidPoints(space, kEnumerateLimit);
  if (valid.empty()) return std::nullopt;
  return valid[rng->UniformInt(valid.size())];
}

double ModelScorer::Score(const ScheduleConfig& s) {
  return model_.PredictSchedules(kernel_, std::span<const ScheduleConfig>(&s, 1), hw_)[0];
}

namespace {

std::string_view MethodName(SearchMethod m) { return m == SearchMethod::kAnneal ? "anneal" : "evolve"; }

void CheckSearchConfig(const SearchConfig& cfg) {
  if (cfg.steps < 1 || cfg.population < 1 || cfg.generations < 0 || cfg.top_k < 1) {
    throw DataError("search: steps, population and top_k must be positive");
  }
  if (!(cfg.initial_temperature > 0)) throw DataError("search: initial_temperature must be > 0");
  if (!(cfg.cooling > 0 && cfg.cooling < 1)) throw DataError("search: cooling must be in (0, 1)");
  if (!(cfg.mutation_rate >= 0 && cfg.mutation_rate <= 1)) {
    throw DataError("search: mutation_rate must be in [0, 1]");
  }
}

/*! \brief Score cache over distinct visited points; the scorer runs once per point. */
class Visited {
 public:
  Visited(const ScheduleSpace& space, Scorer* scorer) : space_(space), scorer_(scorer) {}

  double Score(const ScheduleSpace::Point& p) {
    auto it = scores_.find(p);
    if (it != scores_.end()) return it->second;
    double s = scorer_->Score(space_.Materialize(p));
    if (!std::isfinite(s)) throw NumericError("search: scorer returned a non-finite score");
    scores_.emplace(p, s);
    return s;
  }

  std::vector<Candidate> Top(int k) const {
    std::vector<std::pair<const ScheduleSpace::Point*, double>> all;
    for (const auto& [p, s] : scores_) all.emplace_back(&p, s);
    // Map order is lexicographic, so a stable sort breaks score ties by point.
    std::stable_sort(all.begin(), all.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<Candidate> out;
    for (size_t i = 0; i < all.size() && static_cast<int>(i) < k; ++i) {
      out.push_back({*all[i].first, space_.Materialize(*all[i].first), all[i].second});
    }
    return out;
  }

 private:
  const ScheduleSpace& space_;
  Scorer* scorer_;
  std::map<ScheduleSpace::Point, double> scores_;
};

ScheduleSpace::Point StartPoint(const ScheduleSpace& space, Rng* rng) {
  auto p = RandomValidPoint(space, rng);
  if (!p) throw DataError("search: no valid schedule reachable in the space");
  return *p;
}

}  // namespace

Json SearchConfig::ToJson() const {
  Json j;
  j["method"] = std::string(MethodName(method));
  j["steps"] = steps;
  j["initial_temperature"] = initial_temperature;
  j["cooling"] = cooling;
  j["population"] = population;
  j["generations"] = generations;
  j["mutation_rate"] = mutation_rate;
  j["top_k"] = top_k;
  j["seed"] = seed;
  return j;
}

SearchConfig SearchConfig::FromJson(const Json& j) {
  detail::ObjectReader r(j, "search config", false);
  SearchConfig c;
  if (r.Optional("method")) {
    std::string m = r.String("method");
    if (m == "anneal") {
      c.method = SearchMethod::kAnneal;
    } else if (m == "evolve") {
      c.method = SearchMethod::kEvolve;
    } else {
      throw DataError("search config: unknown method \"" + m + "\"");
    }
  }
  if (r.Optional("steps")) c.steps = static_cast<int>(r.Int("steps"));
  if (r.Optional("initial_temperature")) c.initial_temperature = r.Number("initial_temperature");
  if (r.Optional("cooling")) c.cooling = r.Number("cooling");
  if (r.Optional("population")) c.population = static_cast<int>(r.Int("population"));
  if (r.Optional("generations")) c.generations = static_cast<int>(r.Int("generations"));
  if (r.Optional("mutation_rate")) c.mutation_rate = r.Number("mutation_rate");
  if (r.Optional("top_k")) c.top_k = static_cast<int>(r.Int("top_k"));
  if (r.Optional("seed")) c.seed = static_cast<uint64_t>(r.Int("seed"));
  r.Finish();
  CheckSearchConfig(c);
  return c;
}

std::vector<Candidate> SimulatedAnnealing(const ScheduleSpace& space, Scorer* scorer,
                                          const SearchConfig& cfg) {
  CheckSearchConfig(cfg);
  Rng rng(SplitMix64(cfg.seed ^ 0x5a11ea1));
  Visited visited(space, scorer);
  ScheduleSpace::Point cur = StartPoint(space, &rng);
  double cur_score = visited.Score(cur);

  std::vector<size_t> movable;
  for (size_t k = 0; k < space.num_knobs(); ++k) {
    if (space.domain(k).size() > 1) movable.push_back(k);
  }
  double temperature = cfg.initial_temperature;
  for (int step = 1; step < cfg.steps && !movable.empty(); ++step) {
    ScheduleSpace::Point next = cur;
    size_t knob = movable[rng.UniformInt(movable.size())];
    int last = static_cast<int>(space.domain(knob).size()) - 1;
    int& idx = next[knob];
    if (idx == 0) {
      idx = 1;
    } else if (idx == last) {
      idx = last - 1;
    } else {
      idx += rng.UniformInt(2) ? 1 : -1;
    }
    if (space.IsValid(next)) {
      double s = visited.Score(next);
      double delta = s - cur_score;
      if (delta >= 0 || rng.Uniform() < std::exp(delta / temperature)) {
        cur = std::move(next);
        cur_score = s;
      }
    }
    temperature *= cfg.cooling;
  }
  return visited.Top(cfg.top_k);
}

std::vector<Candidate> EvolutionarySearch(const ScheduleSpace& space, Scorer* scorer,
                                          const SearchConfig& cfg) {
  CheckSearchConfig(cfg);
  constexpr int kRemutateTries = 8;
  Rng rng(SplitMix64(cfg.seed ^ 0xe701f3));
  Visited visited(space, scorer);
  const size_t knobs = space.num_knobs();

  struct Member {
    ScheduleSpace::Point point;
    double score;
  };
  std::vector<Member> pop;
  for (int i = 0; i < cfg.population; ++i) {
    ScheduleSpace::Point p = StartPoint(space, &rng);
    double s = visited.Score(p);
    pop.push_back({std::move(p), s});
  }
  auto better = [](const Member& a, const Member& b) {
    return a.score > b.score || (a.score == b.score && a.point < b.point);
  };
  auto tournament = [&]() -> const Member& {
    const Member& a = pop[rng.UniformInt(pop.size())];
    const Member& b = pop[rng.UniformInt(pop.size())];
    return better(b, a) ? b : a;
  };

  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<Member> next;
    next.push_back(*std::min_element(pop.begin(), pop.end(), better));
    int attempts = 0;
    while (static_cast<int>(next.size()) < cfg.population && attempts < 4 * cfg.population) {
      ++attempts;
      ScheduleSpace::Point child = tournament().point;
      const ScheduleSpace::Point& other = tournament().point;
      if (knobs >= 2) {
        size_t cut = 1 + rng.UniformInt(knobs - 1);
        std::copy(other.begin() + cut, other.end(), child.begin() + cut);
      }
      for (size_t k = 0; k < knobs; ++k) {
        if (rng.Uniform() < cfg.mutation_rate) {
          child[k] = static_cast<int>(rng.UniformInt(space.domain(k).size()));
        }
      }
      bool ok = space.IsValid(child);
      for (int t = 0; !ok && t < kRemutateTries && knobs > 0; ++t) {
        size_t k = rng.UniformInt(knobs);
        child[k] = static_cast<int>(rng.UniformInt(space.domain(k).size()));
        ok = space.IsValid(child);
      }
      if (!ok) continue;
      double s = visited.Score(child);
      next.push_back({std::move(child), s});
    }
    pop = std::move(next);
  }
  return visited.Top(cfg.top_k);
}

std::vector<Candidate> RunSearch(const ScheduleSpace& space, Scorer* scorer, const SearchConfig& cfg) {
  return cfg.method == SearchMethod::kAnneal ? SimulatedAnnealing(space, scorer, cfg)
                                             : EvolutionarySearch(space, scorer, cfg);
}

std::vector<size_t> TasksByImportance(const Dataset& ds, const std::string& target) {
  std::map<OpKind, int64_t> occurrence;
  for (const auto& t : ds.tasks()) occurrence[t.kernel.op] += 1;
  struct Entry {
    double weight;
    size_t index;
  };
  std::vector<Entry> entries;
  for (size_t i = 0; i < ds.tasks().size(); ++i) {
    const Task& t = ds.tasks()[i];
    if (!target.empty() && t.target != target) continue;
    double w = static_cast<double>(occurrence[t.kernel.op]) * static_cast<double>(FlopCount(t.kernel));
    entries.push_back({w, i});
  }
  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return ds.tasks()[a.index].task_id < ds.tasks()[b.index].task_id;
  });
  std::vector<size_t> out;
  for (const auto& e : entries) out.push_back(e.index);
  return out;
}

Json TuneResult::ToJson() const {
  Json j;
  j["oracle_calls"] = oracle_calls;
  j["total_best_cost"] = total_best_cost;
  j["mean_best_cost"] = MeanBestCost();
  Json rows = Json::array();
  for (const auto& t : tasks) {
    Json row;
    row["task_id"] = t.task_id;
    row["best_cost"] = t.best_cost;
    row["oracle_calls"] = t.oracle_calls;
    row["best_schedule"] = ScheduleToJson(t.best_schedule);
    rows.push_back(std::move(row));
  }
  j["tasks"] = std::move(rows);
  return j;
}

std::string TuneResult::ToText() const {
  size_t width = 7;
  for (const auto& t : tasks) width = std::max(width, t.task_id.size());
  std::string out = fmt::format("{:<{}}  {:>23}  {:>6}  {}\n", "task_id", width, "best_cost_s",
                                "calls", "best_schedule");
  for (const auto& t : tasks) {
    out += fmt::format("{:<{}}  {:>23}  {:>6}  {}\n", t.task_id, width, FormatCost(t.best_cost),
                       t.oracle_calls, t.best_schedule.Key());
  }
  out += fmt::format("tasks {}  oracle_calls {}  total_best_cost {}  mean_best_cost {}\n",
                     tasks.size(), oracle_calls, FormatCost(total_best_cost),
                     FormatCost(MeanBestCost()));
  return out;
}

namespace {

std::vector<ScheduleSpace::Point> PickForMeasurement(const ScheduleSpace& space, Scorer* scorer,
                                                     const SearchConfig& cfg) {
  constexpr uint64_t kTopUpEnumerateLimit = 1 << 16;
  const uint64_t k = static_cast<uint64_t>(cfg.top_k);
  if (space.size() <= k) return EnumerateValidPoints(space, k);
  std::vector<ScheduleSpace::Point> picks;
  std::set<ScheduleSpace::Point> seen;
  for (auto& c : RunSearch(space, scorer, cfg)) {
    seen.insert(c.point);
    picks.push_back(std::move(c.point));
  }
  if (picks.size() >= k) return picks;
  if (space.size() <= kTopUpEnumerateLimit) {
    for (auto& p : EnumerateValidPoints(space, kTopUpEnumerateLimit)) {
      if (picks.size() >= k) break;
      if (seen.insert(p).second) picks.push_back(std::move(p));
    }
    return picks;
  }
  Rng rng(SplitMix64(cfg.seed ^ 0x70b0a9));
  for (uint64_t attempt = 0; attempt < 64 * k && picks.size() < k; ++attempt) {
    auto p = RandomValidPoint(space, &rng);
    if (!p) break;
    if (seen.insert(*p).second) picks.push_back(std::move(*p));
  }
  return picks;
}

}  // namespace

TuneResult Tune(const Dataset& ds, const ScorerFactory& make_scorer, const CostOracle& oracle,
                const SearchConfig& cfg, int jobs) {
  CheckSearchConfig(cfg);
  auto started = std::chrono::steady_clock::now();
  std::vector<size_t> order = TasksByImportance(ds);
  if (order.empty()) throw DataError("tune: no tasks");
  std::vector<TuneTaskResult> results(order.size());
  ParallelFor(order.size(), jobs, [&](size_t i) {
    const Task& task = ds.tasks()[order[i]];
    const HardwareParams& hw = ds.HardwareOf(task);
    ScheduleSpace space = ScheduleSpace::For(task.kernel, hw);
    SearchConfig task_cfg = cfg;
    task_cfg.seed = SplitMix64(cfg.seed ^ Fnv1a64(task.task_id));
    std::unique_ptr<Scorer> scorer = make_scorer(task.kernel, hw);
    TuneTaskResult& out = results[i];
    out.task_id = task.task_id;
    try {
      auto picks = PickForMeasurement(space, scorer.get(), task_cfg);
      if (picks.empty()) throw DataError("no valid schedule in the space");
      bool have = false;
      for (const auto& p : picks) {
        ScheduleConfig s = space.Materialize(p);
        if (!ValidityCheck(s, task.kernel, hw).ok()) {
          throw Error("internal: invalid schedule selected for measurement");
        }
        double cost = oracle.Measure(task.kernel, s, hw);
        ++out.oracle_calls;
        if (!have || cost < out.best_cost) {
          out.best_cost = cost;
          out.best_schedule = std::move(s);
          have = true;
        }
      }
    } catch (const NumericError& e) {
      throw NumericError("tune: task " + task.task_id + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("tune: task " + task.task_id + ": " + e.what());
    } catch (const Error& e) {
      throw Error("tune: task " + task.task_id + ": " + e.what());
    }
  });
  TuneResult result;
  for (auto& r : results) {
    result.oracle_calls += r.oracle_calls;
    result.total_best_cost += r.best_cost;
    result.tasks.push_back(std::move(r));
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

TuneResult Tune(const Dataset& ds, const CostModel& model, const CostOracle& oracle,
                const SearchConfig& cfg, int jobs) {
  ScorerFactory factory = [&model](const Kernel& k, const HardwareParams& hw) {
    return std::make_unique<ModelScorer>(model, k, hw);
  };
  return Tune(ds, factory, oracle, cfg, jobs);
}

}  // namespace tensortune

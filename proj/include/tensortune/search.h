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
 * \file tensortune/search.h
 * \brief Schedule spaces, hardware validity rules, model-guided simulated
 *  annealing and evolutionary search, and the measure-top-k tuning loop.
 */
#ifndef TENSORTUNE_SEARCH_H_
#define TENSORTUNE_SEARCH_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tensortune/common.h"
#include "tensortune/dataset.h"
#include "tensortune/hardware.h"
#include "tensortune/models.h"
#include "tensortune/serialization.h"

namespace tensortune {

/*!
 * \brief Shape rules plus per-class limits.
 *
 * GPU: threads_x * threads_y <= max_threads_per_block ("threads-per-block");
 *   innermost tile product * 4 bytes <= max_shared_memory_per_block
 *   ("shared-memory"); ceil(innermost tile product / bound threads) <=
 *   max_vthread_extent ("vthread-extent").
 * CPU: vectorize_width * 4 bytes <= vector_unit_bytes ("vector-width").
 */
ValidationResult ValidityCheck(const ScheduleConfig& s, const Kernel& k, const HardwareParams& hw);

/*!
 * \brief Discrete knob space of one (kernel, target) pair. A point is one
 *  domain index per knob; knobs are the tiled axes (one factor each), unroll,
 *  vectorize and, on GPUs, threads_x and threads_y.
 */
class ScheduleSpace {
 public:
  using Point = std::vector<int>;

  /*!
   * \brief Default space: the innermost min(3, rank) output axes are tiled
   *  with powers of two that divide the extent, capped at 64.
   */
  static ScheduleSpace For(const Kernel& k, const HardwareParams& hw);

  /*! \brief Explicit domains; `tiled_axes[i]` names the output axis of tile knob i. */
  ScheduleSpace(Kernel k, HardwareParams hw, std::vector<int> tiled_axes,
                std::vector<std::vector<int64_t>> tile_domains, std::vector<int64_t> unroll_domain,
                std::vector<int64_t> vectorize_domain, std::vector<int64_t> threads_x_domain,
                std::vector<int64_t> threads_y_domain);

  const Kernel& kernel() const { return kernel_; }
  const HardwareParams& hw() const { return hw_; }
  size_t num_knobs() const { return domains_.size(); }
  const std::vector<int64_t>& domain(size_t knob) const { return domains_[knob]; }
  /*! \brief Number of points (valid or not), saturating at UINT64_MAX. */
  uint64_t size() const;

  ScheduleConfig Materialize(const Point& p) const;
  bool IsValid(const Point& p) const { return ValidityCheck(Materialize(p), kernel_, hw_).ok(); }

 private:
  Kernel kernel_;
  HardwareParams hw_;
  std::vector<int> tiled_axes_;
  bool has_binding_ = false;
  std::vector<std::vector<int64_t>> domains_;
};

/*! \brief Valid points in lexicographic index order. \throws DataError if size() > limit. */
std::vector<ScheduleSpace::Point> EnumerateValidPoints(const ScheduleSpace& space, uint64_t limit);
std::vector<ScheduleConfig> EnumerateSpace(const ScheduleSpace& space, uint64_t limit);

/*! \brief Uniform draw among valid points; nullopt when none is found. */
std::optional<ScheduleSpace::Point> RandomValidPoint(const ScheduleSpace& space, Rng* rng);

/*! \brief Higher is better. Called only on valid schedules. */
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double Score(const ScheduleConfig& s) = 0;
};

/*! \brief Scores with a cost model's prediction. */
class ModelScorer : public Scorer {
 public:
  ModelScorer(CostModel model, Kernel k, HardwareParams hw)
      : model_(std::move(model)), kernel_(std::move(k)), hw_(std::move(hw)) {}
  double Score(const ScheduleConfig& s) override;

 private:
  CostModel model_;
  Kernel kernel_;
  HardwareParams hw_;
};

/*! \brief Ground-truth cost source (seconds). */
class CostOracle {
 public:
  virtual ~CostOracle() = default;
  virtual double Measure(const Kernel& k, const ScheduleConfig& s, const HardwareParams& hw) const = 0;
};

enum class SearchMethod { kAnneal, kEvolve };

struct SearchConfig {
  SearchMethod method = SearchMethod::kAnneal;
  int steps = 512;
  double initial_temperature = 1.0;
  double cooling = 0.98;
  int population = 32;
  int generations = 16;
  double mutation_rate = 0.2;
  int top_k = 8;
  uint64_t seed = 0;

  Json ToJson() const;
  static SearchConfig FromJson(const Json& j);
};

struct Candidate {
  ScheduleSpace::Point point;
  ScheduleConfig schedule;
  double score = 0;
};

/*!
 * \brief Seeded SA from a random valid start. A neighbor moves one knob to an
 *  adjacent domain value; invalid neighbors are rejected unscored. Returns the
 *  top_k distinct visited points by score (descending, ties by point order).
 */
std::vector<Candidate> SimulatedAnnealing(const ScheduleSpace& space, Scorer* scorer,
                                          const SearchConfig& cfg);

/*! \brief Tournament(2) selection, one-point crossover, per-knob mutation, elitism. */
std::vector<Candidate> EvolutionarySearch(const ScheduleSpace& space, Scorer* scorer,
                                          const SearchConfig& cfg);

std::vector<Candidate> RunSearch(const ScheduleSpace& space, Scorer* scorer, const SearchConfig& cfg);

struct TuneTaskResult {
  std::string task_id;
  ScheduleConfig best_schedule;
  double best_cost = 0;
  int64_t oracle_calls = 0;
};

struct TuneResult {
  std::vector<TuneTaskResult> tasks;  // in processing order
  int64_t oracle_calls = 0;
  double total_best_cost = 0;  // inference-time proxy
  double wall_seconds = 0;

  double MeanBestCost() const { return tasks.empty() ? 0 : total_best_cost / tasks.size(); }
  /*! \brief Everything except wall time. */
  Json ToJson() const;
  std::string ToText() const;
};

using ScorerFactory = std::function<std::unique_ptr<Scorer>(const Kernel&, const HardwareParams&)>;

/*!
 * \brief Task order for tuning and retraining: occurrence(op) * flop_count
 *  descending, ties by task_id. Occurrence counts the dataset's tasks per op.
 *  An empty `target` keeps every task.
 */
std::vector<size_t> TasksByImportance(const Dataset& ds, const std::string& target = "");

/*!
 * \brief For every task of `ds` in importance order: search, measure the top_k
 *  candidates on the oracle (topping up with further valid points when the
 *  search returns fewer), keep the best measured schedule.
 */
TuneResult Tune(const Dataset& ds, const ScorerFactory& make_scorer, const CostOracle& oracle,
                const SearchConfig& cfg, int jobs = 1);
TuneResult Tune(const Dataset& ds, const CostModel& model, const CostOracle& oracle,
                const SearchConfig& cfg, int jobs = 1);

}  // namespace tensortune

#endif  // TENSORTUNE_SEARCH_H_

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
 * \file tensortune/oracle.h
 * \brief Seeded analytic cost oracle and the synthetic dataset generator.
 *
 * cost = flops / (peak(hw) * eff) * exp(noise_sigma * z)
 *
 * eff = base * f_ws * f_vec * f_unroll * f_occ, each factor in (0, 1]:
 *   f_ws     = 1 / (1 + cache_weight * ((log2 F - log2 F*) / 4)^2), with F the
 *              innermost tile footprint in bytes and F* = 128 cache lines on a
 *              CPU or half the shared memory on a GPU;
 *   f_vec    = (1 + vector_weight * min(v, lanes) / lanes) / (1 + vector_weight),
 *              lanes = vector_unit_bytes / 4;
 *   f_unroll = (1 + 0.5 * min(u, 4) / 4) / 1.5;
 *   f_occ    = (1 + occupancy_weight * min(threads, T) / max_threads)
 *              / (1 + occupancy_weight) on a GPU (T = innermost tile product), 1 on a CPU.
 * Knob values past a saturation point (v > lanes, u > 4, threads > T) pay a
 * 2% overhead per doubling, so each saturating knob has a unique best value.
 * z is a standard normal keyed by (kernel_id, schedule, target, seed).
 */
#ifndef TENSORTUNE_ORACLE_H_
#define TENSORTUNE_ORACLE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tensortune/dataset.h"
#include "tensortune/hardware.h"
#include "tensortune/search.h"
#include "tensortune/serialization.h"

namespace tensortune {

struct OracleCoefficients {
  double cache_weight = 1.0;
  double vector_weight = 1.0;
  double occupancy_weight = 0.0;
  double base_efficiency = 0.8;

  Json ToJson() const;
  static OracleCoefficients FromJson(const Json& j, const OracleCoefficients& defaults);
};

struct OracleConfig {
  uint64_t seed = 0;
  double noise_sigma = 0.05;
  double error_fraction = 0.02;
  std::vector<HardwareParams> hardware;  // generation targets, tasks assigned round-robin
  OracleCoefficients cpu{1.0, 1.0, 0.0, 0.8};
  OracleCoefficients gpu{1.0, 0.5, 1.0, 0.6};

  const OracleCoefficients& For(const HardwareParams& hw) const { return hw.is_gpu() ? gpu : cpu; }
  Json ToJson() const;
  /*! \brief Hardware entries are builtin target ids or full parameter objects. */
  static OracleConfig FromJson(const Json& j);
  static OracleConfig Load(const std::string& path);
  /*! \brief Defaults with one CPU (platinum-8272) and one GPU (t4) target. */
  static OracleConfig Default();
};

/*! \brief Peak FLOP/s: cores * lanes * 2 * 2.5 GHz (CPU), warp * max threads * 2e7 (GPU). */
double OraclePeak(const HardwareParams& hw);
/*! \brief Noise-free efficiency in (0, 1]. */
double OracleEfficiency(const Kernel& k, const ScheduleConfig& s, const HardwareParams& hw,
                        const OracleConfig& cfg);
/*! \brief Seconds. \throws DataError when the schedule fails ValidityCheck. */
double OracleCost(const Kernel& k, const ScheduleConfig& s, const HardwareParams& hw,
                  const OracleConfig& cfg);

class SynthOracle : public CostOracle {
 public:
  explicit SynthOracle(OracleConfig cfg) : cfg_(std::move(cfg)) {}
  double Measure(const Kernel& k, const ScheduleConfig& s, const HardwareParams& hw) const override {
    return OracleCost(k, s, hw, cfg_);
  }
  const OracleConfig& config() const { return cfg_; }

 private:
  OracleConfig cfg_;
};

/*! \brief Exact scorer: flops / (peak * cost), i.e. the efficiency when noise is 0. */
class OracleScorer : public Scorer {
 public:
  OracleScorer(OracleConfig cfg, Kernel k, HardwareParams hw)
      : cfg_(std::move(cfg)), kernel_(std::move(k)), hw_(std::move(hw)) {}
  double Score(const ScheduleConfig& s) override;

 private:
  OracleConfig cfg_;
  Kernel kernel_;
  HardwareParams hw_;
};

/*! \brief Random kernel for a target; winograd convolutions only on GPUs. */
Kernel SampleKernel(Rng* rng, const HardwareParams& hw, const std::string& kernel_id);

/*!
 * \brief n_tasks tasks (round-robin over cfg.hardware, one fresh kernel each),
 *  records_per_task distinct valid schedules drawn uniformly per task (repeats
 *  only once a space is exhausted), then round(error_fraction * total)
 *  records turned into error records.
 */
Dataset GenDataset(int64_t n_tasks, int64_t records_per_task, const OracleConfig& cfg);

}  // namespace tensortune

#endif  // TENSORTUNE_ORACLE_H_

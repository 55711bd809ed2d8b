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
 * \file training.h
 * \brief Mini-batch Adam loop shared by the MLP, the tuner and fine-tuning.
 */
#ifndef TENSORTUNE_SRC_TRAINING_H_
#define TENSORTUNE_SRC_TRAINING_H_

#include <vector>

#include "mlp_net.h"
#include "nn.h"
#include "tensortune/models.h"
#include "tuner_net.h"

namespace tensortune {
namespace detail {

/*!
 * \brief Trains `net` in place on the parameter groups in `trainable`.
 *  Fills the report's rmse fields and per-epoch metrics; the normalizer is
 *  left as the caller set it.
 * \throws NumericError when a loss or prediction turns non-finite.
 */
void FitMlp(MlpNet* net, const TrainingData& train, const TrainingData& val, const TrainConfig& cfg,
            const std::vector<ParamGroup>& trainable, TrainReport* report);
void FitTuner(TunerNet* net, const TrainingData& train, const TrainingData& val,
              const TrainConfig& cfg, const std::vector<ParamGroup>& trainable, TrainReport* report);

/*! \brief Loss gradient d(loss)/d(prediction) for a batch. Returns the loss value. */
double LossGradient(LossKind loss, const std::vector<double>& pred, const std::vector<double>& y,
                    std::vector<double>* dpred);

std::vector<double> PredictMlp(const MlpNet& net, const std::vector<FlatFeatures>& x, int jobs);
std::vector<double> PredictTuner(const TunerNet& net, const std::vector<StepSequence>& x, int jobs);

Json MappingToJson(const FeatureMapping& m);
FeatureMapping MappingFromJson(const Json& j);

}  // namespace detail
}  // namespace tensortune

#endif  // TENSORTUNE_SRC_TRAINING_H_

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
 * \file tensortune/metrics.h
 * \brief Cost-model evaluation metrics: pairwise comparison accuracy, top-k
 *  score, rmse and the pairwise logistic ranking loss.
 */
#ifndef TENSORTUNE_METRICS_H_
#define TENSORTUNE_METRICS_H_

#include <span>

namespace tensortune {

/*! \brief Actual (y) and predicted (y_hat) scores of equal length. */
struct LabelPair {
  std::span<const double> y;
  std::span<const double> y_hat;
};

/*!
 * \brief Fraction of unordered pairs (i < j) on which [y_i > y_j] equals
 *  [y_hat_i > y_hat_j]. A tie is "not greater" on its side, so a pair tied in
 *  both vectors agrees and a pair tied in only one may not.
 * \throws DataError when n < 2, lengths differ or an input is NaN.
 */
double PairwiseComparisonAccuracy(const LabelPair& p);

/*!
 * \brief Best y among the k indices with highest y_hat, divided by max(y).
 *  Ties in y_hat are broken by lower index.
 */
double TopKScore(const LabelPair& p, int k);

double Rmse(const LabelPair& p);

/*!
 * \brief Mean over ordered pairs with y_i > y_j of log(1 + exp(-(y_hat_i - y_hat_j))).
 *  Zero when no such pair exists.
 */
double RankingLoss(const LabelPair& p);

}  // namespace tensortune

#endif  // TENSORTUNE_METRICS_H_

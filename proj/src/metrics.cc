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

#include "tensortune/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tensortune/common.h"

namespace tensortune {
namespace {

void CheckPair(const LabelPair& p, size_t min_n, const char* what) {
  if (p.y.size() != p.y_hat.size()) throw DataError(std::string(what) + ": length mismatch");
  if (p.y.size() < min_n) {
    throw DataError(std::string(what) + ": needs at least " + std::to_string(min_n) + " labels");
  }
  for (size_t i = 0; i < p.y.size(); ++i) {
    if (std::isnan(p.y[i]) || std::isnan(p.y_hat[i])) {
      throw DataError(std::string(what) + ": NaN input");
    }
  }
}

// log(1 + exp(-m)) without overflow for large negative margins.
double SoftplusNeg(double margin) {
  if (margin < -30) return -margin;
  return std::log1p(std::exp(-margin));
}

}  // namespace

double PairwiseComparisonAccuracy(const LabelPair& p) {
  CheckPair(p, 2, "pairwise_comparison_accuracy");
  const size_t n = p.y.size();
  // The upper triangle of not(xor(A, B)) where A_ij = [y_i > y_j], B_ij = [y_hat_i > y_hat_j].
  uint64_t correct = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      bool a = p.y[i] > p.y[j];
      bool b = p.y_hat[i] > p.y_hat[j];
      correct += (a == b);
    }
  }
  double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(correct) / pairs;
}

double TopKScore(const LabelPair& p, int k) {
  CheckPair(p, 1, "top_k_score");
  const size_t n = p.y.size();
  if (k < 1 || static_cast<size_t>(k) > n) throw DataError("top_k_score: k must be in [1, n]");
  double max_y = *std::max_element(p.y.begin(), p.y.end());
  if (max_y <= 0) throw DataError("top_k_score: max(y) must be > 0");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return p.y_hat[a] > p.y_hat[b]; });
  double best = p.y[order[0]];
  for (int i = 1; i < k; ++i) best = std::max(best, p.y[order[i]]);
  return best / max_y;
}

double Rmse(const LabelPair& p) {
  CheckPair(p, 1, "rmse");
  double sum = 0;
  for (size_t i = 0; i < p.y.size(); ++i) {
    double d = p.y[i] - p.y_hat[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(p.y.size()));
}

double RankingLoss(const LabelPair& p) {
  CheckPair(p, 2, "ranking_loss");
  const size_t n = p.y.size();
  double sum = 0;
  uint64_t pairs = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (p.y[i] > p.y[j]) {
        sum += SoftplusNeg(p.y_hat[i] - p.y_hat[j]);
        ++pairs;
      }
    }
  }
  return pairs == 0 ? 0.0 : sum / static_cast<double>(pairs);
}

}  // namespace tensortune

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
 * \file gbdt.h
 * \brief Squared-error gradient boosting with exact, level-wise greedy splits.
 */
#ifndef TENSORTUNE_SRC_GBDT_H_
#define TENSORTUNE_SRC_GBDT_H_

#include <vector>

#include "tensortune/featurize.h"
#include "tensortune/models.h"

namespace tensortune {
namespace detail {

struct GbdtNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  double value = 0;
};

struct GbdtTree {
  std::vector<GbdtNode> nodes;

  double Predict(const double* x) const {
    int n = 0;
    while (nodes[n].feature >= 0) n = x[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
    return nodes[n].value;
  }
};

struct GbdtEnsemble {
  GbdtConfig config;
  double base = 0;
  std::vector<GbdtTree> trees;

  double Predict(const FlatFeatures& f) const {
    double y = base;
    for (const auto& t : trees) y += t.Predict(f.values.data());
    return y;
  }
};

struct GbdtFit {
  GbdtEnsemble ensemble;
  std::vector<double> train_rmse;  // after each tree
  std::vector<double> val_rmse;
};

/*! \brief Split search fans out over features with `jobs` workers; ties go to the lower feature. */
GbdtFit FitGbdt(const std::vector<FlatFeatures>& x, const std::vector<double>& y,
                const std::vector<FlatFeatures>& val_x, const std::vector<double>& val_y,
                const GbdtConfig& cfg, int jobs);

}  // namespace detail
}  // namespace tensortune

#endif  // TENSORTUNE_SRC_GBDT_H_

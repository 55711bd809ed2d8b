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

#include "gbdt.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tensortune/common.h"

namespace tensortune {
namespace detail {
namespace {

constexpr double kMinGain = 1e-12;

struct Split {
  double gain = 0;
  int feature = -1;
  double threshold = 0;
};

double RmseOf(const std::vector<double>& pred, const std::vector<double>& y) {
  if (y.empty()) return 0;
  double s = 0;
  for (size_t i = 0; i < y.size(); ++i) s += (pred[i] - y[i]) * (pred[i] - y[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

}  // namespace

GbdtFit FitGbdt(const std::vector<FlatFeatures>& x, const std::vector<double>& y,
                const std::vector<FlatFeatures>& val_x, const std::vector<double>& val_y,
                const GbdtConfig& cfg, int jobs) {
  if (cfg.num_trees < 1 || cfg.max_depth < 1 || !(cfg.learning_rate > 0) || cfg.min_samples_leaf < 1) {
    throw DataError("gbdt config values must be > 0");
  }
  if (x.empty()) throw DataError("gbdt: empty training side");
  const size_t n = x.size();
  const int nf = kFlatLength;

  // Column copies and per-feature presorted order; constant features are skipped.
  std::vector<std::vector<double>> col(nf, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    for (int f = 0; f < nf; ++f) col[f][i] = x[i].values[f];
  }
  std::vector<int> features;
  std::vector<std::vector<uint32_t>> order(nf);
  for (int f = 0; f < nf; ++f) {
    auto [lo, hi] = std::minmax_element(col[f].begin(), col[f].end());
    if (*lo == *hi) continue;
    features.push_back(f);
    order[f].resize(n);
    std::iota(order[f].begin(), order[f].end(), 0u);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](uint32_t a, uint32_t b) { return col[f][a] < col[f][b]; });
  }

  GbdtFit fit;
  fit.ensemble.config = cfg;
  fit.ensemble.base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> pred(n, fit.ensemble.base), val_pred(val_y.size(), fit.ensemble.base);
  std::vector<double> residual(n);
  std::vector<int> node_of(n);
  const int64_t min_leaf = cfg.min_samples_leaf;

  for (int tree_idx = 0; tree_idx < cfg.num_trees; ++tree_idx) {
    for (size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
    GbdtTree tree;
    tree.nodes.emplace_back();
    std::fill(node_of.begin(), node_of.end(), 0);
    struct Stat {
      int64_t count = 0;
      double sum = 0;
    };
    std::vector<Stat> stats(1);
    for (size_t i = 0; i < n; ++i) {
      stats[0].count += 1;
      stats[0].sum += residual[i];
    }
    std::vector<int> active = {0};

    for (int depth = 0; depth < cfg.max_depth && !active.empty(); ++depth) {
      std::vector<int> slot_of(tree.nodes.size(), -1);
      for (size_t s = 0; s < active.size(); ++s) slot_of[active[s]] = static_cast<int>(s);
      std::vector<std::vector<Split>> best(features.size(), std::vector<Split>(active.size()));
      ParallelFor(features.size(), jobs, [&](size_t fi) {
        const int f = features[fi];
        struct Acc {
          int64_t count = 0;
          double sum = 0;
          double last = 0;
        };
        std::vector<Acc> acc(active.size());
        auto& out = best[fi];
        for (uint32_t i : order[f]) {
          int slot = slot_of[node_of[i]];
          if (slot < 0) continue;
          Acc& a = acc[slot];
          const double v = col[f][i];
          if (a.count > 0 && v > a.last) {
            const Stat& total = stats[active[slot]];
            const int64_t right = total.count - a.count;
            if (a.count >= min_leaf && right >= min_leaf) {
              const double rsum = total.sum - a.sum;
              const double gain = a.sum * a.sum / a.count + rsum * rsum / right -
                                  total.sum * total.sum / total.count;
              if (gain > out[slot].gain) {
                double thr = 0.5 * (a.last + v);
                if (!(thr < v)) thr = a.last;
                out[slot] = {gain, f, thr};
              }
            }
          }
          a.count += 1;
          a.sum += residual[i];
          a.last = v;
        }
      });

      std::vector<int> next_active;
      std::vector<int> split_left(tree.nodes.size(), -1);
      for (size_t s = 0; s < active.size(); ++s) {
        Split chosen;
        for (size_t fi = 0; fi < features.size(); ++fi) {
          if (best[fi][s].gain > chosen.gain) chosen = best[fi][s];
        }
        if (chosen.feature < 0 || chosen.gain <= kMinGain) continue;
        const int node = active[s];
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats.resize(tree.nodes.size());
        tree.nodes[node].feature = chosen.feature;
        tree.nodes[node].threshold = chosen.threshold;
        tree.nodes[node].left = left;
        tree.nodes[node].right = left + 1;
        split_left[node] = left;
        next_active.push_back(left);
        next_active.push_back(left + 1);
      }
      for (size_t i = 0; i < n; ++i) {
        const int node = node_of[i];
        if (node >= static_cast<int>(split_left.size()) || split_left[node] < 0) continue;
        const GbdtNode& nd = tree.nodes[node];
        const int child = col[nd.feature][i] <= nd.threshold ? nd.left : nd.right;
        node_of[i] = child;
        stats[child].count += 1;
        stats[child].sum += residual[i];
      }
      active = std::move(next_active);
    }
    for (size_t k = 0; k < tree.nodes.size(); ++k) {
      if (tree.nodes[k].feature < 0 && stats[k].count > 0) {
        tree.nodes[k].value = cfg.learning_rate * stats[k].sum / static_cast<double>(stats[k].count);
      }
    }
    for (size_t i = 0; i < n; ++i) pred[i] += tree.nodes[node_of[i]].value;
    for (size_t i = 0; i < val_y.size(); ++i) val_pred[i] += tree.Predict(val_x[i].values.data());
    fit.train_rmse.push_back(RmseOf(pred, y));
    fit.val_rmse.push_back(RmseOf(val_pred, val_y));
    fit.ensemble.trees.push_back(std::move(tree));
  }
  return fit;
}

}  // namespace detail
}  // namespace tensortune

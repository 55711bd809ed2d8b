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
 * \file nn.h
 * \brief Dense-math helpers, parameter groups, Adam and input normalization
 *  shared by the neural cost models.
 *
 * Matrices are stored input-major: W[i * out + o] maps input i to output o,
 * so forward passes are sequences of axpy updates.
 */
#ifndef TENSORTUNE_SRC_NN_H_
#define TENSORTUNE_SRC_NN_H_

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tensortune/common.h"
#include "tensortune/featurize.h"

namespace tensortune {
namespace detail {

inline void Axpy(double a, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

/*! \brief Dot product with four fixed accumulators (order is deterministic). */
inline double Dot(const double* a, const double* b, int n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

/*! \brief y[out] += x[in] * W (W is in x out). */
inline void MatVecAdd(const double* w, const double* x, int in, int out, double* y) {
  for (int i = 0; i < in; ++i) {
    if (x[i] != 0.0) Axpy(x[i], w + static_cast<size_t>(i) * out, y, out);
  }
}

/*! \brief dW += x ⊗ dy and, when dx is set, dx[in] += W dy. */
inline void MatVecBackward(const double* w, const double* x, const double* dy, int in, int out,
                           double* dw, double* dx) {
  for (int i = 0; i < in; ++i) {
    const double* row = w + static_cast<size_t>(i) * out;
    if (x[i] != 0.0) Axpy(x[i], dy, dw + static_cast<size_t>(i) * out, out);
    if (dx != nullptr) dx[i] += Dot(row, dy, out);
  }
}

inline double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/*! \brief Named contiguous slice of a flat parameter vector. */
struct ParamGroup {
  std::string name;
  size_t begin = 0;
  size_t end = 0;
};

/*! \brief Flat parameter vector with named groups appended in order. */
class ParamLayout {
 public:
  size_t Add(size_t n) {
    size_t off = total_;
    total_ += n;
    return off;
  }
  void BeginGroup(const std::string& name) { groups_.push_back({name, total_, total_}); }
  void EndGroup() { groups_.back().end = total_; }
  size_t total() const { return total_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }

 private:
  size_t total_ = 0;
  std::vector<ParamGroup> groups_;
};

inline void FillUniform(Rng* rng, double limit, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = (2.0 * rng->Uniform() - 1.0) * limit;
}

/*! \brief Adam over the parameter ranges that are trainable. */
class Adam {
 public:
  Adam(size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void Step(std::vector<double>* params, const std::vector<double>& grad,
            const std::vector<ParamGroup>& trainable) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (const auto& g : trainable) {
      for (size_t i = g.begin; i < g.end; ++i) {
        m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
        v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        (*params)[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
      }
    }
  }

 private:
  double lr_;
  std::vector<double> m_, v_;
  int t_ = 0;
};

/*!
 * \brief Affine input transform x' = (x - offset) * scale.
 *
 * Kernel and schedule slots are standardized with training statistics;
 * hardware value slots use a fixed 1/8 scale and mask slots pass through, so a
 * model trained on a single target still responds to another target's values.
 */
struct Normalizer {
  std::vector<double> offset;
  std::vector<double> scale;

  void Apply(const double* x, double* out) const {
    for (size_t i = 0; i < offset.size(); ++i) out[i] = (x[i] - offset[i]) * scale[i];
  }

  /*! \brief Standardizes slots [0, fitted), fixes [fitted, fitted + 9) to 1/8, leaves the rest. */
  static Normalizer Fit(const std::vector<const double*>& rows, int width, int fitted) {
    Normalizer n;
    n.offset.assign(width, 0.0);
    n.scale.assign(width, 1.0);
    if (!rows.empty()) {
      for (int j = 0; j < fitted; ++j) {
        double mean = 0;
        for (const double* r : rows) mean += r[j];
        mean /= static_cast<double>(rows.size());
        double var = 0;
        for (const double* r : rows) var += (r[j] - mean) * (r[j] - mean);
        var /= static_cast<double>(rows.size());
        n.offset[j] = mean;
        n.scale[j] = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
      }
    }
    for (int j = fitted; j < fitted + kNumHardwareSlots && j < width; ++j) n.scale[j] = 0.125;
    return n;
  }
};

}  // namespace detail
}  // namespace tensortune

#endif  // TENSORTUNE_SRC_NN_H_

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
 * \file tuner_net.h
 * \brief Stacked bidirectional LSTM over knob steps, multi-head attention
 *  pooling with iterative re-attention, and a 2-layer sigmoid head that also
 *  reads the kernel/hardware context.
 */
#ifndef TENSORTUNE_SRC_TUNER_NET_H_
#define TENSORTUNE_SRC_TUNER_NET_H_

#include <vector>

#include "nn.h"
#include "tensortune/featurize.h"
#include "tensortune/serialization.h"

namespace tensortune {
namespace detail {

struct TunerArch {
  int layers = 3;
  int hidden = 32;  // per direction
  int heads = 2;
  int attention_dim = 16;
  int unroll_steps = 2;
  int head_hidden = 64;

  Json ToJson() const;
  static TunerArch FromJson(const Json& j);
};

class TunerNet {
 public:
  using Input = StepSequence;

  struct DirCache {
    std::vector<double> gates;  // T x 4H: activated i, f, g, o
    std::vector<double> c, tc;  // T x H: cell state and tanh(cell)
  };
  struct LayerCache {
    std::vector<double> in;  // T x in_width
    DirCache dir[2];
  };
  struct HeadCache {
    std::vector<double> keys;   // T x d
    std::vector<double> query;  // R x d
    std::vector<double> alpha;  // R x T
    std::vector<double> state;  // (R + 1) x D, row 0 is the learned initial query state
  };
  struct Cache {
    int steps = 0;
    std::vector<LayerCache> layers;
    std::vector<double> out;  // T x D, top-layer outputs
    std::vector<HeadCache> heads;
    std::vector<double> z, a1;
    double y = 0;
  };

  TunerNet(const TunerArch& arch, uint64_t seed);

  const TunerArch& arch() const { return arch_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  const ParamGroup& group(const std::string& name) const;

  double Forward(const StepSequence& in, Cache* cache) const;
  void Backward(const Cache& cache, double dy, double* grad) const;

  std::vector<double> params;
  Normalizer context_norm;

 private:
  struct LstmOffsets {
    size_t w = 0, b = 0;
    int in = 0;
  };
  struct AttnOffsets {
    size_t u = 0, wq = 0, wk = 0;
  };

  int OutWidth() const { return 2 * arch_.hidden; }
  int HeadInput() const { return arch_.heads * OutWidth() + kContextLength; }
  void LstmForward(const LstmOffsets& p, const double* in, int steps, bool reverse, DirCache* dc,
                   double* out, int out_stride) const;
  void LstmBackward(const LstmOffsets& p, const double* in, const DirCache& dc, int steps,
                    bool reverse, const double* dout, int dout_stride, double* grad,
                    double* din) const;
  /*! \brief Iterative re-attention: each pass queries with the previous pooled state. */
  void AttendForward(const AttnOffsets& p, const double* h, int steps, HeadCache* hc) const;
  void AttendBackward(const AttnOffsets& p, const double* h, int steps, const HeadCache& hc,
                      const double* dstate, double* grad, double* dh) const;

  TunerArch arch_;
  std::vector<std::vector<LstmOffsets>> lstm_;  // [layer][direction]
  std::vector<AttnOffsets> attn_;
  size_t w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;
  std::vector<ParamGroup> groups_;
};

/*! \brief Fixed scaling of the per-step inputs: kind one-hot, log2 knob / 4, axis / 2. */
inline constexpr double kStepScale[kStepWidth] = {1, 1, 1, 1, 0.25, 0.5};

}  // namespace detail
}  // namespace tensortune

#endif  // TENSORTUNE_SRC_TUNER_NET_H_

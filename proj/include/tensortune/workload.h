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
 * \file tensortune/workload.h
 * \brief FLOPs accounting per operator and per-operator dataset characterization.
 */
#ifndef TENSORTUNE_WORKLOAD_H_
#define TENSORTUNE_WORKLOAD_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tensortune/dataset.h"

namespace tensortune {

/*!
 * \brief Per-element cost of elementwise operators: 1 for add/multiply/divide/relu,
 *  4 for tanh and fast-tanh (polynomial approximation), 5 for softmax-norm.
 */
int64_t ElementwiseCost(OpKind op);

/*!
 * \brief Deterministic FLOPs count of a kernel.
 *
 * matmul counts 2*M*K*N, conv2d 2*N*Hout*Wout*Cout*Kh*Kw*Cin, and
 * conv2d-winograd half of the direct conv2d count.
 * \throws NumericError when the count does not fit in a signed 64-bit integer.
 */
int64_t FlopCount(const Kernel& kernel);

struct OpCharacterization {
  OpKind op = OpKind::kElementwiseAdd;
  // A class missing from shape_count means the operator is absent there ("NA").
  std::map<HardwareClass, int64_t> shape_count;
  // Missing when the class has no valid record of this operator.
  std::map<HardwareClass, double> max_gflops;
  Shape best_shape;
  std::map<std::string, double> mean_exec_time_ms;
  std::map<std::string, int64_t> valid_record_count;
};

/*! \brief One entry per operator present in the dataset, in registry order. */
std::vector<OpCharacterization> Characterize(const Dataset& ds);

/*! \brief Aligned-column text table; targets become mean-time columns. */
std::string FormatCharacterizationTable(const std::vector<OpCharacterization>& rows);
/*! \brief One JSON object per line, same content as the table. */
std::string FormatCharacterizationLines(const std::vector<OpCharacterization>& rows);

}  // namespace tensortune

#endif  // TENSORTUNE_WORKLOAD_H_

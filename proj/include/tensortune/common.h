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
 * \file tensortune/common.h
 * \brief Error types, seeded randomness and hashing shared by every module.
 */
#ifndef TENSORTUNE_COMMON_H_
#define TENSORTUNE_COMMON_H_

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tensortune {

/*! \brief Base class of every error raised by the library. */
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/*! \brief Malformed input, dangling reference or violated precondition on data. */
class DataError : public Error {
 public:
  using Error::Error;
};

/*! \brief NaN/overflow during arithmetic or training. */
class NumericError : public Error {
 public:
  using Error::Error;
};

/*!
 * \brief Seeded generator with platform-independent derived draws.
 *
 * std::uniform_*_distribution and std::shuffle are implementation defined, so
 * every draw used for reproducible outputs goes through this class instead.
 */
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  /*! \brief Uniform double in [0, 1) with 53 random bits. */
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /*! \brief Uniform integer in [0, n), unbiased. */
  uint64_t UniformInt(uint64_t n);
  /*! \brief Standard normal draw (Box-Muller). */
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T>* items) {
    for (size_t i = items->size(); i > 1; --i) {
      size_t j = static_cast<size_t>(UniformInt(i));
      std::swap((*items)[i - 1], (*items)[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/*! \brief 64-bit FNV-1a over bytes. */
uint64_t Fnv1a64(std::string_view bytes, uint64_t seed = 0xcbf29ce484222325ULL);
/*! \brief SplitMix64 finalizer; used to derive independent seeds. */
uint64_t SplitMix64(uint64_t x);
/*! \brief Lower-case hex rendering of a 64-bit digest. */
std::string HexDigest(uint64_t digest);

/*!
 * \brief Runs fn(i) for i in [0, n) over up to `jobs` threads.
 *
 * Callers must write results to per-index slots; any reduction happens
 * afterwards in index order so the outcome is independent of `jobs`.
 */
void ParallelFor(size_t n, int jobs, const std::function<void(size_t)>& fn);

/*! \brief Number of worker threads to use when the caller passes 0. */
int DefaultJobs();

}  // namespace tensortune

#endif  // TENSORTUNE_COMMON_H_

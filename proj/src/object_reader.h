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
 * \file object_reader.h
 * \brief Strict field-by-field reader over a JSON object (internal).
 */
#ifndef TENSORTUNE_SRC_OBJECT_READER_H_
#define TENSORTUNE_SRC_OBJECT_READER_H_

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "tensortune/serialization.h"

namespace tensortune {
namespace detail {

class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string_view what, bool lenient);

  const Json* Optional(std::string_view key);
  const Json& Required(std::string_view key);
  std::string String(std::string_view key);
  int64_t Int(std::string_view key);
  std::optional<int64_t> OptionalInt(std::string_view key);
  double Number(std::string_view key);
  bool Bool(std::string_view key);
  /*! \brief Throws on any field that was never read, unless lenient. */
  void Finish() const;

 private:
  const Json& json_;
  std::string what_;
  bool lenient_;
  std::set<std::string, std::less<>> consumed_;
};

}  // namespace detail
}  // namespace tensortune

#endif  // TENSORTUNE_SRC_OBJECT_READER_H_

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
 * \file tensortune/serialization.h
 * \brief JSON codecs for the dataset types. Decoders are strict by default:
 *  unknown fields and wrong types raise DataError.
 */
#ifndef TENSORTUNE_SERIALIZATION_H_
#define TENSORTUNE_SERIALIZATION_H_

#include <json.hpp>

#include <string>

#include "tensortune/dataset.h"
#include "tensortune/hardware.h"

namespace tensortune {

using Json = nlohmann::ordered_json;

Json HardwareToJson(const HardwareParams& hw);
HardwareParams HardwareFromJson(const Json& j, bool lenient = false);

Json KernelToJson(const Kernel& k);
Kernel KernelFromJson(const Json& j, bool lenient = false);

Json ScheduleToJson(const ScheduleConfig& s);
ScheduleConfig ScheduleFromJson(const Json& j, bool lenient = false);

/*! \brief Decimal text of a cost with 17 significant digits (exact round trip). */
std::string FormatCost(double seconds);

/*! \brief Reads a whole JSON document from a file; DataError on failure. */
Json ReadJsonFile(const std::string& path);

}  // namespace tensortune

#endif  // TENSORTUNE_SERIALIZATION_H_

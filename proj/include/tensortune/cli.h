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
 * \file cli.h
 * \brief The `tensortune` command-line driver.
 */
#ifndef TENSORTUNE_CLI_H_
#define TENSORTUNE_CLI_H_

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tensortune {

inline constexpr std::string_view kToolVersion = "0.1.0";

/*! \brief Process exit codes. */
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/*!
 * \brief Runs one command. Results go to `out` or to files; diagnostics go to
 *  `err`. Never throws.
 * \return an ExitCode value.
 */
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int RunCli(int argc, char** argv);

}  // namespace tensortune

#endif  // TENSORTUNE_CLI_H_

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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tensortune/cli.h"
#include "tensortune/dataset.h"
#include "tensortune/serialization.h"
#include "test_util.h"

namespace tensortune {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Cli, HelpAndVersionExitZero) {
  EXPECT_EQ(Invoke({"--help"}).code, kExitOk);
  EXPECT_EQ(Invoke({"train", "--help"}).code, kExitOk);
  CliRun v = Invoke({"--version"});
  EXPECT_EQ(v.code, kExitOk);
  EXPECT_NE(v.out.find(std::string(kToolVersion)), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(Invoke({}).code, kExitUsage);
  EXPECT_EQ(Invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"split", "--ratio", "abc", "x.ds"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"train", "--model", "forest", "x.ds"}).code, kExitUsage);
}

TEST(Cli, DataErrorsExitTwo) {
  auto dir = testing_util::ScratchDir("cli_data_errors");
  CliRun r = Invoke({"characterize", (dir / "missing.ds").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("missing.ds"), std::string::npos);
  std::ofstream((dir / "bad.ds").string()) << "{not json\n";
  EXPECT_EQ(Invoke({"characterize", (dir / "bad.ds").string()}).code, kExitData);
}

TEST(Cli, PipelineWritesOutputsAndManifests) {
  auto dir = testing_util::ScratchDir("cli_pipeline");
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  ASSERT_EQ(Invoke({"gen", "--tasks", "6", "--records", "10", "--seed", "3", "--out", p("a.ds")}).code, kExitOk);
  ASSERT_EQ(Invoke({"prune", "--fraction", "0.8", "--min-records", "2", "--seed", "3", p("a.ds"), p("b.ds")}).code,
            kExitOk);
  ASSERT_EQ(Invoke({"split", "--strategy", "within_task", "--ratio", "0.2", "--seed", "3", "--out", p("s.json"),
                 p("b.ds")})
                .code,
            kExitOk);
  ASSERT_EQ(Invoke({"train", "--model", "gbdt", "--split", p("s.json"), "--out", p("m.bin"), "--report", p("tr.txt"),
                 p("b.ds")})
                .code,
            kExitOk);
  CliRun eval = Invoke({"eval", "--model", p("m.bin"), "--split", p("s.json"), "--report", p("ev.txt"), "--lines", p("ev.jsonl"),
                     p("b.ds")});
  ASSERT_EQ(eval.code, kExitOk) << eval.err;
  std::istringstream lines(ReadFile(dir / "ev.jsonl"));
  std::string line;
  std::vector<std::string> sides;
  while (std::getline(lines, line)) sides.push_back(Json::parse(line).at("side").get<std::string>());
  EXPECT_EQ(sides, (std::vector<std::string>{"train", "test"}));
  EXPECT_NE(ReadFile(dir / "ev.txt").find("pca"), std::string::npos);

  for (const char* out : {"a.ds", "b.ds", "s.json", "m.bin"}) {
    fs::path manifest = dir / (std::string(out) + ".manifest.json");
    ASSERT_TRUE(fs::exists(manifest)) << manifest;
    Json m = Json::parse(ReadFile(manifest));
    for (const char* key : {"command", "argv", "seed", "version", "inputs", "outputs"}) {
      EXPECT_TRUE(m.contains(key)) << out << " lacks " << key;
    }
  }
  EXPECT_EQ(LoadDataset(p("a.ds")).records().size(), 60u);
}

TEST(Cli, SeedFromEnvironment) {
  auto dir = testing_util::ScratchDir("cli_env_seed");
  ::setenv("TENSORTUNE_SEED", "17", 1);
  ASSERT_EQ(Invoke({"gen", "--tasks", "2", "--records", "4", "--out", (dir / "env.ds").string()}).code, kExitOk);
  ::unsetenv("TENSORTUNE_SEED");
  ASSERT_EQ(Invoke({"gen", "--tasks", "2", "--records", "4", "--seed", "17", "--out", (dir / "flag.ds").string()}).code,
            kExitOk);
  EXPECT_EQ(ReadFile(dir / "env.ds"), ReadFile(dir / "flag.ds"));
}

TEST(Cli, BinaryExitCodes) {
  const std::string cli = TENSORTUNE_CLI_PATH;
  auto status = [&](const std::string& args) {
    int s = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("nonsense"), 1);
  EXPECT_EQ(status("characterize /nonexistent/x.ds"), 2);
  EXPECT_EQ(status("hw list"), 0);
}

}  // namespace
}  // namespace tensortune

// Copyright 2026 The cardrank Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cardrank/cli.hpp"
#include "cardrank/qpv.hpp"
#include "test_util.hpp"

namespace cardrank {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "cardrank");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cardrank-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrorsExitWithOne) {
  EXPECT_EQ(run({}).code, cli::kUsageError);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsageError);
  EXPECT_EQ(run({"stats", "-i", path("missing.jsonl")}).code, cli::kUsageError);
  EXPECT_EQ(run({"derive-labels", "-i", path("x"), "--strategy", "bogus"}).code,
            cli::kUsageError);
  EXPECT_EQ(run({"--help"}).code, cli::kOk);
}

TEST_F(CliTest, DataErrorsExitWithTwo) {
  std::ofstream(path("bad.jsonl")) << "{\"qpv_id\": 1}\n";
  const auto r = run({"stats", "-i", path("bad.jsonl")});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("line 1"), std::string::npos);
  std::ofstream(path("cfg.json")) << "{\"gbt\": {\"nonsense\": 1}}";
  std::ofstream(path("ok.jsonl")) << "";
  EXPECT_EQ(run({"--config", path("cfg.json"), "stats", "-i", path("ok.jsonl")}).code,
            cli::kDataError);
}

TEST_F(CliTest, DerivesTheWorkedExampleLabels) {
  {
    std::ofstream log(path("log.jsonl"));
    write_qpv_log(log, testing::reformulation_example());
  }
  const auto r = run({"derive-labels", "-i", path("log.jsonl"), "--strategy", "dpl"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  std::istringstream lines(r.out);
  std::string first;
  std::getline(lines, first);
  const auto j = nlohmann::json::parse(first);
  EXPECT_EQ(j.at("card_type"), "c1");
  EXPECT_NEAR(j.at("label").get<double>(), -1.4426, 1e-4);
}

TEST_F(CliTest, SynthPipelineIsDeterministicEndToEnd) {
  const std::vector<std::string> base = {"--seed", "5"};
  auto cmd = [&](std::vector<std::string> args) {
    args.insert(args.begin(), base.begin(), base.end());
    const auto r = run(args);
    EXPECT_EQ(r.code, cli::kOk) << r.err;
    return r;
  };
  for (const char* tag : {"a", "b"}) {
    const std::string t = tag;
    cmd({"synth-gen", "-o", path("log" + t), "--truth", path("truth" + t), "--judgments",
         path("judg" + t), "--sessions", "600", "--queries", "30"});
    cmd({"derive-labels", "-i", path("log" + t), "--strategy", "ltl", "-o", path("labels" + t)});
    cmd({"train", "-i", path("labels" + t), "--log", path("log" + t), "--trees", "10", "-o",
         path("model" + t)});
    cmd({"cross-validate", "-i", path("log" + t), "--strategy", "apl", "--trees", "10", "-o",
         path("cv" + t), "--tsv", path("cv" + t + ".tsv")});
  }
  for (const char* f : {"log", "truth", "judg", "labels", "model", "cv", "cv.tsv"}) {
    const std::string name = f;
    const auto a = slurp(dir_ / (name == "cv.tsv" ? "cva.tsv" : name + "a"));
    const auto b = slurp(dir_ / (name == "cv.tsv" ? "cvb.tsv" : name + "b"));
    EXPECT_FALSE(a.empty()) << name;
    EXPECT_EQ(a, b) << name;
  }
  const auto cv = nlohmann::json::parse(slurp(dir_ / "cva"));
  EXPECT_EQ(cv.at("folds").size(), 5u);
  EXPECT_EQ(cv.at("strategy"), "apl");
}

TEST_F(CliTest, EvaluateOracleAndRankedModel) {
  ASSERT_EQ(run({"synth-gen", "-o", path("log"), "--truth", path("truth"), "--sessions", "400",
                 "--queries", "20"})
                .code,
            cli::kOk);
  auto r = run({"evaluate", "-i", path("log"), "--truth", path("truth")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto m = nlohmann::json::parse(r.out);
  EXPECT_GE(m.at("tpr").get<double>(), 0.0);

  ASSERT_EQ(run({"derive-labels", "-i", path("log"), "--strategy", "ll", "-o", path("ll")}).code,
            cli::kOk);
  ASSERT_EQ(run({"train", "-i", path("ll"), "--log", path("log"), "--trees", "5", "-o",
                 path("model")})
                .code,
            cli::kOk);
  std::ofstream(path("req")) << R"({"query":"query_00","candidates":["NewsCard","WebCard"],"qpv_id":"x"})"
                             << "\n";
  r = run({"rank", "-m", path("model"), "--log", path("log"), "-i", path("req")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto p = nlohmann::json::parse(r.out);
  EXPECT_EQ(p.at("qpv_id"), "x");
  const auto ranking = p.at("ranking").get<std::vector<std::string>>();
  EXPECT_GE(ranking.size(), 1u);
  EXPECT_LE(ranking.size(), 2u);
  r = run({"evaluate", "-i", path("log"), "-m", path("model"), "--log", path("log")});
  EXPECT_EQ(r.code, cli::kOk) << r.err;
}

TEST_F(CliTest, FitLtlWritesModelsAndValues) {
  ASSERT_EQ(run({"synth-gen", "-o", path("log"), "--sessions", "300", "--queries", "10"}).code,
            cli::kOk);
  const auto r = run({"fit-ltl", "-i", path("log"), "-o", path("models"), "--values",
                      path("values.tsv")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto values = slurp(dir_ / "values.tsv");
  EXPECT_EQ(values.rfind("query\tcard\tclick_value", 0), 0u);
  const auto stats = run({"stats", "-i", path("log")});
  ASSERT_EQ(stats.code, cli::kOk);
  EXPECT_GT(nlohmann::json::parse(stats.out).at("num_qpvs").get<int>(), 0);
}

}  // namespace
}  // namespace cardrank

/*
 * Copyright 2026 The Uplift Eval Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "uplift/cli.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "uplift/data_model.h"
#include "uplift/text.h"

namespace uplift {
namespace {

using ::testing::HasSubstr;
namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "uplift_eval");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string ValueOf(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  if (pos == std::string::npos) return "";
  const auto start = text.find_first_not_of(' ', pos + key.size());
  return text.substr(start, text.find('\n', start) - start);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("uplift_cli_" +
            std::string(::testing::UnitTest::GetInstance()
                            ->current_test_info()
                            ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string Path(const std::string& name) const { return dir_ / name; }

  // A small toy3 dataset with embedded model scores.
  std::string MakeData(const std::string& name = "data.csv") {
    const auto r = Invoke({"--seed", "3", "--output", Path(name), "generate",
                        "--builtin", "toy3", "--n", "600"});
    EXPECT_EQ(r.code, 0) << r.err;
    return Path(name);
  }

  fs::path dir_;
};

TEST_F(CliTest, GenerateIsDeterministic) {
  MakeData("a.csv");
  MakeData("b.csv");
  EXPECT_EQ(Slurp(Path("a.csv")), Slurp(Path("b.csv")));
  EXPECT_EQ(Slurp(Path("a.truth.csv")), Slurp(Path("b.truth.csv")));
  EXPECT_FALSE(Slurp(Path("a.csv")).empty());
}

TEST_F(CliTest, SeedComesFromEnvironment) {
  ::setenv("UPLIFT_EVAL_SEED", "77", 1);
  const auto r = Invoke({"--output", Path("d.csv"), "generate", "--builtin",
                      "toy1", "--n", "40"});
  ::unsetenv("UPLIFT_EVAL_SEED");
  EXPECT_EQ(r.code, 0);
  EXPECT_THAT(r.out, HasSubstr("seed: 77"));
}

TEST_F(CliTest, BadSpecIsUsageError) {
  std::ofstream(Path("spec.json")) << R"({"n": 100, "groups": [
      {"label": "a", "share": 0.5, "treatment_prob": 0.5,
       "beta_treated": 0.2, "beta_control": 0.1, "model_score": 1},
      {"label": "b", "share": 0.4, "treatment_prob": 0.5,
       "beta_treated": 0.2, "beta_control": 0.1, "model_score": 0}]})";
  const auto r = Invoke({"--output", Path("d.csv"), "generate", "--spec",
                      Path("spec.json")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_THAT(r.err, HasSubstr("validation"));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Invoke({}).code, kExitUsage);
  EXPECT_EQ(Invoke({"evaluate"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"evaluate", "x.csv", "--bogus"}).code, kExitUsage);
  const auto data = MakeData();
  EXPECT_EQ(Invoke({"evaluate", data, "--estimator", "v1", "--nu", "0.5"}).code,
            kExitUsage);
  EXPECT_EQ(Invoke({"evaluate", data, "--estimator", "ips-local"}).code,
            kExitUsage);
  EXPECT_EQ(Invoke({"evaluate", data, "--estimator", "nope"}).code, kExitUsage);
}

TEST_F(CliTest, MissingFileIsRuntimeError) {
  EXPECT_EQ(Invoke({"evaluate", Path("missing.csv")}).code, kExitRuntime);
}

TEST_F(CliTest, VnuAtZeroMatchesV1) {
  const auto data = MakeData();
  const auto v1 = Invoke({"evaluate", data, "--estimator", "v1"});
  const auto vnu = Invoke({"evaluate", data, "--estimator", "vnu", "--nu", "0"});
  ASSERT_EQ(v1.code, 0) << v1.err;
  ASSERT_EQ(vnu.code, 0) << vnu.err;
  EXPECT_EQ(ValueOf(v1.out, "auuc:"), ValueOf(vnu.out, "auuc:"));
  EXPECT_EQ(ValueOf(v1.out, "endpoint:"), ValueOf(vnu.out, "endpoint:"));
}

TEST_F(CliTest, WritesMetricsAndCurve) {
  const auto data = MakeData();
  const auto r = Invoke({"--output", Path("m.json"), "evaluate", data});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(Slurp(Path("m.json")));
  EXPECT_EQ(j["curve"]["path"], Path("m.curve.csv"));
  const std::string curve = Slurp(Path("m.curve.csv"));
  EXPECT_EQ(curve.substr(0, curve.find('\n')), "k,x,value");
  EXPECT_EQ(FormatDouble(j["auuc"].get<double>()), ValueOf(r.out, "auuc:"));
}

TEST_F(CliTest, SeparateRelativeEndpointIsAte) {
  const auto data = MakeData();
  const auto r = Invoke({"evaluate", data, "--estimator", "table1:uplift-sep-rel"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto d = LoadDatasetFile(data);
  double rt = 0, nt = 0, rc = 0, nc = 0;
  for (const auto& rec : d.records()) {
    if (rec.treatment == 1) {
      rt += rec.outcome;
      nt += 1;
    } else {
      rc += rec.outcome;
      nc += 1;
    }
  }
  EXPECT_NEAR(std::stod(ValueOf(r.out, "endpoint:")), rt / nt - rc / nc,
              1e-12);
}

TEST_F(CliTest, DegenerateWindowIsRuntimeError) {
  // All treated rows first: a one-record window sees only one arm.
  std::ofstream(Path("d.csv"))
      << "unit_id,features,treatment,outcome,propensity,score\n"
         "1,a,1,1,0.5,4\n2,a,1,0,0.5,3\n3,a,0,1,0.5,2\n4,a,0,0,0.5,1\n";
  const auto r = Invoke({"evaluate", Path("d.csv"), "--estimator", "ips-local",
                      "--kernel-width", "1"});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_THAT(r.err, HasSubstr("degenerate"));
}

TEST_F(CliTest, CounterexampleToy1) {
  const auto r = Invoke({"counterexample", "toy1", "--n", "4000",
                      "--realizations", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_THAT(r.out, HasSubstr("u_hat_n"));
  EXPECT_THAT(r.out, HasSubstr("AUUC misranks: true"));
  EXPECT_EQ(Invoke({"counterexample", "toy9"}).code, kExitUsage);
}

TEST_F(CliTest, PeheOfIdenticalFilesIsZero) {
  std::ofstream(Path("t.csv")) << "tau\n1\n-1\n0.5\n";
  const auto r = Invoke({"pehe", Path("t.csv"), Path("t.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_THAT(r.out, HasSubstr("PEHE: 0\n"));
  std::ofstream(Path("p.csv")) << "tau_hat\n1\n";
  EXPECT_EQ(Invoke({"pehe", Path("t.csv"), Path("p.csv")}).code, kExitUsage);
}

TEST_F(CliTest, VarianceStudyIsReproducible) {
  std::ofstream(Path("cfg.json"))
      << R"({"heterogeneous": {"segments": 4, "alpha": 0.5, "p_y1": 0.4,
             "n": 400}, "nus": [0, 0.5, 1], "realizations": 6, "seed": 9})";
  for (const char* name : {"a.csv", "b.csv"}) {
    const auto r = Invoke({"--output", Path(name), "--format", "csv",
                        "variance-study", "--config", Path("cfg.json")});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const std::string a = Slurp(Path("a.csv"));
  EXPECT_EQ(a, Slurp(Path("b.csv")));
  EXPECT_EQ(a.substr(0, a.find('\n')), "nu,p_y1,mean,var");
}

TEST_F(CliTest, NuSweepSmall) {
  const auto r = Invoke({"nu-sweep", "--p-y1", "0.3", "0.6", "--nus", "0", "1",
                      "--segments", "4", "--n", "300", "--realizations", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_THAT(r.out, HasSubstr("argmin slope vs P(Y=1)"));
}

}  // namespace
}  // namespace uplift

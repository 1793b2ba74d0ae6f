//
// Copyright 2026 The NameShift Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nameshift/corpus.hpp"
#include "nameshift/report.hpp"

namespace ns = nameshift;
namespace fs = std::filesystem;

namespace {

const std::string kCli = NAMESHIFT_CLI_BIN;
const std::string kMock = NAMESHIFT_MOCK_BIN;
const std::string kData = NAMESHIFT_DATA_DIR;

struct RunResult {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run(const std::string& cmd) {
  RunResult r;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) r.output.append(buf, n);
  int status = pclose(pipe);
  if (WIFEXITED(status)) r.code = WEXITSTATUS(status);
  return r;
}

std::string tmp_dir() {
  auto dir = fs::temp_directory_path() / "nameshift_cli_test";
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string probe_cmd(const std::string& out, const std::string& extra = "") {
  return kCli + " probe --dataset " + kData + "/classify_test.jsonl" +
         " --lexicon " + kData + "/person_lexicon.jsonl" +
         " --oracle table:" + kData + "/remote_rules.json" +
         " --metric binary_f1 --entity-type person --budget 6 --runs 3" +
         " --seed 9 " + extra + " --out " + out;
}

}  // namespace

TEST(Cli, ProbeWritesReportRendersScoresAndGroupsFrequencies) {
  auto out = tmp_dir() + "/probe.json";
  auto r = run(probe_cmd(out, "--frequencies " + kData +
                                  "/name_frequencies.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("command: probe"), std::string::npos);
  EXPECT_NE(r.output.find("stability:"), std::string::npos);
  EXPECT_NE(r.output.find("by replacement length:"), std::string::npos);

  auto j = ns::Json::parse(slurp(out));
  ASSERT_NO_THROW(ns::validate_report(j));
  EXPECT_EQ(j.at("command").get<std::string>(), "probe");
  EXPECT_EQ(j.at("per_instance").size(), 60u);
  ASSERT_TRUE(j.contains("frequency_groups"));
  ASSERT_FALSE(j.at("frequency_groups").empty());
  const auto& row = j.at("frequency_groups")[0];
  EXPECT_TRUE(row.contains("name"));
  EXPECT_TRUE(row.contains("frequency"));
  EXPECT_TRUE(row.contains("mean_score"));
  EXPECT_TRUE(row.contains("draws"));
}

TEST(Cli, WorkerCountsAndRepeatsProduceByteIdenticalReports) {
  auto dir = tmp_dir();
  auto r1 = run(probe_cmd(dir + "/p1.json", "--workers 1"));
  auto r1b = run(probe_cmd(dir + "/p1b.json", "--workers 1"));
  auto r8 = run(probe_cmd(dir + "/p8.json", "--workers 8"));
  ASSERT_EQ(r1.code, 0) << r1.output;
  ASSERT_EQ(r1b.code, 0);
  ASSERT_EQ(r8.code, 0);
  auto bytes1 = slurp(dir + "/p1.json");
  EXPECT_FALSE(bytes1.empty());
  EXPECT_EQ(bytes1, slurp(dir + "/p1b.json"));
  EXPECT_EQ(bytes1, slurp(dir + "/p8.json"));

  auto trigger_cmd = [&](const std::string& out, const std::string& extra) {
    return kCli + " trigger --dataset " + kData + "/classify_test.jsonl" +
           " --lexicon " + kData + "/person_lexicon.jsonl" +
           " --oracle table:" + kData + "/remote_rules.json" +
           " --metric binary_f1 --entity-type person --budget 5" +
           " --iterations 4 --seed 2 " + extra + " --out " + out;
  };
  auto t1 = run(trigger_cmd(dir + "/t1.json", "--workers 1"));
  auto t8 = run(trigger_cmd(dir + "/t8.json", "--workers 8"));
  ASSERT_EQ(t1.code, 0) << t1.output;
  ASSERT_EQ(t8.code, 0);
  EXPECT_EQ(slurp(dir + "/t1.json"), slurp(dir + "/t8.json"));
  EXPECT_EQ(slurp(dir + "/t1.csv"), slurp(dir + "/t8.csv"));
}

TEST(Cli, TriggerWritesRankingAndCandidateCsv) {
  auto dir = tmp_dir();
  auto out = dir + "/trigger.json";
  auto r = run(kCli + " trigger --dataset " + kData +
               "/classify_test.jsonl --lexicon " + kData +
               "/person_lexicon.jsonl --oracle table:" + kData +
               "/remote_rules.json --metric binary_f1 --entity-type person" +
               " --budget 5 --iterations 4 --seed 2 --out " + out);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("top candidates"), std::string::npos);

  auto j = ns::Json::parse(slurp(out));
  ASSERT_NO_THROW(ns::validate_report(j));
  EXPECT_EQ(j.at("command").get<std::string>(), "trigger");
  EXPECT_EQ(j.at("candidates").size(), 15u);

  auto csv = slurp(dir + "/trigger.csv");
  EXPECT_EQ(csv.rfind("name,alpha,beta,posterior_mean,times_sampled\n", 0),
            0u);
  EXPECT_EQ(static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n')),
            16u);  // header plus one row per lexicon name
}

TEST(Cli, DefendComparesUndefendedAndDefendedArms) {
  auto out = tmp_dir() + "/defend.json";
  auto r = run(kCli + " defend --dataset " + kData +
               "/classify_test.jsonl --lexicon " + kData +
               "/person_lexicon.jsonl --canonical " + kData +
               "/canonical_person.jsonl --oracle table:" + kData +
               "/remote_rules.json --metric binary_f1 --entity-type person" +
               " --budget 4 --runs 2 --m 3 --temperature 2 --seed 5 --out " +
               out);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("undefended"), std::string::npos);
  EXPECT_NE(r.output.find("defense: M=3"), std::string::npos);

  auto j = ns::Json::parse(slurp(out));
  ASSERT_NO_THROW(ns::validate_report(j));
  EXPECT_EQ(j.at("command").get<std::string>(), "defend");
  EXPECT_LE(j.at("scores").at("undefended").at("worst").get<double>(),
            j.at("scores").at("undefended").at("original").get<double>());
}

TEST(Cli, EvalCalibrateAndReportRoundTrip) {
  auto dir = tmp_dir();
  auto eval_out = dir + "/eval.json";
  auto r = run(kCli + " eval --dataset " + kData +
               "/classify_test.jsonl --oracle table:" + kData +
               "/remote_rules.json --metric binary_f1 --out " + eval_out);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("score:"), std::string::npos);

  auto c = run(kCli + " calibrate --dataset " + kData +
               "/classify_test.jsonl --oracle table:" + kData +
               "/remote_rules.json --out " + dir + "/cal.json");
  ASSERT_EQ(c.code, 0) << c.output;
  EXPECT_NE(c.output.find("fitted temperature:"), std::string::npos);
  auto cj = ns::Json::parse(slurp(dir + "/cal.json"));
  EXPECT_GT(cj.at("fitted_temperature").get<double>(), 0.0);

  auto render = run(kCli + " report " + eval_out);
  ASSERT_EQ(render.code, 0);
  EXPECT_NE(render.output.find("command: eval"), std::string::npos);

  auto to_file = run(kCli + " report " + eval_out + " --out " + dir +
                     "/eval.txt");
  ASSERT_EQ(to_file.code, 0);
  EXPECT_NE(slurp(dir + "/eval.txt").find("command: eval"),
            std::string::npos);
}

TEST(Cli, BadConfigurationExitsWithCodeTwo) {
  auto out = tmp_dir() + "/never.json";

  auto missing = run(kCli + " probe --dataset /no/such/file.jsonl" +
                     " --lexicon " + kData + "/person_lexicon.jsonl" +
                     " --oracle table:" + kData + "/remote_rules.json" +
                     " --metric binary_f1 --entity-type person --out " + out);
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.output.find("file does not exist"), std::string::npos);

  auto bad_budget = run(probe_cmd(out, "--budget 0"));
  EXPECT_EQ(bad_budget.code, 2);
  EXPECT_NE(bad_budget.output.find("budget"), std::string::npos);

  auto bad_metric = run(kCli + " eval --dataset " + kData +
                        "/classify_test.jsonl --oracle table:" + kData +
                        "/remote_rules.json --metric roc_auc --out " + out);
  EXPECT_EQ(bad_metric.code, 2);
  EXPECT_NE(bad_metric.output.find("unknown metric"), std::string::npos);

  auto metric_mismatch = run(kCli + " eval --dataset " + kData +
                             "/classify_test.jsonl --oracle table:" + kData +
                             "/remote_rules.json --metric edit_f05 --out " +
                             out);
  EXPECT_EQ(metric_mismatch.code, 2);

  auto missing_flag = run(kCli + " probe --dataset " + kData +
                          "/classify_test.jsonl");
  EXPECT_EQ(missing_flag.code, 2);

  auto unknown_sub = run(kCli + " audit --out " + out);
  EXPECT_EQ(unknown_sub.code, 2);

  auto help = run(kCli + " probe --help");
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.output.find("--budget"), std::string::npos);
}

TEST(Cli, MalformedDataExitsWithCodeFour) {
  auto dir = tmp_dir();
  auto out = dir + "/never.json";

  auto garbled = dir + "/garbled.jsonl";
  std::ofstream(garbled) << "this is not json\n";
  auto parse_fail = run(kCli + " eval --dataset " + garbled +
                        " --oracle table:" + kData +
                        "/remote_rules.json --metric binary_f1 --out " + out);
  EXPECT_EQ(parse_fail.code, 4);
  EXPECT_NE(parse_fail.output.find("data error"), std::string::npos);

  auto empty = dir + "/empty.jsonl";
  std::ofstream(empty) << "";
  auto empty_fail = run(kCli + " eval --dataset " + empty +
                        " --oracle table:" + kData +
                        "/remote_rules.json --metric binary_f1 --out " + out);
  EXPECT_EQ(empty_fail.code, 4);
  EXPECT_NE(empty_fail.output.find("dataset is empty"), std::string::npos);

  auto not_report = dir + "/not_report.json";
  std::ofstream(not_report) << "{{{\n";
  auto render_fail = run(kCli + " report " + not_report);
  EXPECT_EQ(render_fail.code, 4);
  EXPECT_NE(render_fail.output.find("not valid JSON"), std::string::npos);
}

TEST(Cli, OracleFailureExitsWithCodeThreeAndWritesPartialReport) {
  auto out = tmp_dir() + "/partial.json";
  auto r = run(kCli + " probe --dataset " + kData +
               "/coref_corpus.jsonl --lexicon " + kData +
               "/person_lexicon.jsonl --oracle remote:http://127.0.0.1:9" +
               " --metric cluster_link_f1 --entity-type person --budget 2" +
               " --runs 1 --seed 1 --out " + out);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.output.find("partial report written"), std::string::npos);

  auto j = ns::Json::parse(slurp(out));
  ASSERT_NO_THROW(ns::validate_report(j));
  EXPECT_TRUE(j.value("partial", false));

  auto render = run(kCli + " report " + out);
  ASSERT_EQ(render.code, 0);
  EXPECT_NE(render.output.find("PARTIAL RESULTS:"), std::string::npos);
}

TEST(Cli, RemoteOracleAgainstMockServerBinaryMatchesTableOracle) {
  FILE* server = popen((kMock + " --table " + kData +
                        "/remote_rules.json --port 18731 2>&1")
                           .c_str(),
                       "r");
  ASSERT_NE(server, nullptr);
  char line[256];
  ASSERT_NE(fgets(line, sizeof(line), server), nullptr);
  std::string url(line);
  while (!url.empty() && (url.back() == '\n' || url.back() == '\r'))
    url.pop_back();
  ASSERT_EQ(url, "http://127.0.0.1:18731");

  auto dir = tmp_dir();
  auto common = std::string(" --dataset ") + kData +
                "/remote_corpus.jsonl --lexicon " + kData +
                "/person_lexicon.jsonl --metric binary_f1" +
                " --entity-type person --budget 4 --runs 2 --seed 3 --out ";
  auto remote = run(kCli + " probe --oracle remote:" + url + common + dir +
                    "/remote.json");
  auto local = run(kCli + " probe --oracle table:" + kData +
                   "/remote_rules.json" + common + dir + "/local.json");

  [[maybe_unused]] auto ignored = std::system(
      "pkill -f nameshift-mock-server >/dev/null 2>&1");
  pclose(server);

  ASSERT_EQ(remote.code, 0) << remote.output;
  ASSERT_EQ(local.code, 0) << local.output;

  // Identical scores and draws; only the echoed oracle string differs.
  auto rj = ns::Json::parse(slurp(dir + "/remote.json"));
  auto lj = ns::Json::parse(slurp(dir + "/local.json"));
  rj.erase("config_echo");
  lj.erase("config_echo");
  EXPECT_EQ(rj.dump(2), lj.dump(2));
}

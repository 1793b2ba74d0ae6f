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

#include "nameshift/report.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "nameshift/error.hpp"
#include "nameshift/metrics.hpp"
#include "nameshift/probe.hpp"

namespace ns = nameshift;
namespace fs = std::filesystem;
using nstest::classify_instance;
using nstest::classify_table;

namespace {

struct ProbeFixture {
  std::vector<ns::AnnotatedInstance> corpus;
  ns::ProbeReport probe;
  ns::RandomEvalResult random_eval;
  ns::GroupAnalysis groups;
};

ProbeFixture make_probe_fixture() {
  ProbeFixture f;
  for (int i = 0; i < 3; ++i)
    f.corpus.push_back(classify_instance("i" + std::to_string(i), 1,
                                         {"Kim", "filed", "a", "claim"}, 0,
                                         1));
  auto lexicon = nstest::name_lexicon({"Ada", "Bo"});
  auto table = classify_table({{{"Ada"}, {0.9, 0.1}}}, {0.1, 0.9});
  auto metric = ns::make_metric("binary_f1");

  ns::ProbeConfig config;
  config.budget = 3;
  config.entity_type = "person";
  config.seed = 5;

  f.probe = ns::run_probe(f.corpus, lexicon, table, *metric, config);
  f.random_eval = ns::random_replacement_eval(f.corpus, lexicon, table,
                                              *metric, 3, 5, "person");
  f.groups = ns::analyze_by_length(f.corpus, f.probe, *metric, "person");
  return f;
}

ns::Json echo() { return ns::Json{{"seed", 5}, {"oracle", "table:rules"}}; }

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST(BuildProbeReport, CarriesScoresStabilityRecordsAndGroups) {
  auto f = make_probe_fixture();
  auto j = ns::build_probe_report(f.probe, f.random_eval, f.groups, echo());
  ASSERT_NO_THROW(ns::validate_report(j));

  EXPECT_EQ(j.at("schema_version").get<int>(), ns::kReportSchemaVersion);
  EXPECT_EQ(j.at("command").get<std::string>(), "probe");
  EXPECT_EQ(j.at("config_echo").at("seed").get<int>(), 5);
  EXPECT_EQ(j.at("scores").at("original").get<double>(),
            f.probe.original_score);
  EXPECT_EQ(j.at("scores").at("worst").get<double>(), f.probe.worst_score);
  EXPECT_EQ(j.at("scores").at("best").get<double>(), f.probe.best_score);
  EXPECT_EQ(j.at("scores").at("random").at("mean").get<double>(),
            f.random_eval.mean);
  EXPECT_EQ(j.at("scores").at("random").at("runs").size(), 3u);
  EXPECT_EQ(j.at("stability").get<double>(), f.probe.stability);
  EXPECT_FALSE(j.contains("partial"));

  ASSERT_EQ(j.at("per_instance").size(), f.probe.records.size());
  const auto& rec0 = j.at("per_instance")[0];
  const auto& src0 = f.probe.records[0];
  EXPECT_EQ(rec0.at("id").get<std::string>(), src0.id);
  EXPECT_EQ(rec0.at("worst_score").get<double>(),
            src0.draws[src0.worst_draw].score);
  EXPECT_EQ(rec0.at("best_score").get<double>(),
            src0.draws[src0.best_draw].score);
  EXPECT_EQ(rec0.at("draws").size(), src0.draws.size());
  ASSERT_TRUE(rec0.at("worst_assignment").contains("n1"));
  EXPECT_TRUE(rec0.at("worst_assignment").at("n1").contains("full"));

  EXPECT_FALSE(j.at("groups").empty());
  EXPECT_TRUE(j.at("groups")[0].contains("variant"));
}

TEST(BuildProbeReport, IdenticalInputsProduceIdenticalBytes) {
  auto f = make_probe_fixture();
  auto a = ns::build_probe_report(f.probe, f.random_eval, f.groups, echo());
  auto b = ns::build_probe_report(f.probe, f.random_eval, f.groups, echo());
  EXPECT_EQ(a.dump(2), b.dump(2));
}

TEST(BuildProbeReport, PartialRunsCarryTheError) {
  auto f = make_probe_fixture();
  f.probe.partial = true;
  f.probe.error = "backend gone";
  auto j = ns::build_probe_report(f.probe, f.random_eval, f.groups, echo());
  EXPECT_TRUE(j.at("partial").get<bool>());
  EXPECT_EQ(j.at("error").get<std::string>(), "backend gone");
  auto text = ns::render_report(j);
  EXPECT_NE(text.find("PARTIAL RESULTS: backend gone"), std::string::npos);
}

TEST(BuildEvalReport, ListsPerInstanceScores) {
  auto j = ns::build_eval_report(0.75, {"a", "b"}, {1.0, 0.5}, echo());
  ASSERT_NO_THROW(ns::validate_report(j));
  EXPECT_EQ(j.at("command").get<std::string>(), "eval");
  EXPECT_EQ(j.at("scores").at("original").get<double>(), 0.75);
  ASSERT_EQ(j.at("per_instance").size(), 2u);
  EXPECT_EQ(j.at("per_instance")[1].at("id").get<std::string>(), "b");
  EXPECT_EQ(j.at("per_instance")[1].at("score").get<double>(), 0.5);
}

TEST(BuildCalibrateReport, CarriesFittedTemperatureAndGrid) {
  std::vector<double> grid{0.25, 0.5, 1.0, 2.0};
  auto j = ns::build_calibrate_report(2.0, grid, echo());
  ASSERT_NO_THROW(ns::validate_report(j));
  EXPECT_EQ(j.at("fitted_temperature").get<double>(), 2.0);
  EXPECT_EQ(j.at("grid").get<std::vector<double>>(), grid);
}

TEST(BuildTriggerReport, RanksCandidatesWithJoinedSurfaces) {
  ns::TriggerResult result;
  result.state = ns::init_trigger_state({{"Ada"}, {"Ana", "Maria"}}, 1.0, 1.0);
  result.state.params[1].alpha = 6.0;
  result.state.params[1].times_sampled = 4;
  result.ranking = {1, 0};

  auto j = ns::build_trigger_report(result, echo());
  ASSERT_NO_THROW(ns::validate_report(j));
  ASSERT_EQ(j.at("candidates").size(), 2u);
  EXPECT_EQ(j.at("candidates")[0].at("name").get<std::string>(), "Ana Maria");
  EXPECT_EQ(j.at("candidates")[0].at("alpha").get<double>(), 6.0);
  EXPECT_EQ(j.at("candidates")[0].at("times_sampled").get<size_t>(), 4u);
  EXPECT_EQ(j.at("candidates")[1].at("name").get<std::string>(), "Ada");
  EXPECT_FALSE(j.contains("partial"));
}

TEST(BuildDefendReport, CarriesBothArms) {
  auto f = make_probe_fixture();
  ns::DefendReport report;
  report.probe = f.probe;
  report.undefended.original = 1.0;
  report.undefended.worst = 0.0;
  report.undefended.best = 1.0;
  report.undefended.random_runs = {0.5, 0.7};
  report.undefended.random_mean = 0.6;
  report.undefended.random_std = 0.1414;
  report.defended.original = 1.0;
  report.defended.worst = 0.9;
  report.defended.best = 1.0;
  report.defended.random_runs = {0.95, 1.0};
  report.defended.random_mean = 0.975;
  report.defended.random_std = 0.0354;

  ns::DefendParams params;
  auto j = ns::build_defend_report(report, params, echo());
  ASSERT_NO_THROW(ns::validate_report(j));
  EXPECT_EQ(j.at("command").get<std::string>(), "defend");
  EXPECT_EQ(j.at("scores").at("undefended").at("worst").get<double>(), 0.0);
  EXPECT_EQ(j.at("scores").at("defended").at("worst").get<double>(), 0.9);
  EXPECT_EQ(j.at("defense").at("m").get<int>(), 3);
  EXPECT_EQ(j.at("defense").at("temperature").get<double>(), 2.0);
  EXPECT_EQ(j.at("stability").get<double>(), f.probe.stability);
}

TEST(ValidateReport, RejectsMalformedReports) {
  auto f = make_probe_fixture();
  auto good = ns::build_probe_report(f.probe, f.random_eval, f.groups, echo());

  {
    auto bad = good;
    bad.erase("schema_version");
    EXPECT_THROW(ns::validate_report(bad), ns::DataError);
  }
  {
    auto bad = good;
    bad["schema_version"] = ns::kReportSchemaVersion + 1;
    EXPECT_THROW(ns::validate_report(bad), ns::DataError);
  }
  {
    auto bad = good;
    bad.erase("command");
    EXPECT_THROW(ns::validate_report(bad), ns::DataError);
  }
  {
    auto bad = good;
    bad["command"] = "mystery";
    EXPECT_THROW(ns::validate_report(bad), ns::DataError);
  }
  {
    auto bad = good;
    bad.erase("stability");
    EXPECT_THROW(ns::validate_report(bad), ns::DataError);
  }
  {
    auto bad = good;
    bad["stability"] = 1.5;
    EXPECT_THROW(ns::validate_report(bad), ns::DataError);
  }
  {
    auto bad = good;
    bad["scores"].at("random").erase("std");
    EXPECT_THROW(ns::validate_report(bad), ns::DataError);
  }
  {
    auto bad = ns::build_calibrate_report(2.0, {0.25}, echo());
    bad["fitted_temperature"] = 0.0;
    EXPECT_THROW(ns::validate_report(bad), ns::DataError);
  }
  {
    ns::TriggerResult result;
    result.state = ns::init_trigger_state({{"Ada"}}, 1.0, 1.0);
    result.ranking = {0};
    auto bad = ns::build_trigger_report(result, echo());
    bad["candidates"][0].erase("beta");
    EXPECT_THROW(ns::validate_report(bad), ns::DataError);
  }
}

TEST(WriteReport, WritesPrettyJsonWithTrailingNewline) {
  auto f = make_probe_fixture();
  auto j = ns::build_probe_report(f.probe, f.random_eval, f.groups, echo());
  auto path = temp_path("nameshift_report_test.json");
  ns::write_report(j, path);

  std::ifstream in(path);
  ASSERT_TRUE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string contents = buffer.str();
  EXPECT_EQ(contents, j.dump(2) + "\n");
  EXPECT_EQ(ns::Json::parse(contents), j);
  std::remove(path.c_str());
}

TEST(WriteReport, FailsOnUnwritablePathsAndInvalidReports) {
  auto f = make_probe_fixture();
  auto j = ns::build_probe_report(f.probe, f.random_eval, f.groups, echo());
  EXPECT_THROW(ns::write_report(j, "/no-such-directory/report.json"),
               ns::ConfigError);

  auto bad = j;
  bad.erase("stability");
  auto path = temp_path("nameshift_report_invalid.json");
  EXPECT_THROW(ns::write_report(bad, path), ns::DataError);
  EXPECT_FALSE(fs::exists(path));
}

TEST(RenderReport, FormatsProbeScoresAsPercentages) {
  auto f = make_probe_fixture();
  f.probe.original_score = 0.8482;
  f.probe.worst_score = 0.7990;
  f.probe.best_score = 0.9003;
  f.probe.stability = 0.868;
  f.random_eval.mean = 0.8553;
  f.random_eval.stddev = 0.0054;

  auto j = ns::build_probe_report(f.probe, f.random_eval, f.groups, echo());
  auto text = ns::render_report(j);
  EXPECT_NE(text.find("command: probe"), std::string::npos);
  EXPECT_NE(text.find("seed: 5"), std::string::npos);
  EXPECT_NE(text.find("84.82"), std::string::npos);
  EXPECT_NE(text.find("79.90"), std::string::npos);
  EXPECT_NE(text.find("90.03"), std::string::npos);
  EXPECT_NE(text.find("85.53 (0.54)"), std::string::npos);
  EXPECT_NE(text.find("stability: 86.80% over 3 instances"),
            std::string::npos);
  EXPECT_NE(text.find("by replacement length:"), std::string::npos);
  EXPECT_EQ(text.find("PARTIAL"), std::string::npos);
}

TEST(RenderReport, FormatsDefendCalibrateTriggerAndEvalSections) {
  auto f = make_probe_fixture();
  ns::DefendReport report;
  report.probe = f.probe;
  report.probe.stability = 0.868;
  report.undefended = {0.8, 0.3, 0.9, 0.82, 0.01, {0.81, 0.83}};
  report.defended = {0.79, 0.7, 0.9, 0.8, 0.01, {0.79, 0.81}};
  auto dj = ns::build_defend_report(report, ns::DefendParams{}, echo());
  auto dtext = ns::render_report(dj);
  EXPECT_NE(dtext.find("undefended"), std::string::npos);
  EXPECT_NE(dtext.find("defended"), std::string::npos);
  EXPECT_NE(dtext.find("defense: M=3 T=2.00 default confidence=0.90"),
            std::string::npos);
  EXPECT_NE(dtext.find("stability (undefended): 86.80%"), std::string::npos);

  auto cj = ns::build_calibrate_report(2.0, {0.25, 2.0}, echo());
  EXPECT_NE(ns::render_report(cj).find("fitted temperature: 2.00"),
            std::string::npos);

  ns::TriggerResult result;
  std::vector<ns::TokenSeq> vocab;
  for (int i = 0; i < 12; ++i) vocab.push_back({"N" + std::to_string(i)});
  result.state = ns::init_trigger_state(vocab, 1.0, 1.0);
  for (size_t i = 0; i < vocab.size(); ++i) result.ranking.push_back(i);
  auto tj = ns::build_trigger_report(result, echo());
  auto ttext = ns::render_report(tj);
  size_t shown = 0;
  for (size_t pos = ttext.find("mean="); pos != std::string::npos;
       pos = ttext.find("mean=", pos + 1))
    ++shown;
  EXPECT_EQ(shown, 10u);  // long candidate lists are truncated

  auto ej = ns::build_eval_report(0.75, {"a", "b"}, {1.0, 0.5}, echo());
  EXPECT_NE(ns::render_report(ej).find("score: 75.00% over 2 instances"),
            std::string::npos);
}
